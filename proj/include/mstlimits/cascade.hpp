#pragma once

// Mandelbrot cascade Y_{n+1} = A (Y_n^(1) + ... + Y_n^(m)), A = e^{-lambda T},
// its variance limit and an empirical exponential-moment probe.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/fixpoint.hpp"
#include "mstlimits/parallel.hpp"
#include "mstlimits/random.hpp"
#include "mstlimits/stats.hpp"

namespace mst {

inline constexpr double kCascadeBudget = 1e7;

struct CascadeConfig {
  int m = 27;
  cplx lambda;
  int depth = 3;
  std::size_t replicas = 1000;
};

inline void validate(const CascadeConfig& cfg) {
  check_branching_factor(cfg.m);
  require(cfg.depth >= 0, ErrorCode::invalid_parameter, "negative cascade depth");
  require(std::pow(static_cast<double>(cfg.m), cfg.depth) <= kCascadeBudget, ErrorCode::budget_exceeded,
          "m^depth = " + std::to_string(cfg.m) + "^" + std::to_string(cfg.depth) + " exceeds 1e7");
}

/// One sample of Y_depth. Leaves are Y_0 = 1; levels are folded bottom-up, so
/// the work is the number of internal nodes (m^depth - 1)/(m - 1).
inline cplx cascade_sample(const CascadeConfig& cfg, Rng& rng) {
  validate(cfg);
  if (cfg.depth == 0) return 1.0;
  const TSampler sampler{cfg.m, TMode::beta_inverse};
  const auto m = static_cast<std::size_t>(cfg.m);
  std::size_t width = 1;
  for (int d = 1; d < cfg.depth; ++d) width *= m;
  std::vector<cplx> level(width);
  for (auto& y : level) y = std::exp(-cfg.lambda * sampler(rng)) * static_cast<double>(cfg.m);
  while (width > 1) {
    width /= m;
    for (std::size_t i = 0; i < width; ++i) {
      cplx s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += level[i * m + c];
      level[i] = std::exp(-cfg.lambda * sampler(rng)) * s;
    }
  }
  return level[0];
}

/// Replica r uses substream (seed, "cascade", r); output order is replica order.
inline std::vector<cplx> cascade_replicas(const CascadeConfig& cfg, std::uint64_t seed, unsigned threads = 1) {
  validate(cfg);
  std::vector<cplx> out(cfg.replicas);
  parallel_for(cfg.replicas, threads, [&](std::size_t r) {
    Rng rng = make_rng(seed, "cascade", r);
    out[r] = cascade_sample(cfg, rng);
  });
  return out;
}

/// (m^2 E|A|^2 - 1) / (1 - m E|A|^2), E|A|^2 = laplace_T(m, 2 Re lambda).
inline double variance_limit(int m, cplx lambda) {
  const double a2 = laplace_T(m, 2.0 * lambda.real()).real();
  const double denom = 1.0 - m * a2;
  require(denom > 0.0, ErrorCode::not_square_integrable_regime,
          "m E|A|^2 = " + std::to_string(m * a2) + " >= 1");
  return (static_cast<double>(m) * m * a2 - 1.0) / denom;
}

/// Var Y_depth from the recursion v_{n+1} = (m^2 E|A|^2 - 1) + m E|A|^2 v_n, v_0 = 0.
inline double cascade_variance(int m, cplx lambda, int depth) {
  const double a2 = laplace_T(m, 2.0 * lambda.real()).real();
  double v = 0.0;
  for (int n = 0; n < depth; ++n) v = (static_cast<double>(m) * m * a2 - 1.0) + m * a2 * v;
  return v;
}

struct ExpMomentPoint {
  cplx t;
  double inner = 0.0;   // estimate of E e^{<t,Z>}
  double absval = 0.0;  // estimate of E e^{|tZ|}
  double log_inner = 0.0;
  double log_abs = 0.0;
  bool overflow = false;
  bool first_bound = true;   // inner <= e^{Re t + C|t|^2}
  bool second_bound = true;  // absval <= 4 e^{|t| + 2C|t|^2}
};

struct ExpMomentReport {
  double c_hat = 0.0;
  std::vector<ExpMomentPoint> points;
  std::vector<cplx> failing;  // grid points whose empirical exponential overflowed
  bool all_hold = true;
};

namespace detail {

// log of the median of block means of exp(values), computed with log-sum-exp.
inline double log_median_of_means_exp(std::span<const double> v, int blocks) {
  blocks = std::max(1, std::min<int>(blocks, static_cast<int>(v.size())));
  const std::size_t per = v.size() / static_cast<std::size_t>(blocks);
  std::vector<double> logs;
  for (int b = 0; b < blocks; ++b) {
    const auto first = v.begin() + static_cast<std::ptrdiff_t>(b * per);
    const double mx = *std::max_element(first, first + static_cast<std::ptrdiff_t>(per));
    double s = 0.0;
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(per); ++it) s += std::exp(*it - mx);
    logs.push_back(mx + std::log(s / static_cast<double>(per)));
  }
  std::sort(logs.begin(), logs.end());
  const std::size_t mid = logs.size() / 2;
  return logs.size() % 2 ? logs[mid] : 0.5 * (logs[mid - 1] + logs[mid]);
}

}  // namespace detail

/// Grid of |t| = eps*i/n_radii, n_angles directions, plus t = 0.
inline std::vector<cplx> exp_moment_grid(double eps = 0.1, int n_radii = 5, int n_angles = 8) {
  std::vector<cplx> g{0.0};
  for (int i = 1; i <= n_radii; ++i)
    for (int j = 0; j < n_angles; ++j)
      g.push_back(std::polar(eps * i / n_radii, 2.0 * std::numbers::pi * j / n_angles));
  return g;
}

inline ExpMomentReport exp_moment_probe(std::span<const cplx> samples, std::span<const cplx> tgrid, double eps = 0.1,
                                        int blocks = 10) {
  require(!samples.empty(), ErrorCode::insufficient_data, "exp_moment_probe on empty sample");
  for (const cplx t : tgrid)
    require(std::abs(t) <= eps * (1.0 + 1e-12), ErrorCode::invalid_parameter, "probe point above eps");
  ExpMomentReport rep;
  std::vector<double> a(samples.size()), b(samples.size());
  for (const cplx t : tgrid) {
    ExpMomentPoint p;
    p.t = t;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      a[i] = t.real() * samples[i].real() + t.imag() * samples[i].imag();
      b[i] = std::abs(t * samples[i]);
    }
    p.log_inner = detail::log_median_of_means_exp(a, blocks);
    p.log_abs = detail::log_median_of_means_exp(b, blocks);
    p.overflow = !(std::isfinite(p.log_inner) && std::isfinite(p.log_abs)) || p.log_inner > 700.0 || p.log_abs > 700.0;
    p.inner = std::exp(p.log_inner);
    p.absval = std::exp(p.log_abs);
    if (p.overflow) {
      rep.failing.push_back(t);
    } else if (std::norm(t) > 0.0) {
      rep.c_hat = std::max(rep.c_hat, (p.log_inner - t.real()) / std::norm(t));
    }
    rep.points.push_back(p);
  }
  for (auto& p : rep.points) {
    if (p.overflow) {
      p.first_bound = p.second_bound = false;
    } else {
      const double r2 = std::norm(p.t);
      // Tolerance for rounding in the log-sum-exp.
      p.first_bound = p.log_inner <= p.t.real() + rep.c_hat * r2 + 1e-12;
      p.second_bound = p.log_abs <= std::log(4.0) + std::abs(p.t) + 2.0 * rep.c_hat * r2 + 1e-12;
    }
    rep.all_hold = rep.all_hold && p.first_bound && p.second_bound;
  }
  return rep;
}

}  // namespace mst
