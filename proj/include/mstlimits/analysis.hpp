#pragma once

// Diagnostics on samples of W: the profile psi(r) = max_{|t|=r} |phi(t)|,
// support occupancy, and the search for points of the spiral
// {m^n e^{-lambda2 t}} close to given targets in the unit disc.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/fixpoint.hpp"
#include "mstlimits/parallel.hpp"
#include "mstlimits/stats.hpp"

namespace mst {

struct PsiProfile {
  std::vector<double> radii;
  std::vector<double> psi_hat;
  std::size_t n_samples = 0;
  int n_angles = 0;
  double noise = 0.0;
  // Decay fit of log psi_hat against log r.
  double a_hat = 0.0;
  double a_se = 0.0;
  double fit_r_lo = 0.0;
  double fit_r_hi = 0.0;
  std::size_t fit_points = 0;
  bool in_band = false;           // 0 < a_hat <= 1/sigma2 + 2 a_se
  bool block_decreasing = false;  // block means of psi_hat decrease over the resolvable range
};

inline std::vector<double> default_psi_radii(int n = 40, double r_lo = 0.005, double r_hi = 5.0) {
  std::vector<double> r{0.0};
  for (int i = 0; i < n; ++i) r.push_back(r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (n - 1)));
  return r;
}

/// psi_hat(r) = max over n_angles directions of |phi_hat(r e^{i theta})|.
/// The noise floor is the larger of sqrt(log n_angles / N) and half the
/// largest split-half discrepancy of phi_hat over the evaluated points.
inline PsiProfile psi_profile(std::span<const cplx> pool, std::span<const double> radii, double sigma2,
                              int n_angles = 64, unsigned threads = 1, int block = 4) {
  require(pool.size() >= 4, ErrorCode::insufficient_data, "psi_profile needs at least four samples");
  require(n_angles >= 1, ErrorCode::invalid_parameter, "psi_profile needs at least one angle");
  for (double r : radii) require(r >= 0.0 && std::isfinite(r), ErrorCode::invalid_parameter, "negative radius");
  PsiProfile prof;
  prof.radii.assign(radii.begin(), radii.end());
  prof.psi_hat.assign(radii.size(), 0.0);
  prof.n_samples = pool.size();
  prof.n_angles = n_angles;
  const std::size_t half = pool.size() / 2;
  const auto first = pool.first(half);
  const auto second = pool.subspan(half, half);
  std::vector<double> split(radii.size(), 0.0);
  parallel_for(radii.size(), threads, [&](std::size_t i) {
    if (radii[i] == 0.0) {
      prof.psi_hat[i] = 1.0;
      return;
    }
    for (int j = 0; j < n_angles; ++j) {
      const cplx t = std::polar(radii[i], 2.0 * std::numbers::pi * j / n_angles);
      const cplx a = empirical_cf(first, t), b = empirical_cf(second, t);
      const cplx full = pool.size() == 2 * half ? 0.5 * (a + b) : empirical_cf(pool, t);
      prof.psi_hat[i] = std::max(prof.psi_hat[i], std::abs(full));
      split[i] = std::max(split[i], 0.5 * std::abs(a - b));
    }
  });
  prof.noise = std::max(std::sqrt(std::log(std::max(n_angles, 2)) / static_cast<double>(pool.size())),
                        *std::max_element(split.begin(), split.end()));

  std::vector<double> lx, ly;
  double r_top = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] > 0.0 && prof.psi_hat[i] > 3.0 * prof.noise) r_top = std::max(r_top, radii[i]);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] > 0.0 && radii[i] >= r_top / 10.0 && radii[i] <= r_top && prof.psi_hat[i] > 3.0 * prof.noise) {
      lx.push_back(std::log(radii[i]));
      ly.push_back(std::log(prof.psi_hat[i]));
    }
  }
  require(lx.size() >= 3, ErrorCode::uninformative_profile,
          "fewer than three radii resolvable above the noise floor");
  const auto fit = stats::least_squares(lx, ly);
  prof.a_hat = -fit.slope;
  prof.a_se = fit.slope_se;
  prof.fit_r_lo = std::exp(*std::min_element(lx.begin(), lx.end()));
  prof.fit_r_hi = r_top;
  prof.fit_points = lx.size();
  prof.in_band = prof.a_hat > 0.0 && prof.a_hat <= 1.0 / sigma2 + 2.0 * prof.a_se;

  // Radii sorted ascending; block means over the resolvable positive radii.
  std::vector<std::pair<double, double>> res;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] > 0.0 && prof.psi_hat[i] > 3.0 * prof.noise) res.emplace_back(radii[i], prof.psi_hat[i]);
  std::sort(res.begin(), res.end());
  std::vector<double> means;
  for (std::size_t b = 0; b + static_cast<std::size_t>(block) <= res.size(); b += static_cast<std::size_t>(block)) {
    double s = 0.0;
    for (int j = 0; j < block; ++j) s += res[b + static_cast<std::size_t>(j)].second;
    means.push_back(s / block);
  }
  prof.block_decreasing = means.size() >= 2;
  for (std::size_t b = 1; b < means.size(); ++b) prof.block_decreasing = prof.block_decreasing && means[b] < means[b - 1];
  return prof;
}

struct SupportMap {
  int n_annuli = 0;
  int n_sectors = 0;
  double rmax = 0.0;
  std::vector<std::int64_t> counts;  // counts[a * n_sectors + s]
  std::int64_t outside = 0;
  double occupancy = 0.0;  // fraction of cells with at least one point

  std::int64_t at(int a, int s) const { return counts[static_cast<std::size_t>(a * n_sectors + s)]; }
};

/// Equal-area annuli (boundaries rmax sqrt(i/n_annuli)) times equal sectors.
inline SupportMap support_coverage(std::span<const cplx> pool, int n_annuli = 8, int n_sectors = 16, double rmax = 2.0) {
  require(!pool.empty(), ErrorCode::insufficient_data, "support_coverage on empty pool");
  require(n_annuli >= 1 && n_sectors >= 1 && rmax > 0.0, ErrorCode::invalid_parameter, "bad coverage grid");
  SupportMap map{n_annuli, n_sectors, rmax, std::vector<std::int64_t>(static_cast<std::size_t>(n_annuli * n_sectors), 0),
                 0, 0.0};
  for (const cplx z : pool) {
    const double r = std::abs(z);
    if (r > rmax) {
      ++map.outside;
      continue;
    }
    const int a = std::min(n_annuli - 1, static_cast<int>(n_annuli * (r / rmax) * (r / rmax)));
    double th = std::atan2(z.imag(), z.real());
    if (th < 0.0) th += 2.0 * std::numbers::pi;
    const int s = std::min(n_sectors - 1, static_cast<int>(th / (2.0 * std::numbers::pi) * n_sectors));
    ++map.counts[static_cast<std::size_t>(a * n_sectors + s)];
  }
  const auto occupied = std::count_if(map.counts.begin(), map.counts.end(), [](std::int64_t c) { return c > 0; });
  map.occupancy = static_cast<double>(occupied) / static_cast<double>(map.counts.size());
  return map;
}

struct Histogram2D {
  double lo = 0.0, hi = 0.0;
  int bins = 0;
  std::vector<std::int64_t> counts;  // counts[ix * bins + iy]
};

/// Plain square histogram on [lo, hi]^2 for plotting.
inline Histogram2D histogram2d(std::span<const cplx> pool, int bins, double lo, double hi) {
  require(bins >= 1 && hi > lo, ErrorCode::invalid_parameter, "bad histogram extent");
  Histogram2D h{lo, hi, bins, std::vector<std::int64_t>(static_cast<std::size_t>(bins * bins), 0)};
  for (const cplx z : pool) {
    if (z.real() < lo || z.real() >= hi || z.imag() < lo || z.imag() >= hi) continue;
    const int ix = static_cast<int>((z.real() - lo) / (hi - lo) * bins);
    const int iy = static_cast<int>((z.imag() - lo) / (hi - lo) * bins);
    ++h.counts[static_cast<std::size_t>(ix * bins + iy)];
  }
  return h;
}

struct SpiralWitness {
  cplx target;
  bool found = false;
  long n = 0;
  long k = 0;
  double t = 0.0;
  double distance = 0.0;       // best distance seen (the witness distance when found)
  double verified = 0.0;       // |m^n e^{-lambda2 t} - z| recomputed in long double
  std::uint64_t evaluations = 0;
};

/// m^n e^{-lambda t}, evaluated as exp(n log m - lambda t) in long double.
inline std::complex<long double> spiral_point(int m, cplx lambda, long n, double t) {
  const std::complex<long double> l(lambda.real(), lambda.imag());
  return std::exp(static_cast<long double>(n) * std::log(static_cast<long double>(m)) - l * static_cast<long double>(t));
}

/// For each target z (0 < |z| < 1), scan n = 0, 1, ... and, for each n, the
/// k nearest the modulus-matching value t* = (n log m - log|z|)/sigma with
/// t = (2 pi k - theta)/tau, theta = arg z in (-2 pi, 0]. First witness with
/// distance <= eps wins; the budget counts (n, k) evaluations per target.
inline std::vector<SpiralWitness> spiral_density(int m, cplx lambda, std::span<const cplx> targets, double eps,
                                                 std::uint64_t budget) {
  check_branching_factor(m);
  require(eps > 0.0, ErrorCode::invalid_parameter, "eps must be positive");
  require(lambda.real() > 0.0 && lambda.imag() > 0.0, ErrorCode::invalid_parameter,
          "spiral search needs Re lambda > 0 and Im lambda > 0");
  const double sigma = lambda.real(), tau = lambda.imag();
  const double logm = std::log(static_cast<double>(m));
  std::vector<SpiralWitness> out;
  for (const cplx z : targets) {
    require(std::abs(z) < 1.0, ErrorCode::invalid_parameter, "target outside the unit disc");
    SpiralWitness w;
    w.target = z;
    w.distance = std::numeric_limits<double>::infinity();
    // Points on the spiral of modulus below eps/2 cover a target near 0.
    const double logr = std::log(std::max(std::abs(z), 0.25 * eps));
    double theta = z == 0.0 ? 0.0 : std::arg(z);
    if (theta > 0.0) theta -= 2.0 * std::numbers::pi;
    for (long n = 0; w.evaluations < budget && !w.found; ++n) {
      const double tstar = (static_cast<double>(n) * logm - logr) / sigma;
      const long kc = std::max(0L, std::lround((tau * tstar + theta) / (2.0 * std::numbers::pi)));
      for (long k = std::max(0L, kc - 1); k <= kc + 1 && w.evaluations < budget; ++k) {
        const double t = (2.0 * std::numbers::pi * static_cast<double>(k) - theta) / tau;
        ++w.evaluations;
        const double d = std::abs(std::exp(cplx(static_cast<double>(n) * logm - sigma * t, -tau * t)) - z);
        if (d < w.distance) {
          w.distance = d;
          w.n = n;
          w.k = k;
          w.t = t;
        }
        if (d <= eps) {
          w.found = true;
          break;
        }
      }
    }
    const std::complex<long double> zl(z.real(), z.imag());
    w.verified = static_cast<double>(std::abs(spiral_point(m, lambda, w.n, w.t) - zl));
    out.push_back(w);
  }
  return out;
}

/// Throws no_witness_found if any target is unwitnessed.
inline void require_witnesses(std::span<const SpiralWitness> ws, double eps) {
  for (const auto& w : ws)
    require(w.found && w.verified <= eps, ErrorCode::no_witness_found,
            "no spiral point within eps of target; best distance " + std::to_string(w.distance));
}

}  // namespace mst
