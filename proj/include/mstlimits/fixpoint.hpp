#pragma once

// The smoothing transformation K mu = law of e^{-lambda T}(Z1 + ... + Zm):
// sampling of T, its Laplace transform, population dynamics for K, the d2*
// characteristic-function distance, and a deterministic fixed-point solver on
// characteristic functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/parallel.hpp"
#include "mstlimits/random.hpp"
#include "mstlimits/spectral.hpp"
#include "mstlimits/special.hpp"
#include "mstlimits/stats.hpp"

namespace mst {

// ---------------------------------------------------------------------------
// T = tau_(1) + ... + tau_(m-1), tau_(j) ~ Exp(j); e^{-T} ~ Beta(1, m-1).

enum class TMode { sum_of_exponentials, beta_inverse };

struct TSampler {
  int m = 0;
  TMode mode = TMode::beta_inverse;

  double operator()(Rng& rng) const {
    if (mode == TMode::sum_of_exponentials) {
      double t = 0.0;
      for (int j = 1; j <= m - 1; ++j) t += exponential(rng, static_cast<double>(j));
      return t;
    }
    // -log(1 - U^{1/(m-1)}), with 1 - U^{1/(m-1)} = -expm1(log(U)/(m-1)).
    const double u = uniform01(rng);
    return -std::log(-std::expm1(std::log(u) / static_cast<double>(m - 1)));
  }
};

inline double sample_T(const TSampler& sampler, Rng& rng) {
  check_branching_factor(sampler.m);
  return sampler(rng);
}

/// E e^{-lambda T} = (m-1)! / prod_{k=1}^{m-1} (lambda + k), for Re lambda > -1.
inline cplx laplace_T(int m, cplx lambda) {
  check_branching_factor(m);
  require(lambda.real() > -1.0, ErrorCode::divergent_transform,
          "Laplace transform of T diverges for Re(lambda) <= -1");
  cplx r = 1.0;
  for (int k = 1; k <= m - 1; ++k) r *= static_cast<double>(k) / (lambda + static_cast<double>(k));
  return r;
}

/// m E|e^{-lambda T}|^2 = m laplace_T(m, 2 Re lambda); K contracts d2 and d2*
/// with this constant.
inline double contraction_constant(int m, cplx lambda) {
  return static_cast<double>(m) * laplace_T(m, 2.0 * lambda.real()).real();
}

// ---------------------------------------------------------------------------
// Population dynamics.

struct SamplePool {
  int m = 0;
  cplx lambda;
  std::vector<cplx> points;
  int generation = 0;
  cplx target_mean = 1.0;

  void validate() const {
    check_branching_factor(m);
    require(!points.empty(), ErrorCode::invalid_state, "empty sample pool");
    for (const cplx z : points)
      require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorCode::invalid_state,
              "non-finite point in sample pool");
  }
};

enum class KVariant { ct, dt };

namespace detail {

inline constexpr std::size_t kChunk = 4096;

// One K step over [begin, end) of the destination. When src2/dst2 are given the
// same T (or spacings) and the same parent indices drive both pools.
inline void k_chunk(KVariant variant, int m, cplx lambda, std::span<const cplx> src, std::span<cplx> dst,
                    std::span<const cplx> src2, std::span<cplx> dst2, std::size_t begin, std::size_t end,
                    Rng& rng) {
  const std::uint64_t n = src.size();
  const TSampler t_sampler{m, TMode::beta_inverse};
  const bool coupled = !dst2.empty();
  std::vector<double> spacing(static_cast<std::size_t>(m));
  for (std::size_t j = begin; j < end; ++j) {
    cplx s1 = 0.0, s2 = 0.0;
    if (variant == KVariant::ct) {
      const cplx a = std::exp(-lambda * t_sampler(rng));
      for (int i = 0; i < m; ++i) {
        const auto idx = uniform_index(rng, n);
        s1 += src[idx];
        if (coupled) s2 += src2[idx];
      }
      dst[j] = a * s1;
      if (coupled) dst2[j] = a * s2;
    } else {
      // Spacings of m-1 uniforms on [0,1] are Dirichlet(1,...,1): normalized exponentials.
      double total = 0.0;
      for (auto& e : spacing) total += (e = exponential(rng, 1.0));
      for (int i = 0; i < m; ++i) {
        const cplx w = real_pow(spacing[i] / total, lambda);
        const auto idx = uniform_index(rng, n);
        s1 += w * src[idx];
        if (coupled) s2 += w * src2[idx];
      }
      dst[j] = s1;
      if (coupled) dst2[j] = s2;
    }
  }
}

inline void k_step(KVariant variant, int m, cplx lambda, std::span<const cplx> src, std::span<cplx> dst,
                   std::span<const cplx> src2, std::span<cplx> dst2, std::uint64_t seed, std::uint64_t generation,
                   unsigned threads) {
  const std::size_t chunks = (dst.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_rng(seed, "apply-k", generation, c);
    k_chunk(variant, m, lambda, src, dst, src2, dst2, c * kChunk, std::min(dst.size(), (c + 1) * kChunk), rng);
  });
}

}  // namespace detail

/// One application of K (CT) or of the discrete-time transform
/// Z = sum_k V_k^{lambda} Z^{(k)} (DT) by resampling with replacement.
/// Randomness comes from substreams (seed, generation, chunk).
inline SamplePool apply_K(const SamplePool& pool, KVariant variant, std::uint64_t seed, unsigned threads = 1) {
  pool.validate();
  SamplePool out = pool;
  detail::k_step(variant, pool.m, pool.lambda, pool.points, out.points, {}, {}, seed,
                 static_cast<std::uint64_t>(pool.generation), threads);
  out.generation = pool.generation + 1;
  return out;
}

inline SamplePool apply_K(const SamplePool& pool, KVariant variant, Rng& rng) {
  return apply_K(pool, variant, rng(), 1);
}

inline cplx empirical_cf(std::span<const cplx> points, cplx t) {
  double re = 0.0, im = 0.0;
  for (const cplx z : points) {
    const double arg = t.real() * z.real() + t.imag() * z.imag();  // <t, z> = Re(conj(t) z)
    re += std::cos(arg);
    im += std::sin(arg);
  }
  const double n = static_cast<double>(points.size());
  return {re / n, im / n};
}

/// Geometric radii 0.1..10 (16 values) x 16 angles.
inline std::vector<cplx> default_d2_grid(int n_radii = 16, int n_angles = 16, double r_lo = 0.1, double r_hi = 10.0) {
  std::vector<cplx> grid;
  for (int i = 0; i < n_radii; ++i) {
    const double r = r_lo * std::pow(r_hi / r_lo, n_radii > 1 ? static_cast<double>(i) / (n_radii - 1) : 0.0);
    for (int j = 0; j < n_angles; ++j) grid.push_back(std::polar(r, 2.0 * std::numbers::pi * j / n_angles));
  }
  return grid;
}

/// max over the grid of |phi_A(t) - phi_B(t)| / |t|^2 for the empirical
/// characteristic functions. A finite grid gives a lower bound on the sup.
inline double d2star(std::span<const cplx> a, std::span<const cplx> b, std::span<const cplx> grid,
                     unsigned threads = 1) {
  require(!a.empty() && !b.empty(), ErrorCode::invalid_state, "d2star on empty pool");
  for (const cplx t : grid) require(t != 0.0, ErrorCode::invalid_grid, "d2star grid contains t = 0");
  std::vector<double> ratio(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    ratio[i] = std::abs(empirical_cf(a, grid[i]) - empirical_cf(b, grid[i])) / std::norm(grid[i]);
  });
  return ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
}

struct FixpointConfig {
  int m = 27;
  std::optional<cplx> lambda;  // defaults to lambda2(m)
  std::size_t pool_size = 100000;
  int iters = 50;
  cplx target_mean = 1.0;
  std::uint64_t seed = 1;
  KVariant variant = KVariant::ct;
  // Rescale the pool to the target mean after every step. K commutes with
  // scalar multiplication, so this keeps the fixed point while removing the
  // random-walk drift of the empirical mean.
  bool renormalize_mean = false;
  // Run a shadow chain started one generation ahead with common random
  // numbers; d2star(P_g, Q_g) is then the consecutive-generation distance.
  bool track_contraction = false;
  std::size_t contraction_sample = 20000;
  std::vector<cplx> d2_grid = default_d2_grid();
  unsigned threads = 1;
};

struct GenerationStats {
  int generation = 0;
  cplx mean;
  double variance = 0.0;
  double d2star_consecutive = -1.0;  // -1 when not tracked
};

struct FixpointResult {
  SamplePool pool;
  std::vector<GenerationStats> history;
  double contraction = 0.0;  // m laplace_T(m, 2 Re lambda)
  bool contraction_warning = false;
  std::string warning;
};

inline FixpointResult iterate_to_fixpoint(const FixpointConfig& cfg) {
  check_branching_factor(cfg.m);
  require(cfg.pool_size >= 2, ErrorCode::invalid_parameter, "pool size must be at least 2");
  require(cfg.iters >= 0, ErrorCode::invalid_parameter, "negative iteration count");
  const cplx lambda = cfg.lambda ? *cfg.lambda : lambda2_of(cfg.m);
  FixpointResult res;
  res.contraction = contraction_constant(cfg.m, lambda);
  if (res.contraction >= 1.0) {
    res.contraction_warning = true;
    res.warning = "m*laplace_T(m, 2Re(lambda)) = " + std::to_string(res.contraction) +
                  " >= 1: no contraction guarantee";
  }
  SamplePool& pool = res.pool;
  pool.m = cfg.m;
  pool.lambda = lambda;
  pool.target_mean = cfg.target_mean;
  pool.points.assign(cfg.pool_size, cfg.target_mean);

  std::vector<cplx> next(cfg.pool_size), shadow, shadow_next;
  const std::uint64_t shadow_seed = derive_seed(cfg.seed, "shadow-start");
  if (cfg.track_contraction) {
    shadow.resize(cfg.pool_size);
    detail::k_step(cfg.variant, cfg.m, lambda, pool.points, shadow, {}, {}, shadow_seed, 0, cfg.threads);
    shadow_next.resize(cfg.pool_size);
  }

  auto renormalize = [&](std::vector<cplx>& pts) {
    const cplx mu = stats::mean(pts);
    if (std::abs(mu) > 0.0) {
      const cplx f = cfg.target_mean / mu;
      for (auto& z : pts) z *= f;
    }
  };

  for (int g = 1; g <= cfg.iters; ++g) {
    if (cfg.track_contraction) {
      detail::k_step(cfg.variant, cfg.m, lambda, pool.points, next, shadow, shadow_next, cfg.seed,
                     static_cast<std::uint64_t>(g - 1), cfg.threads);
      shadow.swap(shadow_next);
    } else {
      detail::k_step(cfg.variant, cfg.m, lambda, pool.points, next, {}, {}, cfg.seed,
                     static_cast<std::uint64_t>(g - 1), cfg.threads);
    }
    pool.points.swap(next);
    if (cfg.renormalize_mean) {
      renormalize(pool.points);
      if (cfg.track_contraction) renormalize(shadow);
    }
    pool.generation = g;
    GenerationStats st;
    st.generation = g;
    st.mean = stats::mean(pool.points);
    st.variance = stats::variance(pool.points);
    if (cfg.track_contraction) {
      const std::size_t k = std::min(cfg.contraction_sample, cfg.pool_size);
      st.d2star_consecutive = d2star(std::span<const cplx>(pool.points).first(k),
                                     std::span<const cplx>(shadow).first(k), cfg.d2_grid, cfg.threads);
    }
    res.history.push_back(st);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Deterministic iteration on characteristic functions:
//   phi_{n+1}(t) = int_0^inf f_T(u) phi_n^m(t e^{-conj(lambda) u}) du
// on a polar grid, log-spaced in radius.

struct CharGrid {
  std::vector<double> radii;   // increasing, log-spaced
  std::vector<double> angles;  // uniform on [0, 2 pi)
  std::vector<cplx> values;    // row-major: values[i * angles.size() + j]
  cplx mean = 1.0;

  std::size_t nr() const { return radii.size(); }
  std::size_t ntheta() const { return angles.size(); }
  cplx at(std::size_t i, std::size_t j) const { return values[i * ntheta() + j]; }
  cplx node(std::size_t i, std::size_t j) const { return std::polar(radii[i], angles[j]); }

  static CharGrid make(double r_min, double r_max, std::size_t nr, std::size_t ntheta, cplx mean) {
    require(r_min > 0.0 && r_max > r_min && nr >= 2 && ntheta >= 4, ErrorCode::invalid_grid,
            "char grid needs 0 < r_min < r_max, nr >= 2, ntheta >= 4");
    CharGrid g;
    g.mean = mean;
    for (std::size_t i = 0; i < nr; ++i)
      g.radii.push_back(r_min * std::pow(r_max / r_min, static_cast<double>(i) / static_cast<double>(nr - 1)));
    for (std::size_t j = 0; j < ntheta; ++j)
      g.angles.push_back(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(ntheta));
    g.values.resize(nr * ntheta);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < ntheta; ++j) {
        const cplx t = g.node(i, j);
        const double inner = t.real() * mean.real() + t.imag() * mean.imag();
        g.values[i * ntheta + j] = std::exp(cplx(-std::norm(t), inner));
      }
    return g;
  }

  /// Bilinear interpolation in (log r, theta); below r_min the second-order
  /// patch 1 + i<t,C> - (r/r_min)^2 q(theta), with q read off the first ring.
  cplx evaluate(cplx t) const {
    const double r = std::abs(t);
    const double inner = t.real() * mean.real() + t.imag() * mean.imag();
    if (r == 0.0) return 1.0;
    require(r <= radii.back() * (1.0 + 1e-12), ErrorCode::grid_overflow,
            "characteristic function queried above r_max; enlarge r_max");
    double theta = std::atan2(t.imag(), t.real());
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    const double dtheta = 2.0 * std::numbers::pi / static_cast<double>(ntheta());
    const double ft = theta / dtheta;
    std::size_t j0 = static_cast<std::size_t>(ft);
    const double wt = ft - static_cast<double>(j0);
    j0 %= ntheta();
    const std::size_t j1 = (j0 + 1) % ntheta();
    if (r < radii.front()) {
      const double rm = radii.front();
      auto q = [&](std::size_t j) {
        const cplx tn = node(0, j);
        const double in0 = tn.real() * mean.real() + tn.imag() * mean.imag();
        return cplx(1.0, in0) - at(0, j);
      };
      const cplx qq = (1.0 - wt) * q(j0) + wt * q(j1);
      return cplx(1.0, inner) - (r / rm) * (r / rm) * qq;
    }
    const double lr0 = std::log(radii.front());
    const double dlr = (std::log(radii.back()) - lr0) / static_cast<double>(nr() - 1);
    const double fr = std::min((std::log(r) - lr0) / dlr, static_cast<double>(nr() - 1));
    std::size_t i0 = std::min(static_cast<std::size_t>(fr), nr() - 2);
    const double wr = fr - static_cast<double>(i0);
    return (1.0 - wr) * ((1.0 - wt) * at(i0, j0) + wt * at(i0, j1)) +
           wr * ((1.0 - wt) * at(i0 + 1, j0) + wt * at(i0 + 1, j1));
  }
};

struct CharIterationConfig {
  int m = 27;
  cplx lambda;
  cplx mean = 1.0;
  double r_min = 1e-3;
  double r_max = 20.0;
  std::size_t nr = 200;
  std::size_t ntheta = 128;
  int iters = 120;
  int quad_order = 8;   // Gauss-Legendre nodes per panel
  int panels = 12;      // panels on [0, u_max] in u = -log s
  double u_max = 24.0;
  unsigned threads = 1;
};

struct CharIterationResult {
  CharGrid grid;
  std::vector<double> sup_change;  // max |phi_{n+1} - phi_n| per iteration
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

inline cplx ipow(cplx z, int m) {
  cplx r = 1.0;
  while (m > 0) {
    if (m & 1) r *= z;
    z *= z;
    m >>= 1;
  }
  return r;
}

}  // namespace detail

/// Density of T: (m-1) e^{-u} (1 - e^{-u})^{m-2} on u > 0.
inline double density_T(int m, double u) {
  if (u <= 0.0) return 0.0;
  return (m - 1) * std::exp(-u) * std::pow(-std::expm1(-u), m - 2);
}

inline CharIterationResult char_iteration(const CharIterationConfig& cfg) {
  check_branching_factor(cfg.m);
  require(cfg.quad_order >= 1 && cfg.panels >= 1 && cfg.u_max > 0.0, ErrorCode::invalid_parameter,
          "quadrature needs positive order, panels and u_max");
  CharIterationResult res{CharGrid::make(cfg.r_min, cfg.r_max, cfg.nr, cfg.ntheta, cfg.mean), {}};

  std::vector<double> gx, gw;
  detail::gauss_legendre(cfg.quad_order, gx, gw);
  std::vector<cplx> shrink;  // e^{-conj(lambda) u_i}
  std::vector<double> weight;
  const double h = cfg.u_max / cfg.panels;
  double mass = 0.0;
  for (int p = 0; p < cfg.panels; ++p) {
    for (int i = 0; i < cfg.quad_order; ++i) {
      const double u = h * (p + 0.5 * (gx[i] + 1.0));
      const double wq = 0.5 * h * gw[i] * density_T(cfg.m, u);
      shrink.push_back(std::exp(-std::conj(cfg.lambda) * u));
      weight.push_back(wq);
      mass += wq;
    }
  }
  // Mass beyond u_max sits at arguments ~0 where phi^m ~ 1; the total mass is
  // restored exactly so that phi(0) = 1 is preserved.
  const double tail = 1.0 - mass;

  CharGrid next = res.grid;
  const std::size_t ntheta = res.grid.ntheta();
  for (int it = 0; it < cfg.iters; ++it) {
    const CharGrid& cur = res.grid;
    std::vector<double> row_change(cur.nr(), 0.0);
    parallel_for(cur.nr(), cfg.threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < ntheta; ++j) {
        const cplx t = cur.node(i, j);
        cplx acc = tail;
        for (std::size_t q = 0; q < shrink.size(); ++q) acc += weight[q] * detail::ipow(cur.evaluate(t * shrink[q]), cfg.m);
        next.values[i * ntheta + j] = acc;
        row_change[i] = std::max(row_change[i], std::abs(acc - cur.at(i, j)));
      }
    });
    std::swap(res.grid.values, next.values);
    res.sup_change.push_back(*std::max_element(row_change.begin(), row_change.end()));
  }
  return res;
}

}  // namespace mst
