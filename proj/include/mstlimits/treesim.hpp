#pragma once

// Discrete composition-vector chain of the m-ary search tree, its
// continuous-time embedding, and estimators of the limit variables
// xi, W and W^DT.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/parallel.hpp"
#include "mstlimits/random.hpp"
#include "mstlimits/spectral.hpp"
#include "mstlimits/stats.hpp"

namespace mst {

struct CompositionVector {
  int m = 0;
  std::vector<std::int64_t> x;  // x[k-1] = number of nodes of type k (k-1 keys, k gaps)

  CompositionVector() = default;
  CompositionVector(int m_, std::vector<std::int64_t> x_) : m(m_), x(std::move(x_)) { validate(); }

  /// Canonical basis vector e_k (1-based).
  static CompositionVector unit(int m, int k) {
    require(k >= 1 && k <= m - 1, ErrorCode::invalid_parameter, "basis index out of range");
    std::vector<std::int64_t> x(static_cast<std::size_t>(m - 1), 0);
    x[k - 1] = 1;
    return {m, std::move(x)};
  }

  /// Number of gaps, u1(x) = sum_k k x_k.
  std::int64_t gaps() const {
    std::int64_t s = 0;
    for (std::size_t k = 0; k < x.size(); ++k) s += static_cast<std::int64_t>(k + 1) * x[k];
    return s;
  }

  void validate() const {
    check_branching_factor(m);
    require(x.size() == static_cast<std::size_t>(m - 1), ErrorCode::invalid_state,
            "composition vector has wrong length");
    require(std::all_of(x.begin(), x.end(), [](std::int64_t v) { return v >= 0; }), ErrorCode::invalid_state,
            "composition vector has a negative entry");
    require(gaps() >= 1, ErrorCode::invalid_state, "composition vector is zero");
  }

  friend bool operator==(const CompositionVector&, const CompositionVector&) = default;
};

namespace detail {

// Inverse-CDF walk over the weights k x_k.
inline int draw_type(const std::vector<std::int64_t>& x, std::int64_t gaps, Rng& rng) {
  std::int64_t r = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(gaps)));
  for (std::size_t k = 0; k < x.size(); ++k) {
    r -= static_cast<std::int64_t>(k + 1) * x[k];
    if (r < 0) return static_cast<int>(k + 1);
  }
  return static_cast<int>(x.size());  // unreachable for a consistent gap count
}

inline void apply_increment(std::vector<std::int64_t>& x, int m, int k) {
  if (k <= m - 2) {
    x[k - 1] -= 1;
    x[k] += 1;
  } else {
    x[m - 2] -= 1;
    x[0] += m;
  }
}

}  // namespace detail

/// One key insertion: type k is chosen with probability k x_k / u1(x) and the
/// row w_k is added. u1 grows by exactly one.
inline CompositionVector dt_step(CompositionVector state, Rng& rng) {
  const int k = detail::draw_type(state.x, state.gaps(), rng);
  detail::apply_increment(state.x, state.m, k);
  return state;
}

/// Per-step projections (u1, u2) of a discrete path; entry 0 is the start.
struct ProjectionTrace {
  std::vector<double> u1;
  std::vector<cplx> u2;
};

struct DtOptions {
  ProjectionTrace* trace = nullptr;              // needs u2 coefficients
  std::span<const cplx> u2_coeffs{};
  std::vector<CompositionVector>* states = nullptr;  // full vectors; memory heavy
};

inline CompositionVector dt_simulate(const CompositionVector& x0, std::int64_t n, Rng& rng,
                                     const DtOptions& opt = {}) {
  x0.validate();
  require(n >= 0, ErrorCode::invalid_parameter, "negative step count");
  require(!opt.trace || opt.u2_coeffs.size() == x0.x.size(), ErrorCode::invalid_parameter,
          "projection trace needs the u2 coefficients");
  const int m = x0.m;
  std::vector<std::int64_t> x = x0.x;
  std::int64_t gaps = x0.gaps();
  std::vector<cplx> u2_step;
  cplx u2 = 0.0;
  if (opt.trace) {
    for (int k = 1; k <= m - 1; ++k) {
      const auto w = increment_row(m, k);
      cplx s = 0.0;
      for (int j = 0; j < m - 1; ++j) s += opt.u2_coeffs[j] * static_cast<double>(w[j]);
      u2_step.push_back(s);
    }
    for (int j = 0; j < m - 1; ++j) u2 += opt.u2_coeffs[j] * static_cast<double>(x[j]);
    opt.trace->u1.assign(1, static_cast<double>(gaps));
    opt.trace->u2.assign(1, u2);
  }
  if (opt.states) opt.states->assign(1, x0);
  for (std::int64_t step = 0; step < n; ++step) {
    const int k = detail::draw_type(x, gaps, rng);
    detail::apply_increment(x, m, k);
    ++gaps;
    if (opt.trace) {
      u2 += u2_step[k - 1];
      opt.trace->u1.push_back(static_cast<double>(gaps));
      opt.trace->u2.push_back(u2);
    }
    if (opt.states) opt.states->push_back(CompositionVector(m, x));
  }
  return {m, std::move(x)};
}

/// Law-level oracle: grows an actual m-ary search tree with n i.i.d. uniform
/// keys and returns its composition vector (counts of non-saturated nodes by
/// number of gaps).
inline CompositionVector key_insertion_oracle(int m, std::int64_t n, Rng& rng) {
  check_branching_factor(m, 3);
  require(n >= 0, ErrorCode::invalid_parameter, "negative key count");
  struct Node {
    std::vector<double> keys;
    std::int64_t first_child = -1;  // children are contiguous: first_child .. first_child+m-1
  };
  std::vector<Node> nodes(1);
  const std::size_t cap = static_cast<std::size_t>(m - 1);
  for (std::int64_t i = 0; i < n; ++i) {
    const double key = uniform01(rng);
    std::size_t cur = 0;
    while (nodes[cur].first_child >= 0) {
      const auto& ks = nodes[cur].keys;
      const auto slot = static_cast<std::int64_t>(std::upper_bound(ks.begin(), ks.end(), key) - ks.begin());
      cur = static_cast<std::size_t>(nodes[cur].first_child + slot);
    }
    auto& ks = nodes[cur].keys;
    ks.insert(std::upper_bound(ks.begin(), ks.end(), key), key);
    if (ks.size() == cap) {
      nodes[cur].first_child = static_cast<std::int64_t>(nodes.size());
      nodes.resize(nodes.size() + static_cast<std::size_t>(m));
    }
  }
  std::vector<std::int64_t> x(cap, 0);
  for (const auto& node : nodes)
    if (node.keys.size() < cap) ++x[node.keys.size()];
  return {m, std::move(x)};
}

/// Jump times tau_1 < ... < tau_n of the embedding; increment i (0-based) is
/// Exp(N0 + i).
inline std::vector<double> ct_jump_times(std::int64_t n, std::int64_t n0, Rng& rng) {
  require(n >= 1 && n0 >= 1, ErrorCode::invalid_parameter, "ct_jump_times needs n >= 1 and N0 >= 1");
  std::vector<double> tau(static_cast<std::size_t>(n));
  double t = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    t += exponential(rng, static_cast<double>(n0 + i));
    tau[static_cast<std::size_t>(i)] = t;
  }
  return tau;
}

/// tau_n alone, same stream consumption as ct_jump_times.
inline double last_jump_time(std::int64_t n, std::int64_t n0, Rng& rng) {
  require(n >= 1 && n0 >= 1, ErrorCode::invalid_parameter, "last_jump_time needs n >= 1 and N0 >= 1");
  double t = 0.0;
  for (std::int64_t i = 0; i < n; ++i) t += exponential(rng, static_cast<double>(n0 + i));
  return t;
}

struct EmbeddedRun {
  std::int64_t steps = 0;
  std::int64_t n0 = 0;
  std::vector<double> jump_times;
  CompositionVector final_state;
  std::optional<ProjectionTrace> trace;
};

/// Continuous-time run: jump chain and jump times come from independent
/// substreams of (seed, replica).
inline EmbeddedRun simulate_ct(const CompositionVector& x0, std::int64_t n, std::uint64_t seed,
                               std::uint64_t replica = 0) {
  EmbeddedRun run;
  run.steps = n;
  run.n0 = x0.gaps();
  Rng chain = make_rng(seed, "ct-chain", replica);
  Rng clock = make_rng(seed, "ct-clock", replica);
  run.final_state = dt_simulate(x0, n, chain);
  if (n >= 1) run.jump_times = ct_jump_times(n, run.n0, clock);
  return run;
}

/// gamma_n = prod_{j=0}^{n-1} (1 + lambda2/(N0+j)); E[u2(X_{n})] = gamma_n u2(X_0).
inline cplx martingale_normalizer(cplx lambda2, std::int64_t n0, std::int64_t n) {
  cplx g = 1.0;
  for (std::int64_t j = 0; j < n; ++j) g *= 1.0 + lambda2 / static_cast<double>(n0 + j);
  return g;
}

/// Deterministic factor linking the exact martingale W^DT_n = u2(X_n)/gamma_n
/// to the n^{lambda2} normalization: W_n = xi_n^{lambda2} * factor * W^DT_n in law.
inline cplx connection_factor(cplx lambda2, std::int64_t n0, std::int64_t n) {
  return martingale_normalizer(lambda2, n0, n) * real_pow(static_cast<double>(n), -lambda2);
}

struct LimitEstimates {
  double xi_hat = 0.0;
  cplx w_hat;
  cplx wdt_hat;
  std::int64_t n = 0;
};

inline LimitEstimates estimate_limits(const EmbeddedRun& run, const SpectralData& spec) {
  require(run.steps >= 1 && !run.jump_times.empty(), ErrorCode::insufficient_data,
          "estimate_limits needs at least one step");
  require(run.final_state.m == spec.m, ErrorCode::invalid_parameter, "spectral data built for another m");
  const double tau_n = run.jump_times.back();
  const cplx u2 = spec.u2(std::span<const std::int64_t>(run.final_state.x));
  LimitEstimates e;
  e.n = run.steps;
  e.xi_hat = static_cast<double>(run.steps) * std::exp(-tau_n);
  e.w_hat = std::exp(-spec.lambda2 * tau_n) * u2;
  e.wdt_hat = u2 / martingale_normalizer(spec.lambda2, run.n0, run.steps);
  return e;
}

enum class SimMode { discrete, continuous };

/// Independent replicas; replica i uses substreams derived from (seed, i).
/// In discrete mode only wdt_hat is defined (xi_hat and w_hat are NaN).
inline std::vector<LimitEstimates> simulate_replicas(const SpectralData& spec, const CompositionVector& x0,
                                                     std::int64_t n, std::int64_t reps, std::uint64_t seed,
                                                     SimMode mode, unsigned threads = 1) {
  require(reps >= 1 && n >= 1, ErrorCode::invalid_parameter, "replicas and steps must be positive");
  std::vector<LimitEstimates> out(static_cast<std::size_t>(reps));
  const cplx gamma_n = martingale_normalizer(spec.lambda2, x0.gaps(), n);
  parallel_for(out.size(), threads, [&](std::size_t i) {
    if (mode == SimMode::continuous) {
      out[i] = estimate_limits(simulate_ct(x0, n, seed, i), spec);
    } else {
      Rng chain = make_rng(seed, "dt-chain", i);
      const auto xn = dt_simulate(x0, n, chain);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out[i] = {nan, {nan, nan}, spec.u2(std::span<const std::int64_t>(xn.x)) / gamma_n, n};
    }
  });
  return out;
}

/// xi_hat = n exp(-tau_n) from jump times only.
inline std::vector<double> xi_samples(std::int64_t n, std::int64_t n0, std::int64_t reps, std::uint64_t seed,
                                      unsigned threads = 1) {
  std::vector<double> out(static_cast<std::size_t>(reps));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    Rng clock = make_rng(seed, "ct-clock", i);
    out[i] = static_cast<double>(n) * std::exp(-last_jump_time(n, n0, clock));
  });
  return out;
}

struct ConnectionReport {
  stats::EnergyTestResult energy;
  cplx mean_product;  // mean of xi^lambda2 * factor * W^DT
  double se_product_re = 0.0, se_product_im = 0.0;
  cplx mean_w;
  double se_w_re = 0.0, se_w_im = 0.0;
  cplx factor;
};

/// Pairs independent xi and W^DT samples into xi^{lambda2} * factor * W^DT and
/// compares their law with the W samples by an energy permutation test.
/// factor is connection_factor(...) for the convention wdt = u2/gamma_n.
inline ConnectionReport martingale_connection_test(std::span<const double> xi, std::span<const cplx> wdt,
                                                   std::span<const cplx> w, const SpectralData& spec, cplx factor,
                                                   int permutations, std::uint64_t seed,
                                                   std::size_t max_per_group = 2000) {
  require(!xi.empty() && xi.size() == wdt.size(), ErrorCode::invalid_parameter,
          "xi and W^DT samples must pair one to one");
  for (double v : xi)
    require(v > 0.0 && std::isfinite(v), ErrorCode::invalid_sample, "non-positive xi sample");
  std::vector<cplx> product(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) product[i] = real_pow(xi[i], spec.lambda2) * factor * wdt[i];
  ConnectionReport r;
  r.factor = factor;
  const auto pm = stats::mean_se(std::span<const cplx>(product));
  const auto wm = stats::mean_se(w);
  r.mean_product = pm.mean;
  r.se_product_re = pm.se_re;
  r.se_product_im = pm.se_im;
  r.mean_w = wm.mean;
  r.se_w_re = wm.se_re;
  r.se_w_im = wm.se_im;
  r.energy = stats::energy_test(product, w, permutations, seed, max_per_group);
  return r;
}

}  // namespace mst
