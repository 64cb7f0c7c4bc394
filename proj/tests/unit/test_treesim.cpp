#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "mstlimits/treesim.hpp"

using namespace mst;

namespace {

// Coefficients binom(mu+k-1, k-1) of the eigenform for an arbitrary root mu.
std::vector<cplx> form_for(int m, cplx mu) {
  std::vector<cplx> c;
  for (int k = 1; k <= m - 1; ++k) c.push_back(binom(mu + static_cast<double>(k - 1), k - 1));
  return c;
}

cplx apply_form(const std::vector<cplx>& c, const std::vector<std::int64_t>& x) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += c[i] * static_cast<double>(x[i]);
  return s;
}

// Exact law of X_n by enumerating every transition.
std::map<std::vector<std::int64_t>, double> enumerate(const CompositionVector& x0, int n) {
  std::map<std::vector<std::int64_t>, double> law{{x0.x, 1.0}};
  for (int step = 0; step < n; ++step) {
    std::map<std::vector<std::int64_t>, double> next;
    for (const auto& [x, p] : law) {
      double gaps = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) gaps += static_cast<double>(k + 1) * x[k];
      for (int k = 1; k <= x0.m - 1; ++k) {
        if (x[k - 1] == 0) continue;
        auto y = x;
        const auto w = increment_row(x0.m, k);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += w[j];
        next[y] += p * k * static_cast<double>(x[k - 1]) / gaps;
      }
    }
    law.swap(next);
  }
  return law;
}

}  // namespace

TEST(DtStep, ForcedTransitions) {
  Rng rng(1);
  for (int m : {3, 5, 27}) {
    const auto a = dt_step(CompositionVector::unit(m, 1), rng);
    EXPECT_EQ(a, CompositionVector::unit(m, 2));
    const auto b = dt_step(CompositionVector::unit(m, m - 1), rng);
    std::vector<std::int64_t> expect(static_cast<std::size_t>(m - 1), 0);
    expect[0] = m;
    EXPECT_EQ(b.x, expect);
  }
}

TEST(DtStep, TypeProbabilitiesM4) {
  Rng rng(2);
  const CompositionVector x0(4, {1, 1, 0});
  const int trials = 60000;
  int k1 = 0;
  for (int i = 0; i < trials; ++i) {
    const auto y = dt_step(x0, rng);
    if (y.x == std::vector<std::int64_t>{0, 2, 0}) ++k1;
  }
  const double p = 1.0 / 3.0;
  EXPECT_NEAR(static_cast<double>(k1) / trials, p, 4.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(DtSimulate, ZeroStepsAndConservation) {
  Rng rng(3);
  const CompositionVector x0(6, {2, 0, 1, 0, 1});
  EXPECT_EQ(dt_simulate(x0, 0, rng), x0);
  ProjectionTrace trace;
  const auto s = eigen_data(6);
  DtOptions opt;
  opt.trace = &trace;
  opt.u2_coeffs = s.u2_coeffs;
  const auto x = dt_simulate(x0, 500, rng, opt);
  EXPECT_EQ(x.gaps(), x0.gaps() + 500);
  ASSERT_EQ(trace.u1.size(), 501u);
  for (std::size_t i = 0; i < trace.u1.size(); ++i) EXPECT_EQ(trace.u1[i], static_cast<double>(x0.gaps() + i));
  EXPECT_NEAR(std::abs(trace.u2.back() - s.u2(std::span<const std::int64_t>(x.x))), 0.0, 1e-9);
}

TEST(DtSimulate, MatchesExhaustiveEnumeration) {
  const auto x0 = CompositionVector::unit(3, 1);
  const int n = 6;
  const auto law = enumerate(x0, n);
  std::map<std::vector<std::int64_t>, std::int64_t> counts;
  const int runs = 40000;
  for (int r = 0; r < runs; ++r) {
    Rng rng = make_rng(4, "enum", r);
    ++counts[dt_simulate(x0, n, rng).x];
  }
  double chi2 = 0.0;
  for (const auto& [x, p] : law) {
    const double e = p * runs;
    const double o = counts.count(x) ? static_cast<double>(counts[x]) : 0.0;
    chi2 += (o - e) * (o - e) / e;
  }
  for (const auto& [x, c] : counts) EXPECT_TRUE(law.count(x)) << "unreachable state visited";
  const double dof = static_cast<double>(law.size()) - 1.0;
  EXPECT_LT(chi2, dof + 6.0 * std::sqrt(2.0 * dof) + 10.0);
}

TEST(Martingale, OneStepIdentityByEnumeration) {
  for (int m = 3; m <= 6; ++m) {
    const auto roots = eigenvalues(m);
    const cplx mu = roots[1];  // m = 3: the real root -4; otherwise lambda2 or its conjugate
    const auto c = form_for(m, mu);
    std::vector<CompositionVector> starts{CompositionVector::unit(m, 1), CompositionVector::unit(m, m - 1)};
    std::vector<std::int64_t> mixed(static_cast<std::size_t>(m - 1), 1);
    starts.emplace_back(m, mixed);
    for (const auto& x0 : starts) {
      const auto law = enumerate(x0, 1);
      cplx e = 0.0;
      for (const auto& [x, p] : law) e += p * apply_form(c, x);
      const cplx expect = (1.0 + mu / static_cast<double>(x0.gaps())) * apply_form(c, x0.x);
      EXPECT_NEAR(std::abs(e - expect), 0.0, 1e-12 * (1.0 + std::abs(expect))) << "m=" << m;
    }
  }
}

TEST(KeyInsertion, SmallTreesAreDeterministic) {
  Rng rng(5);
  for (int m : {3, 5, 8}) {
    for (int n = 0; n < m - 1; ++n) EXPECT_EQ(key_insertion_oracle(m, n, rng), CompositionVector::unit(m, n + 1));
  }
  for (int n : {10, 37, 200}) EXPECT_EQ(key_insertion_oracle(4, n, rng).gaps(), n + 1);
}

TEST(KeyInsertion, LawMatchesChainM3N3) {
  std::map<std::vector<std::int64_t>, std::int64_t> a, b;
  for (int r = 0; r < 20000; ++r) {
    Rng ra = make_rng(6, "tree", r), rb = make_rng(6, "chain", r);
    ++a[key_insertion_oracle(3, 5, ra).x];
    ++b[dt_simulate(CompositionVector::unit(3, 1), 5, rb).x];
  }
  EXPECT_GT(stats::chi_square_two_sample(a, b).p_value, 1e-4);
}

TEST(JumpTimes, MeanAndLaplaceTransform) {
  const int n = 10, reps = 100000;
  std::vector<double> tau(reps), lap(reps);
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(7, "jt", r);
    const auto jt = ct_jump_times(n, 1, rng);
    ASSERT_EQ(jt.size(), static_cast<std::size_t>(n));
    for (int i = 1; i < n; ++i) ASSERT_GT(jt[i], jt[i - 1]);
    tau[r] = jt.back();
    lap[r] = std::exp(-0.5 * jt.back());
  }
  double harmonic = 0.0;
  for (int i = 0; i < n; ++i) harmonic += 1.0 / (1 + i);
  const auto mt = stats::mean_se(tau);
  EXPECT_NEAR(mt.mean, harmonic, 4.0 * mt.se);
  // n! Gamma(s+1)/Gamma(s+1+n) at s = 1/2.
  const double s = 0.5;
  const double exact = std::exp(std::lgamma(n + 1.0) + std::lgamma(s + 1.0) - std::lgamma(s + 1.0 + n));
  const auto ml = stats::mean_se(lap);
  EXPECT_NEAR(ml.mean, exact, 4.0 * ml.se);
}

TEST(JumpTimes, XiMeanIsExactAtFiniteN) {
  // E[n e^{-tau_n}] = n/(n+1) for N0 = 1.
  const auto xi = xi_samples(50, 1, 100000, 8);
  const auto ms = stats::mean_se(xi);
  EXPECT_NEAR(ms.mean, 50.0 / 51.0, 4.0 * ms.se);
}

TEST(EstimateLimits, DefinitionsAndErrors) {
  const auto s = eigen_data(27);
  EmbeddedRun run;
  run.steps = 100;
  run.n0 = 1;
  run.final_state = CompositionVector::unit(27, 1);
  run.jump_times.assign(1, std::log(100.0));
  const auto e = estimate_limits(run, s);
  EXPECT_NEAR(e.xi_hat, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.w_hat - std::exp(-s.lambda2 * std::log(100.0))), 0.0, 1e-14);

  EmbeddedRun empty;
  empty.final_state = CompositionVector::unit(27, 1);
  try {
    estimate_limits(empty, s);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::insufficient_data);
  }
}

TEST(EstimateLimits, DiscreteMartingaleHasConstantMean) {
  const auto s = eigen_data(27);
  const auto reps = simulate_replicas(s, CompositionVector::unit(27, 1), 300, 20000, 9, SimMode::discrete);
  std::vector<cplx> w;
  for (const auto& r : reps) w.push_back(r.wdt_hat);
  const auto ms = stats::mean_se(std::span<const cplx>(w));
  EXPECT_NEAR(ms.mean.real(), 1.0, 4.0 * ms.se_re);
  EXPECT_NEAR(ms.mean.imag(), 0.0, 4.0 * ms.se_im);
}

TEST(EstimateLimits, ClockIndependentOfChain) {
  const auto s = eigen_data(27);
  const auto reps = simulate_replicas(s, CompositionVector::unit(27, 1), 200, 5000, 10, SimMode::continuous);
  std::vector<double> a, b;
  for (const auto& r : reps) {
    a.push_back(r.xi_hat);
    b.push_back(r.wdt_hat.real());
  }
  const auto ma = stats::mean_se(a), mb = stats::mean_se(b);
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
  const double corr = cov / (static_cast<double>(a.size()) - 1.0) / (ma.sd * mb.sd);
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(a.size())));
}

TEST(Connection, FactorLimitAndErrors) {
  const auto s = eigen_data(27);
  const cplx limit = tgamma(1.0) / tgamma(1.0 + s.lambda2);
  // gamma_n = Gamma(n + 1 + l) / (Gamma(n + 1) Gamma(1 + l)) and
  // Gamma(n + 1 + l) / (Gamma(n + 1) n^l) = 1 + l (l + 1) / (2n) + O(1/n^2).
  const cplx l = s.lambda2;
  const cplx first_order = limit * (1.0 + l * (l + 1.0) / 2e6);
  EXPECT_NEAR(std::abs(connection_factor(l, 1, 1000000) - first_order), 0.0, 1e-8 * std::abs(limit));
  const std::vector<double> xi{1.0, -0.5};
  const std::vector<cplx> w{1.0, 2.0};
  try {
    martingale_connection_test(xi, w, w, s, 1.0, 9, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_sample);
  }
}

TEST(Connection, SelfComparisonAndMeans) {
  const auto s = eigen_data(27);
  const std::int64_t n = 400, reps = 3000;
  const auto xi = xi_samples(n, 1, reps, derive_seed(11, "xi"));
  const auto dt = simulate_replicas(s, CompositionVector::unit(27, 1), n, reps, derive_seed(11, "dt"), SimMode::discrete);
  const auto ct = simulate_replicas(s, CompositionVector::unit(27, 1), n, reps, derive_seed(11, "ct"), SimMode::continuous);
  std::vector<cplx> wdt, w;
  for (const auto& r : dt) wdt.push_back(r.wdt_hat);
  for (const auto& r : ct) w.push_back(r.w_hat);
  const auto rep = martingale_connection_test(xi, wdt, w, s, connection_factor(s.lambda2, 1, n), 199, 12, 1000);
  EXPECT_NEAR(rep.mean_product.real(), rep.mean_w.real(), 4.0 * std::hypot(rep.se_product_re, rep.se_w_re));
  EXPECT_NEAR(rep.mean_product.imag(), rep.mean_w.imag(), 4.0 * std::hypot(rep.se_product_im, rep.se_w_im));
  const auto self = stats::energy_test(w, w, 99, 13, 500);
  EXPECT_NEAR(self.statistic, 0.0, 1e-9);
}
