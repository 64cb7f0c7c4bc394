#include <gtest/gtest.h>

#include <cmath>

#include "mstlimits/cascade.hpp"

using namespace mst;

TEST(Cascade, DepthZeroIsOne) {
  Rng rng(1);
  EXPECT_EQ(cascade_sample({27, lambda2_of(27), 0, 1}, rng), cplx(1.0));
}

TEST(Cascade, BudgetGuard) {
  Rng rng(1);
  try {
    cascade_sample({27, lambda2_of(27), 5, 1}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::budget_exceeded);
  }
  EXPECT_NO_THROW(validate(CascadeConfig{27, lambda2_of(27), 4, 1}));
}

TEST(Cascade, MartingaleMeanAtEveryDepth) {
  for (int m : {3, 4, 5, 6, 27}) {
    // Any root of chi with Re > -1 has m E e^{-mu T} = 1; below m = 27 only the
    // root 1 gives an integrable weight.
    const cplx mu = m == 27 ? lambda2_of(m) : cplx(1.0);
    for (int depth = 0; depth <= 3; ++depth) {
      const std::size_t reps = m == 27 && depth == 3 ? 2000 : 20000;
      const auto ys = cascade_replicas({m, mu, depth, reps}, derive_seed(2, "mean", m, depth));
      if (depth == 0) continue;
      const auto ms = stats::mean_se(std::span<const cplx>(ys));
      EXPECT_NEAR(ms.mean.real(), 1.0, 4.0 * ms.se_re) << m << " " << depth;
      EXPECT_NEAR(ms.mean.imag(), 0.0, 4.0 * ms.se_im + 1e-12) << m << " " << depth;
    }
  }
}

TEST(Cascade, VarianceOfFirstLevelAndRecursion) {
  const int m = 27;
  const cplx l2 = lambda2_of(m);
  const double a2 = laplace_T(m, 2.0 * l2.real()).real();
  EXPECT_NEAR(cascade_variance(m, l2, 1), m * m * a2 - 1.0, 1e-12);
  for (int depth : {1, 2}) {
    const auto ys = cascade_replicas({m, l2, depth, 40000}, derive_seed(3, "var", depth));
    std::vector<double> sq;
    for (const cplx y : ys) sq.push_back(std::norm(y - 1.0));
    const auto ms = stats::mean_se(sq);
    EXPECT_NEAR(ms.mean, cascade_variance(m, l2, depth), 4.0 * ms.se) << depth;
  }
  // Recursion increases towards the limit, and the limit is its fixed point.
  const double v = variance_limit(m, l2);
  EXPECT_NEAR(v, (m * m * a2 - 1.0) + m * a2 * v, 1e-9 * v);
  double prev = 0.0;
  for (int d = 1; d <= 60; ++d) {
    const double cur = cascade_variance(m, l2, d);
    EXPECT_GT(cur, prev);
    EXPECT_LT(cur, v);
    prev = cur;
  }
  EXPECT_NEAR(prev, v, 0.01 * v);
}

TEST(VarianceLimit, ValuesAndBlowUp) {
  EXPECT_NEAR(variance_limit(27, lambda2_of(27)), 252.09, 0.01);
  EXPECT_NEAR(variance_limit(30, lambda2_of(30)), 63.7, 0.05);
  EXPECT_NEAR(variance_limit(40, lambda2_of(40)), 20.6, 0.05);
  double prev = 0.0;
  for (double s : {0.9, 0.8, 0.7, 0.6, 0.55, 0.52, 0.51}) {
    const double v = variance_limit(27, cplx(s, 2.0));
    EXPECT_GT(v, prev);
    prev = v;
  }
  try {
    variance_limit(27, cplx(0.45, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_square_integrable_regime);
  }
}

TEST(ExpMoments, TrivialCases) {
  const std::vector<cplx> ones(1000, 1.0);
  const auto grid = exp_moment_grid(0.1);
  const auto rep = exp_moment_probe(ones, grid);
  EXPECT_NEAR(rep.c_hat, 0.0, 1e-12);
  EXPECT_TRUE(rep.all_hold);
  EXPECT_EQ(rep.points.front().t, cplx(0.0));
  EXPECT_NEAR(rep.points.front().inner, 1.0, 1e-15);
  for (const auto& p : rep.points) EXPECT_NEAR(p.log_inner, p.t.real(), 1e-12);
}

TEST(ExpMoments, RejectsLargeT) {
  const std::vector<cplx> ones(10, 1.0);
  const std::vector<cplx> grid{0.5};
  EXPECT_THROW(exp_moment_probe(ones, grid, 0.1), Error);
}

TEST(ExpMoments, OverflowIsReportedNotThrown) {
  const std::vector<cplx> huge(20, cplx(1e6, 0.0));
  const std::vector<cplx> grid{0.0, 0.05};
  const auto rep = exp_moment_probe(huge, grid, 0.1, 2);
  EXPECT_EQ(rep.failing.size(), 1u);
  EXPECT_FALSE(rep.all_hold);
}
