#pragma once

// Scaled moments a_{k,p} = E W_k^p / p! from the formal differential system,
// generalized power series in z^{-(j + p lambda2)} and the check of
// y^{(m-1)} = y^m for G_1(z) = -rho/z L_1(z^{-lambda2}).

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/special.hpp"
#include "mstlimits/spectral.hpp"

namespace mst {

inline constexpr int kMaxMomentOrder = 12;
inline constexpr double kResonanceTol = 1e-10;

struct MomentTable {
  int m = 0;
  cplx lambda2;
  int pmax = 0;
  std::vector<std::vector<cplx>> a;  // a[k-1][p]

  cplx at(int k, int p) const { return a[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(p)]; }
  /// E W_k^p = p! a_{k,p}.
  cplx moment(int k, int p) const { return factorial(p) * at(k, p); }
};

namespace detail {

inline std::vector<cplx> series_mul(const std::vector<cplx>& x, const std::vector<cplx>& y, std::size_t n) {
  std::vector<cplx> out(n + 1, 0.0);
  for (std::size_t i = 0; i < x.size() && i <= n; ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < y.size() && i + j <= n; ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

inline std::vector<cplx> series_pow(std::vector<cplx> x, int e, std::size_t n) {
  std::vector<cplx> r(n + 1, 0.0);
  r[0] = 1.0;
  x.resize(n + 1, 0.0);
  while (e > 0) {
    if (e & 1) r = series_mul(r, x, n);
    e >>= 1;
    if (e > 0) x = series_mul(x, x, n);
  }
  return r;
}

}  // namespace detail

inline MomentTable moment_table(int m, int pmax) {
  check_branching_factor(m, 3);
  require(pmax >= 1 && pmax <= kMaxMomentOrder, ErrorCode::invalid_parameter,
          "pmax must lie in [1, " + std::to_string(kMaxMomentOrder) + "]");
  MomentTable t;
  t.m = m;
  t.pmax = pmax;
  t.lambda2 = lambda2_of(m);
  const cplx l2 = t.lambda2;
  std::vector<cplx> a1(static_cast<std::size_t>(pmax) + 1, 0.0);
  a1[0] = 1.0;
  a1[1] = 1.0;
  const double fm1 = factorial(m - 1);
  for (int p = 2; p <= pmax; ++p) {
    const cplx z = static_cast<double>(p) * l2;
    const cplx chi = char_poly_eval(m, z);
    const double scale = std::max(factorial(m), std::abs(rising_product(m, z)));
    require(std::abs(chi) / scale > kResonanceTol, ErrorCode::resonant_degeneracy,
            "chi(p lambda2) vanishes numerically at p=" + std::to_string(p));
    // a_{1,p} is still 0 in a1, so the coefficient excludes the m a_{1,p} term.
    const auto lm = detail::series_pow(a1, m, static_cast<std::size_t>(p));
    a1[static_cast<std::size_t>(p)] = lm[static_cast<std::size_t>(p)] * fm1 / chi;
  }
  t.a.assign(static_cast<std::size_t>(m - 1), std::vector<cplx>(static_cast<std::size_t>(pmax) + 1));
  t.a[0] = a1;
  for (int k = 1; k <= m - 2; ++k)
    for (int p = 0; p <= pmax; ++p)
      t.a[k][p] = (1.0 + static_cast<double>(p) * l2 / static_cast<double>(k)) * t.a[k - 1][p];
  return t;
}

/// sum_p coeffs[p] z^{-(shift + p lambda2)}, truncated at p = coeffs.size()-1.
struct GenSeries {
  cplx lambda2;
  int shift = 0;
  std::vector<cplx> coeffs;

  cplx exponent(std::size_t p) const { return static_cast<double>(shift) + static_cast<double>(p) * lambda2; }

  GenSeries derivative() const {
    GenSeries d{lambda2, shift + 1, coeffs};
    for (std::size_t p = 0; p < coeffs.size(); ++p) d.coeffs[p] = -exponent(p) * coeffs[p];
    return d;
  }

  GenSeries derivative(int order) const {
    GenSeries d = *this;
    for (int i = 0; i < order; ++i) d = d.derivative();
    return d;
  }
};

inline GenSeries multiply(const GenSeries& x, const GenSeries& y) {
  require(x.lambda2 == y.lambda2, ErrorCode::lattice_mismatch, "series on different exponent lattices");
  const std::size_t n = std::min(x.coeffs.size(), y.coeffs.size()) - 1;
  return {x.lambda2, x.shift + y.shift, detail::series_mul(x.coeffs, y.coeffs, n)};
}

inline GenSeries power(const GenSeries& x, int e) {
  require(e >= 1, ErrorCode::invalid_parameter, "series power needs e >= 1");
  GenSeries r = x;
  for (int i = 1; i < e; ++i) r = multiply(r, x);
  return r;
}

/// Max over p of |x_p - y_p| / max(|x_p|, |y_p|); both series must share shift and lattice.
inline double relative_residual(const GenSeries& x, const GenSeries& y) {
  require(x.lambda2 == y.lambda2 && x.shift == y.shift, ErrorCode::lattice_mismatch,
          "comparing series with different exponents");
  double r = 0.0;
  for (std::size_t p = 0; p < std::min(x.coeffs.size(), y.coeffs.size()); ++p) {
    const double s = std::max(std::abs(x.coeffs[p]), std::abs(y.coeffs[p]));
    if (s > 0.0) r = std::max(r, std::abs(x.coeffs[p] - y.coeffs[p]) / s);
  }
  return r;
}

/// Principal (m-1)-th root of (m-1)!: the root for which -rho/z L_1(z^{-lambda2})
/// satisfies y^{(m-1)} = y^m (compare the z^{-m} coefficients).
inline cplx ode_rho(int m) { return std::pow(factorial(m - 1), 1.0 / (m - 1)); }

/// Principal (m-1)-th root of (-1)^m (m-1)!.
inline cplx ode_rho_signed(int m) {
  return std::pow(cplx((m % 2 == 0 ? 1.0 : -1.0) * factorial(m - 1), 0.0), 1.0 / (m - 1));
}

inline GenSeries g1_series(const MomentTable& t, cplx rho) {
  GenSeries g{t.lambda2, 1, {}};
  for (int p = 0; p <= t.pmax; ++p) g.coeffs.push_back(-rho * t.at(1, p));
  return g;
}

struct OdeReport {
  int m = 0;
  int pmax = 0;
  cplx rho;
  double residual = 0.0;         // y^{(m-1)} vs y^m
  double system_residual = 0.0;  // G_k' = G_{k+1}, G_{m-1}' = G_1^m
  std::vector<double> per_order;
};

inline OdeReport ode_check(const MomentTable& t, cplx rho) {
  const int m = t.m;
  OdeReport rep{m, t.pmax, rho, 0.0, 0.0, {}};
  const GenSeries y = g1_series(t, rho);
  const GenSeries lhs = y.derivative(m - 1);
  const GenSeries rhs = power(y, m);
  require(lhs.shift == rhs.shift, ErrorCode::lattice_mismatch, "y^(m-1) and y^m on different shifts");
  for (int p = 0; p <= t.pmax; ++p) {
    const double s = std::max(std::abs(lhs.coeffs[p]), std::abs(rhs.coeffs[p]));
    rep.per_order.push_back(s > 0.0 ? std::abs(lhs.coeffs[p] - rhs.coeffs[p]) / s : 0.0);
  }
  rep.residual = *std::max_element(rep.per_order.begin(), rep.per_order.end());

  // G_k = (-1)^k rho (k-1)! L_k(z^{-lambda2}) / z^k.
  std::vector<GenSeries> g;
  for (int k = 1; k <= m - 1; ++k) {
    GenSeries gk{t.lambda2, k, {}};
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    for (int p = 0; p <= t.pmax; ++p) gk.coeffs.push_back(sign * rho * factorial(k - 1) * t.at(k, p));
    g.push_back(std::move(gk));
  }
  for (int k = 1; k <= m - 2; ++k)
    rep.system_residual = std::max(rep.system_residual, relative_residual(g[k - 1].derivative(), g[k]));
  rep.system_residual = std::max(rep.system_residual, relative_residual(g[m - 2].derivative(), power(g[0], m)));
  return rep;
}

inline OdeReport ode_check(int m, int pmax) { return ode_check(moment_table(m, pmax), ode_rho(m)); }

}  // namespace mst
