#pragma once

// Eigendata of the replacement matrix R_G of the m-ary search tree process:
// characteristic polynomial, eigenvalues, lambda2 and the eigenforms u1, u2
// with their dual vectors v1, v2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mstlimits/error.hpp"
#include "mstlimits/special.hpp"

namespace mst {

inline constexpr double kRootResidualTol = 1e-12;
inline constexpr double kIdentityTol = 1e-10;

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline void check_branching_factor(int m, int min_m = 2) {
  require(m >= min_m, ErrorCode::invalid_parameter,
          "branching factor m=" + std::to_string(m) + " below " + std::to_string(min_m));
  require(m <= 60, ErrorCode::invalid_parameter,
          "branching factor m=" + std::to_string(m) + " above supported range (60)");
}

/// prod_{k=1}^{m-1} (lambda + k).
inline cplx rising_product(int m, cplx lambda) {
  cplx p = 1.0;
  for (int k = 1; k <= m - 1; ++k) p *= lambda + static_cast<double>(k);
  return p;
}

/// chi(lambda) = prod_{k=1}^{m-1}(lambda + k) - m!.
inline cplx char_poly_eval(int m, cplx lambda) {
  check_branching_factor(m);
  return rising_product(m, lambda) - factorial(m);
}

/// Row k (1-based) of the replacement matrix R: the increment applied to the
/// composition vector when a node of type k receives a key.
inline std::vector<std::int64_t> increment_row(int m, int k) {
  std::vector<std::int64_t> w(static_cast<std::size_t>(m - 1), 0);
  if (k <= m - 2) {
    w[k - 1] = -1;
    w[k] = 1;
  } else {
    w[0] += m;
    w[m - 2] -= 1;
  }
  return w;
}

/// The (m-1)x(m-1) matrix of the generator restricted to linear forms.
inline Eigen::MatrixXd generator_matrix(int m) {
  check_branching_factor(m);
  const int d = m - 1;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
  for (int k = 1; k <= d; ++k) {
    const auto w = increment_row(m, k);
    for (int j = 0; j < d; ++j) r(k - 1, j) += static_cast<double>(k) * static_cast<double>(w[j]);
  }
  return r;
}

struct PolishedRoot {
  cplx value;
  double residual;  // |chi(value)| / m!
};

inline PolishedRoot newton_polish(int m, cplx lambda, int max_iter = 60) {
  const double scale = factorial(m);
  double best_res = std::abs(char_poly_eval(m, lambda)) / scale;
  cplx best = lambda;
  for (int it = 0; it < max_iter; ++it) {
    const cplx p = rising_product(m, lambda);
    const cplx f = p - scale;
    const cplx df = p * harmonic_shift(m, lambda);
    if (std::abs(df) == 0.0) break;
    const cplx step = f / df;
    lambda -= step;
    const double res = std::abs(char_poly_eval(m, lambda)) / scale;
    if (res < best_res) {
      best_res = res;
      best = lambda;
    }
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(lambda)) && res <= kRootResidualTol) break;
  }
  return {best, best_res};
}

namespace detail {

// Make the root set exactly closed under conjugation and snap real roots.
inline void symmetrize_conjugates(std::vector<cplx>& roots) {
  const std::size_t n = roots.size();
  std::vector<bool> done(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    const double tol = 1e-9 * (1.0 + std::abs(roots[i]));
    if (std::abs(roots[i].imag()) <= tol) {
      roots[i] = {roots[i].real(), 0.0};
      done[i] = true;
      continue;
    }
    std::size_t partner = n;
    double best = 1e300;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || done[j]) continue;
      const double d = std::abs(roots[j] - std::conj(roots[i]));
      if (d < best) {
        best = d;
        partner = j;
      }
    }
    if (partner < n && best <= 1e-6 * (1.0 + std::abs(roots[i]))) {
      const cplx upper = roots[i].imag() > 0 ? roots[i] : std::conj(roots[i]);
      const cplx mid{0.5 * (upper.real() + roots[partner].real()),
                     0.5 * (std::abs(upper.imag()) + std::abs(roots[partner].imag()))};
      roots[i] = roots[i].imag() > 0 ? mid : std::conj(mid);
      roots[partner] = std::conj(roots[i]);
      done[partner] = true;
    }
    done[i] = true;
  }
}

}  // namespace detail

struct EigenResult {
  std::vector<cplx> values;
  std::vector<double> residuals;  // |chi(e)| / m!
};

/// All m-1 roots of chi, sorted by (Re desc, Im desc). Computed by a
/// nonsymmetric eigensolver on R_G and polished by Newton on the product form.
inline EigenResult eigenvalues_with_residuals(int m) {
  check_branching_factor(m);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(generator_matrix(m), false);
  require(solver.info() == Eigen::Success, ErrorCode::numerical_failure,
          "eigensolver did not converge for m=" + std::to_string(m));
  std::vector<cplx> roots;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    roots.push_back(newton_polish(m, solver.eigenvalues()[i]).value);
  }
  detail::symmetrize_conjugates(roots);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  EigenResult out;
  out.values = roots;
  const double scale = factorial(m);
  for (const cplx r : roots) {
    const double res = std::abs(char_poly_eval(m, r)) / scale;
    require(res <= kRootResidualTol, ErrorCode::numerical_failure,
            "root residual " + std::to_string(res) + " above tolerance for m=" + std::to_string(m));
    out.residuals.push_back(res);
  }
  return out;
}

inline std::vector<cplx> eigenvalues(int m) { return eigenvalues_with_residuals(m).values; }

/// Root with second largest real part and positive imaginary part. The root 1
/// is excluded explicitly before ranking.
inline cplx lambda2_from(std::span<const cplx> roots, int m) {
  std::vector<cplx> rest;
  for (const cplx r : roots)
    if (std::abs(r - 1.0) > 1e-8) rest.push_back(r);
  require(!rest.empty(), ErrorCode::no_lambda2, "no eigenvalue besides 1 for m=" + std::to_string(m));
  double top = -1e300;
  for (const cplx r : rest) top = std::max(top, r.real());
  for (const cplx r : rest)
    if (r.real() == top && r.imag() > 0.0) return r;
  throw Error(ErrorCode::no_lambda2,
              "second largest real part is attained by a real root for m=" + std::to_string(m));
}

inline cplx lambda2_of(int m) {
  const auto roots = eigenvalues(m);
  return lambda2_from(roots, m);
}

struct SpectralData {
  int m = 0;
  std::vector<cplx> eigenvalues;
  std::vector<double> residuals;
  cplx lambda2;
  double sigma2 = 0.0;
  std::vector<std::int64_t> u1_coeffs;  // entry k-1 is k
  std::vector<cplx> u2_coeffs;          // entry k-1 is binom(lambda2+k-1, k-1)
  std::vector<double> v1;
  std::vector<cplx> v2;
  double hm1 = 0.0;
  cplx hm_lambda2;

  std::size_t dim() const { return static_cast<std::size_t>(m - 1); }

  template <typename T>
  double u1(std::span<const T> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += static_cast<double>(u1_coeffs[k]) * static_cast<double>(x[k]);
    return s;
  }

  template <typename T>
  cplx u2(std::span<const T> x) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += u2_coeffs[k] * cplx(x[k]);
    return s;
  }

  cplx u1_c(std::span<const cplx> x) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += static_cast<double>(u1_coeffs[k]) * x[k];
    return s;
  }
};

inline SpectralData eigen_data(int m) {
  check_branching_factor(m);
  SpectralData s;
  s.m = m;
  auto er = eigenvalues_with_residuals(m);
  s.eigenvalues = std::move(er.values);
  s.residuals = std::move(er.residuals);
  s.lambda2 = lambda2_from(s.eigenvalues, m);
  s.sigma2 = s.lambda2.real();
  s.hm1 = harmonic_shift(m, 1.0).real();
  s.hm_lambda2 = harmonic_shift(m, s.lambda2);
  for (int k = 1; k <= m - 1; ++k) {
    s.u1_coeffs.push_back(k);
    s.u2_coeffs.push_back(binom(s.lambda2 + static_cast<double>(k - 1), k - 1));
    s.v1.push_back(1.0 / (s.hm1 * k * (k + 1.0)));
    s.v2.push_back(1.0 / (s.hm_lambda2 * static_cast<double>(k) * binom(s.lambda2 + static_cast<double>(k), k)));
  }
  return s;
}

/// Largest deviations of the eigenform and duality identities.
struct SpectralCheck {
  double max_root_residual = 0.0;
  double eigenform_u1 = 0.0;  // max_k |k u1(w_k) - k|
  double eigenform_u2 = 0.0;  // max_k |k u2(w_k) - lambda2 u2_k| / |lambda2 u2_k|
  double duality = 0.0;       // max of |u1(v1)-1|, |u2(v2)-1|, |u1(v2)|, |u2(v1)|
  double conjugation = 0.0;   // max distance from conj(e) to the root set
  double min_separation = 0.0;
  bool one_is_dominant = false;
};

inline SpectralCheck check_spectral(const SpectralData& s) {
  SpectralCheck c;
  const int m = s.m;
  for (double r : s.residuals) c.max_root_residual = std::max(c.max_root_residual, r);
  for (int k = 1; k <= m - 1; ++k) {
    const auto w = increment_row(m, k);
    const std::span<const std::int64_t> ws(w);
    c.eigenform_u1 = std::max(c.eigenform_u1, std::abs(k * s.u1(ws) - static_cast<double>(s.u1_coeffs[k - 1])));
    const cplx lhs = static_cast<double>(k) * s.u2(ws);
    const cplx rhs = s.lambda2 * s.u2_coeffs[k - 1];
    c.eigenform_u2 = std::max(c.eigenform_u2, std::abs(lhs - rhs) / std::abs(rhs));
  }
  const std::vector<cplx> v1c(s.v1.begin(), s.v1.end());
  c.duality = std::max({std::abs(s.u1(std::span<const double>(s.v1)) - 1.0),
                        std::abs(s.u2(std::span<const cplx>(s.v2)) - 1.0),
                        std::abs(s.u1_c(s.v2)), std::abs(s.u2(std::span<const cplx>(v1c)))});
  double sep = 1e300;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    double nearest = 1e300;
    for (std::size_t j = 0; j < s.eigenvalues.size(); ++j) {
      nearest = std::min(nearest, std::abs(std::conj(s.eigenvalues[i]) - s.eigenvalues[j]));
      if (j != i) sep = std::min(sep, std::abs(s.eigenvalues[i] - s.eigenvalues[j]));
    }
    c.conjugation = std::max(c.conjugation, nearest);
  }
  c.min_separation = s.eigenvalues.size() > 1 ? sep : 0.0;
  c.one_is_dominant = !s.eigenvalues.empty() && std::abs(s.eigenvalues.front() - 1.0) < 1e-10 &&
                      (s.eigenvalues.size() == 1 || s.eigenvalues[1].real() < 1.0 - 1e-9);
  return c;
}

}  // namespace mst
