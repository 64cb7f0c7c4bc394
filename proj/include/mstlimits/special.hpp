#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace mst {

using cplx = std::complex<double>;

/// Generalized binomial coefficient binom(z, n) = z(z-1)...(z-n+1)/n!,
/// evaluated as a running product (no Gamma ratios, so no branch choice).
inline cplx binom(cplx z, int n) {
  cplx out = 1.0;
  for (int j = 0; j < n; ++j) out *= (z - static_cast<double>(j)) / static_cast<double>(j + 1);
  return out;
}

/// H_m(z) = sum_{k=1}^{m-1} 1/(z+k).
inline cplx harmonic_shift(int m, cplx z) {
  cplx s = 0.0;
  for (int k = 1; k <= m - 1; ++k) s += 1.0 / (z + static_cast<double>(k));
  return s;
}

/// log Gamma(z) for Re z > 0 via the Lanczos approximation (g = 7, n = 9).
/// Relative accuracy ~1e-15 on the right half plane.
inline cplx lgamma(cplx z) {
  static constexpr std::array<double, 9> c = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z.real() < 0.5) {
    // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * z)) - lgamma(1.0 - z);
  }
  z -= 1.0;
  cplx x = c[0];
  for (int i = 1; i < 9; ++i) x += c[i] / (z + static_cast<double>(i));
  const cplx t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

inline cplx tgamma(cplx z) { return std::exp(lgamma(z)); }

/// Principal complex power of a positive real: x^z = exp(z log x).
inline cplx real_pow(double x, cplx z) { return std::exp(z * std::log(x)); }

}  // namespace mst
