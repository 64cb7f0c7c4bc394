#pragma once

// Small statistics toolbox used by the checks: standard errors, KS and
// chi-square tests, the energy-distance permutation test, median of means.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "mstlimits/error.hpp"
#include "mstlimits/random.hpp"
#include "mstlimits/special.hpp"

namespace mst::stats {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

inline MeanSe mean_se(std::span<const double> x) {
  require(x.size() >= 2, ErrorCode::insufficient_data, "mean_se needs at least two values");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n), sd};
}

struct ComplexMeanSe {
  cplx mean;
  double se_re = 0.0;
  double se_im = 0.0;
};

inline ComplexMeanSe mean_se(std::span<const cplx> z) {
  std::vector<double> re(z.size()), im(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    re[i] = z[i].real();
    im[i] = z[i].imag();
  }
  const auto r = mean_se(std::span<const double>(re));
  const auto i = mean_se(std::span<const double>(im));
  return {{r.mean, i.mean}, r.se, i.se};
}

inline cplx mean(std::span<const cplx> z) {
  cplx s = 0.0;
  for (const cplx v : z) s += v;
  return s / static_cast<double>(z.size());
}

/// E|Z - EZ|^2 with the 1/n normalization.
inline double variance(std::span<const cplx> z) {
  const cplx mu = mean(z);
  double s = 0.0;
  for (const cplx v : z) s += std::norm(v - mu);
  return s / static_cast<double>(z.size());
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

inline double ks_p_value(double d, double n_effective) {
  const double s = std::sqrt(n_effective);
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}

inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::insufficient_data, "ks_two_sample on empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

inline TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  require(!a.empty(), ErrorCode::insufficient_data, "ks_one_sample on empty sample");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Two-sample chi-square homogeneity test on binned counts keyed by category.
/// Categories with fewer than min_expected combined counts are pooled into one.
template <typename Key>
ChiSquareResult chi_square_two_sample(const std::map<Key, std::int64_t>& a,
                                      const std::map<Key, std::int64_t>& b, double min_combined = 10.0) {
  double na = 0.0, nb = 0.0;
  std::map<Key, std::pair<double, double>> cells;
  for (const auto& [k, v] : a) {
    cells[k].first += static_cast<double>(v);
    na += static_cast<double>(v);
  }
  for (const auto& [k, v] : b) {
    cells[k].second += static_cast<double>(v);
    nb += static_cast<double>(v);
  }
  require(na > 0 && nb > 0, ErrorCode::insufficient_data, "chi-square on empty histogram");
  std::vector<std::pair<double, double>> bins;
  std::pair<double, double> pooled{0.0, 0.0};
  for (const auto& [k, v] : cells) {
    if (v.first + v.second >= min_combined) {
      bins.push_back(v);
    } else {
      pooled.first += v.first;
      pooled.second += v.second;
    }
  }
  if (pooled.first + pooled.second > 0) bins.push_back(pooled);
  const double ra = std::sqrt(nb / na), rb = std::sqrt(na / nb);
  double chi2 = 0.0;
  for (const auto& [x, y] : bins) {
    if (x + y <= 0) continue;
    chi2 += (ra * x - rb * y) * (ra * x - rb * y) / (x + y);
  }
  ChiSquareResult r;
  r.statistic = chi2;
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * chi2) : 1.0;
  return r;
}

struct EnergyTestResult {
  double statistic = 0.0;  // V-statistic energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'|
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  int permutations = 0;
};

/// Two-sample energy-distance permutation test on points of the plane.
/// Samples larger than max_per_group are truncated to their first
/// max_per_group entries (inputs are i.i.d., so this is a valid subsample).
inline EnergyTestResult energy_test(std::span<const cplx> a, std::span<const cplx> b, int permutations,
                                    std::uint64_t seed, std::size_t max_per_group = 2000) {
  require(a.size() >= 2 && b.size() >= 2, ErrorCode::insufficient_data, "energy_test needs two samples");
  const std::size_t na = std::min(a.size(), max_per_group);
  const std::size_t nb = std::min(b.size(), max_per_group);
  const std::size_t n = na + nb;
  std::vector<cplx> pts(n);
  std::copy_n(a.begin(), na, pts.begin());
  std::copy_n(b.begin(), nb, pts.begin() + static_cast<std::ptrdiff_t>(na));

  std::vector<float> dist(n * n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const float d = static_cast<float>(std::abs(pts[i] - pts[j]));
      dist[i * n + j] = d;
      total += d;
    }
  }

  std::vector<float> label(n, 0.0f);
  auto statistic = [&]() {
    double saa = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = &dist[i * n];
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(row[j] * label[j]);
      if (label[i] > 0.5f) saa += acc;
      else sab += acc;
    }
    const double sbb = total - 2.0 * sab - saa;
    const double fa = static_cast<double>(na), fb = static_cast<double>(nb);
    return 2.0 * sab / (fa * fb) - saa / (fa * fa) - sbb / (fb * fb);
  };

  for (std::size_t i = 0; i < na; ++i) label[i] = 1.0f;
  EnergyTestResult r;
  r.statistic = statistic();
  r.n_a = na;
  r.n_b = nb;
  r.permutations = permutations;
  Rng rng(seed);
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(label.begin(), label.end(), rng);
    if (statistic() >= r.statistic - 1e-12 * std::abs(r.statistic)) ++exceed;
  }
  r.p_value = (1.0 + exceed) / (1.0 + permutations);
  return r;
}

/// Median of block means; blocks are contiguous slices of equal size.
inline double median_of_means(std::span<const double> x, int blocks) {
  require(blocks >= 1 && x.size() >= static_cast<std::size_t>(blocks), ErrorCode::insufficient_data,
          "median_of_means needs at least one value per block");
  const std::size_t per = x.size() / static_cast<std::size_t>(blocks);
  std::vector<double> means;
  for (int b = 0; b < blocks; ++b) {
    const auto first = x.begin() + static_cast<std::ptrdiff_t>(b * per);
    means.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(per), 0.0) / static_cast<double>(per));
  }
  std::sort(means.begin(), means.end());
  const std::size_t mid = means.size() / 2;
  return means.size() % 2 ? means[mid] : 0.5 * (means[mid - 1] + means[mid]);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::insufficient_data, "least_squares needs two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

}  // namespace mst::stats
