#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "ensmark/core.hpp"

namespace ensmark::stats {

/// Median (mean of the two middle values for even sizes).
inline double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1).
inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double binomial_sigma(double q, std::size_t trials) {
  return std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of `observed` counts against `expected` probabilities.
/// Bins with expected count below 5 are pooled into one bin.
inline ChiSquare chi_square_gof(std::span<const std::size_t> observed, std::span<const double> expected) {
  if (observed.size() != expected.size())
    throw Error(ErrorCode::invalid_argument, "observed/expected size mismatch");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
  ChiSquare out;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected[i] * total;
    const double o = static_cast<double>(observed[i]);
    if (e < 5.0) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    out.statistic += (o - e) * (o - e) / e;
    ++bins;
  }
  if (pooled_exp > 0.0) {
    out.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++bins;
  }
  if (bins < 2) return out;
  out.dof = bins - 1;
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

/// One-sided KS distance sup_x (F_n(x) - x) of a sample against U(0,1).
/// Small values mean the sample is stochastically no smaller than uniform.
inline double ks_d_plus_uniform(std::vector<double> sample) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    d = std::max(d, static_cast<double>(i + 1) / n - sample[i]);
  return d;
}

/// Asymptotic P(D+ >= d) = exp(-2 n d^2).
inline double ks_d_plus_p_value(double d, std::size_t n) {
  return std::min(1.0, std::exp(-2.0 * static_cast<double>(n) * d * d));
}

/// Formats exp(log_value) in scientific notation without going through a
/// double that might underflow.
inline std::string format_exp(double log_value, int digits = 6) {
  if (std::isnan(log_value)) return "nan";
  if (log_value == 0.0) return "1";
  const double log10v = log_value / std::log(10.0);
  double exponent = std::floor(log10v);
  double mantissa = std::pow(10.0, log10v - exponent);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits - 1, mantissa);
  if (std::string(buf).rfind("10.", 0) == 0) {  // rounding carried over
    mantissa /= 10.0;
    exponent += 1.0;
    std::snprintf(buf, sizeof buf, "%.*f", digits - 1, mantissa);
  }
  return std::string(buf) + "e" + std::to_string(static_cast<long long>(exponent));
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ensmark::stats
