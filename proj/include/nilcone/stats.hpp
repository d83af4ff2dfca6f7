#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nilcone::stats {

struct MeanCi {
  double mean = 0;
  double half_width = 0; // 95% normal-approximation half width
  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
};

inline MeanCi mean_ci(const std::vector<double>& xs)
{
  if (xs.empty())
    throw std::invalid_argument("mean_ci of empty sample");
  double s = 0;
  for (double x : xs)
    s += x;
  const double n = static_cast<double>(xs.size());
  const double mean = s / n;
  double v = 0;
  for (double x : xs)
    v += (x - mean) * (x - mean);
  const double var = xs.size() > 1 ? v / (n - 1) : 0.0;
  return {mean, 1.96 * std::sqrt(var / n)};
}

inline double quantile(std::vector<double> xs, double q)
{
  if (xs.empty())
    throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return xs[lo] * (1 - f) + xs[hi] * f;
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

inline double fraction_below(const std::vector<double>& xs, double eps)
{
  if (xs.empty())
    return 0.0;
  std::size_t c = 0;
  for (double x : xs)
    c += (x < eps);
  return static_cast<double>(c) / static_cast<double>(xs.size());
}

/// Kolmogorov-Smirnov statistic of a sample against Uniform[lo, hi).
inline double ks_uniform(std::vector<double> xs, double lo = 0.0, double hi = 1.0)
{
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope needs >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Median-of-3 smoothing with endpoints kept.
inline std::vector<double> median3(const std::vector<double>& v)
{
  std::vector<double> out = v;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    double a = v[i - 1], b = v[i], c = v[i + 1];
    out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

inline bool non_decreasing(const std::vector<double>& v)
{
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1])
      return false;
  return true;
}

inline bool strictly_decreasing(const std::vector<double>& v)
{
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1]))
      return false;
  return true;
}

inline bool non_increasing(const std::vector<double>& v)
{
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1])
      return false;
  return true;
}

} // namespace nilcone::stats
