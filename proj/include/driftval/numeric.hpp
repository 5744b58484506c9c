#pragma once

// Small numeric helpers shared across the library: compensated summation,
// basic statistics, root bracketing, and locale-independent number printing.

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftval {

/// Kahan compensated accumulator. Keeps sums of ~1e3 log terms accurate to
/// a few ulps, which the exact identity checks rely on.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty range");
  return kahan_total(xs) / static_cast<double>(xs.size());
}

/// Sample standard error of the mean (unbiased variance / sqrt(n)).
inline double std_error_of(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean_of(xs);
  KahanSum sq;
  for (double x : xs) sq.add((x - m) * (x - m));
  return std::sqrt(sq.value() / static_cast<double>(n - 1) /
                   static_cast<double>(n));
}

inline double variance_of(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("variance_of: need >= 2 samples");
  const double m = mean_of(xs);
  KahanSum sq;
  for (double x : xs) sq.add((x - m) * (x - m));
  return sq.value() / static_cast<double>(n - 1);
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median_of: empty range");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x, closed form.
inline LinearFit linear_regression(std::span<const double> x,
                                   std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("linear_regression: need >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  KahanSum sx, sy;
  for (double v : x) sx.add(v);
  for (double v : y) sy.add(v);
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  KahanSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  if (sxx.value() <= 0.0) {
    throw std::invalid_argument("linear_regression: degenerate x values");
  }
  LinearFit fit;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  if (syy.value() > 0.0) {
    const double ss_res = syy.value() - fit.slope * sxy.value();
    fit.r_squared = 1.0 - ss_res / syy.value();
  } else {
    fit.r_squared = 1.0;
  }
  return fit;
}

/// Shortest round-trip decimal representation (locale independent).
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Fixed-precision decimal, used where byte-stable layout matters (SVG).
inline std::string format_fixed(double x, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x,
                           std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double out = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: not a number: " + std::string(s));
  }
  return out;
}

inline long long parse_int(std::string_view s) {
  long long out = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_int: not an integer: " + std::string(s));
  }
  return out;
}

inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

}  // namespace driftval
