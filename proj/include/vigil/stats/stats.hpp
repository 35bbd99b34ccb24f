#pragma once

// Statistical primitives shared by the experiment runners: Pearson r with a
// t-based p-value, the Fisher r-to-z two-sample comparison, Welch's unequal-
// variance t test, and rank-based quartile splits.
//
// The t and normal CDFs are implemented directly (regularized incomplete beta
// via the standard continued fraction, erfc from libm) so results are
// deterministic and dependency-free; golden-value tests pin them against
// independently computed references.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

struct CorrelationResult {
  double r = 0.0;
  std::size_t n = 0;
  bool degenerate = false;   // either input series had zero variance
  double p_value_vs_zero = 1.0;
};

struct RToZComparison {
  double r1 = 0.0;
  std::size_t n1 = 0;
  double r2 = 0.0;
  std::size_t n2 = 0;
  double z = 0.0;
  double p = 1.0;  // two-sided
  // (alpha, significant-at-alpha) outcomes, most lenient first.
  std::vector<std::pair<double, bool>> significant_at;
};

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
  double mean_x = 0.0;
  double mean_y = 0.0;
};

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta function
// (modified Lentz). Converges for x < (a+1)/(a+b+2); the caller flips
// arguments otherwise.
inline double incbeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw DomainError("[stats-report] incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw DomainError("[stats-report] incomplete beta requires a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError("[stats-report] incomplete beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::incbeta_cf(a, b, x) / a;
  return 1.0 - front * detail::incbeta_cf(b, a, 1.0 - x) / b;
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// CDF of Student's t with (possibly fractional) df degrees of freedom.
inline double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("[stats-report] student_t_cdf requires df > 0");
  if (std::isnan(t)) throw DomainError("[stats-report] student_t_cdf given NaN statistic");
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  // I_x(df/2, 1/2) is the two-sided tail mass P(|T| > |t|).
  const double tail2 = regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - 0.5 * tail2 : 0.5 * tail2;
}

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline bool is_constant(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

// Unbiased (n-1 denominator) sample variance about a precomputed mean.
inline double sample_variance(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace detail

// Product-moment correlation with a two-sided t-test p-value (df = n - 2).
// A series with zero variance makes r undefined; that case is reported as
// r = 0 with the degenerate flag set so aggregation over many cells can
// proceed while keeping degeneracy visible.
inline CorrelationResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw InputError("[stats-report] pearson requires equally sized series");
  if (xs.size() < 3)
    throw InputError("[stats-report] pearson requires at least 3 observations");
  for (double v : xs)
    if (!std::isfinite(v)) throw InputError("[stats-report] pearson given non-finite value");
  for (double v : ys)
    if (!std::isfinite(v)) throw InputError("[stats-report] pearson given non-finite value");

  CorrelationResult out;
  out.n = xs.size();
  if (detail::is_constant(xs) || detail::is_constant(ys)) {
    out.degenerate = true;
    out.r = 0.0;
    out.p_value_vs_zero = 1.0;
    return out;
  }
  const double mx = detail::mean_of(xs);
  const double my = detail::mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  out.r = r;
  const double df = static_cast<double>(out.n - 2);
  if (std::fabs(r) >= 1.0) {
    out.p_value_vs_zero = 0.0;
  } else {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    out.p_value_vs_zero = 2.0 * (1.0 - student_t_cdf(std::fabs(t), df));
  }
  return out;
}

// Two-sample comparison of independent correlations via the Fisher z
// transform: z = (atanh(r1) - atanh(r2)) / sqrt(1/(n1-3) + 1/(n2-3)).
inline RToZComparison fisher_compare(double r1, std::size_t n1, double r2, std::size_t n2) {
  if (!(std::fabs(r1) < 1.0) || !(std::fabs(r2) < 1.0))
    throw DomainError("[stats-report] fisher transform is singular at |r| = 1");
  if (n1 < 4 || n2 < 4)
    throw InputError("[stats-report] fisher_compare requires n >= 4 in both samples");
  RToZComparison out;
  out.r1 = r1;
  out.n1 = n1;
  out.r2 = r2;
  out.n2 = n2;
  const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) +
                              1.0 / static_cast<double>(n2 - 3));
  out.z = (std::atanh(r1) - std::atanh(r2)) / se;
  out.p = 2.0 * (1.0 - normal_cdf(std::fabs(out.z)));
  for (double alpha : {0.05, 0.01, 0.001}) out.significant_at.emplace_back(alpha, out.p < alpha);
  return out;
}

// Welch's unequal-variance t test with Satterthwaite degrees of freedom.
inline WelchResult welch_test(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2)
    throw InputError("[stats-report] welch_test requires at least 2 observations per sample");
  WelchResult out;
  out.mean_x = detail::mean_of(xs);
  out.mean_y = detail::mean_of(ys);
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  const double vx = detail::sample_variance(xs, out.mean_x);
  const double vy = detail::sample_variance(ys, out.mean_y);
  const double sx = vx / nx;
  const double sy = vy / ny;
  if (sx + sy == 0.0)
    throw DomainError("[stats-report] welch_test undefined: both samples have zero variance");
  out.t = (out.mean_x - out.mean_y) / std::sqrt(sx + sy);
  out.df = (sx + sy) * (sx + sy) /
           (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
  out.p = 2.0 * (1.0 - student_t_cdf(std::fabs(out.t), out.df));
  return out;
}

// Rank-based quartile assignment: element i gets bin 0..3 (Q1..Q4) by its
// position in the ordering by (value, tie_break key). The explicit key makes
// the split stable and fully documented when values tie (e.g. equal-length
// transcripts split by video id).
inline std::vector<int> quartile_assign(const std::vector<double>& values,
                                        const std::vector<std::string>& tie_break = {}) {
  if (values.empty()) throw InputError("[stats-report] quartile_assign given empty input");
  if (!tie_break.empty() && tie_break.size() != values.size())
    throw InputError("[stats-report] quartile tie-break keys must match value count");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    if (!tie_break.empty() && tie_break[a] != tie_break[b]) return tie_break[a] < tie_break[b];
    return a < b;
  });
  std::vector<int> bins(values.size(), 0);
  const std::size_t n = values.size();
  for (std::size_t rank = 0; rank < n; ++rank)
    bins[order[rank]] = static_cast<int>(rank * 4 / n);
  return bins;
}

}  // namespace vigil
