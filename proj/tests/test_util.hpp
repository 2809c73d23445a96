#pragma once

// Small statistics helpers shared by the distribution-sensitive tests.

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil {

// Regularized upper incomplete gamma Q(s, x) via series / continued
// fraction; enough accuracy for chi-square p-values.
inline double gamma_q(double s, double x) {
  if (x < 0 || s <= 0) return 1.0;
  if (x == 0) return 1.0;
  auto gln = std::lgamma(s);
  if (x < s + 1.0) {
    // P(s,x) by series, return 1 - P
    double sum = 1.0 / s, term = sum, a = s;
    for (int i = 0; i < 500; ++i) {
      a += 1.0;
      term *= x / a;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    double p = sum * std::exp(-x + s * std::log(x) - gln);
    return 1.0 - p;
  }
  // continued fraction for Q
  double b = x + 1.0 - s, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + s * std::log(x) - gln) * h;
}

// Chi-square p-value for observed counts against expected probabilities.
inline double chi_square_pvalue(const std::vector<long long>& observed,
                                const std::vector<double>& expected_probs) {
  long long total = 0;
  for (auto o : observed) total += o;
  double stat = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    double e = expected_probs[i] * static_cast<double>(total);
    if (e <= 0) continue;
    double diff = static_cast<double>(observed[i]) - e;
    stat += diff * diff / e;
  }
  double dof = static_cast<double>(observed.size()) - 1.0;
  return gamma_q(dof / 2.0, stat / 2.0);
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    double fa = static_cast<double>(i) / a.size();
    double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

// KS acceptance threshold at significance ~1e-3.
inline double ks_threshold(size_t n, size_t m) {
  return 1.95 * std::sqrt((static_cast<double>(n) + m) / (static_cast<double>(n) * m));
}

// Three-sigma band for a binomial frequency.
inline bool within_3sigma(double observed_freq, double p, long long trials) {
  double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
  return std::fabs(observed_freq - p) <= 3.0 * sigma + 1e-12;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0;
  for (size_t i = 0; i < p.size(); ++i) tv += std::fabs(p[i] - q[i]);
  return tv / 2.0;
}

}  // namespace testutil
