#ifndef CURVESCOPE_UTIL_HPP
#define CURVESCOPE_UTIL_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "curvescope/errors.hpp"

namespace curvescope {

// Pairwise (tree) summation with a split that depends only on the length,
// so a sum over the same values is bit-identical no matter who computes it.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw NumericError("mean of empty vector");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Sample variance, n-1 denominator.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw NumericError("sample variance needs at least 2 values");
  const double m = mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

inline double sample_stddev(std::span<const double> v) {
  return std::sqrt(sample_variance(v));
}

// Quantile with linear interpolation between closest ranks (the convention
// most stats packages default to). q in [0,1].
double quantile(std::vector<double> values, double q);

// Sample Pearson correlation; throws NumericError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace curvescope

#endif
