#include "curvescope/util.hpp"

#include <algorithm>
#include <numeric>

namespace curvescope {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw NumericError("quantile of empty vector");
  if (q < 0.0 || q > 1.0) throw ConfigError("quantile level must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw NumericError("pearson needs at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> xy(n), xx(n), yy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    xy[i] = dx * dy;
    xx[i] = dx * dx;
    yy[i] = dy * dy;
  }
  const double sxx = pairwise_sum(xx);
  const double syy = pairwise_sum(yy);
  if (sxx <= 0.0 || syy <= 0.0)
    throw NumericError("pearson undefined: zero variance");
  return pairwise_sum(xy) / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> ranks_with_ties(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = ranks_with_ties(x);
  const std::vector<double> ry = ranks_with_ties(y);
  return pearson(rx, ry);
}

}  // namespace curvescope
