#include "curvescope/gamfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "curvescope/errors.hpp"
#include "curvescope/io.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::gamfit {

namespace {

constexpr double kRidge = 1e-8;  // fallback for near-singular normal systems

struct Basis {
  double x_min, x_max, h;
  int n;  // basis size

  // Hat i is centered at x_min + i*h and spans two segments.
  double center(int i) const { return x_min + h * static_cast<double>(i); }

  // Row of B at x: contributions (i0, w0) and (i0+1, w1); w1 is 0 at the
  // last center.
  void row(double x, int& i0, double& w0, double& w1) const {
    double u = (x - x_min) / h;
    if (u <= 0.0) {
      i0 = 0;
      w0 = 1.0;
      w1 = 0.0;
      return;
    }
    if (u >= static_cast<double>(n - 1)) {
      i0 = n - 2;
      w0 = 0.0;
      w1 = 1.0;
      return;
    }
    i0 = static_cast<int>(u);
    const double frac = u - static_cast<double>(i0);
    w0 = 1.0 - frac;
    w1 = frac;
  }
};

}  // namespace

double FittedCurve::evaluate(double x) const {
  const int n = static_cast<int>(coefficients.size());
  if (n == 1) return coefficients[0];
  const Basis basis{x_min, x_max, (x_max - x_min) / static_cast<double>(n - 1), n};
  int i0;
  double w0, w1;
  basis.row(std::clamp(x, x_min, x_max), i0, w0, w1);
  return coefficients[static_cast<std::size_t>(i0)] * w0 +
         coefficients[static_cast<std::size_t>(i0) + 1] * w1;
}

std::vector<double> FittedCurve::evaluate(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = evaluate(xs[i]);
  return out;
}

double FittedCurve::min_on(std::span<const double> xs) const {
  if (xs.empty()) throw ConfigError("min_on: empty grid");
  double m = evaluate(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) m = std::min(m, evaluate(xs[i]));
  return m;
}

struct BatchGamFitter::Impl {
  GamConfig config;
  Basis basis{};
  std::vector<double> xs;
  // Sparse basis rows.
  std::vector<int> row_i0;
  std::vector<double> row_w0, row_w1;
  // Per-lambda factorization of BtB + lambda * DtD, and tr(H_lambda).
  Eigen::MatrixXd BtB;
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> factors;
  std::vector<double> traces;
  std::vector<bool> ridged;  // whether the ridge fallback was applied

  Impl(std::span<const double> x, const GamConfig& cfg) : config(cfg) {
    const int K = config.n_splines;
    if (K < 3) throw ConfigError("fit_gam: n_splines must be >= 3");
    if (config.lambda_grid.empty())
      throw ConfigError("fit_gam: empty lambda grid");
    if (x.size() < static_cast<std::size_t>(K))
      throw ConfigError("fit_gam: fewer points than basis functions");
    std::set<double> distinct(x.begin(), x.end());
    if (static_cast<int>(distinct.size()) < K + 2)
      throw ConfigError("fit_gam: needs at least n_splines + 2 distinct x values");
    for (double v : x)
      if (!std::isfinite(v)) throw DataError("fit_gam: non-finite x value");

    const double x_min = *distinct.begin();
    const double x_max = *distinct.rbegin();
    basis = Basis{x_min, x_max, (x_max - x_min) / static_cast<double>(K - 1), K};
    xs.assign(x.begin(), x.end());

    const std::size_t n = x.size();
    row_i0.resize(n);
    row_w0.resize(n);
    row_w1.resize(n);
    BtB = Eigen::MatrixXd::Zero(K, K);
    for (std::size_t r = 0; r < n; ++r) {
      basis.row(x[r], row_i0[r], row_w0[r], row_w1[r]);
      const int i = row_i0[r];
      BtB(i, i) += row_w0[r] * row_w0[r];
      BtB(i, i + 1) += row_w0[r] * row_w1[r];
      BtB(i + 1, i) += row_w0[r] * row_w1[r];
      BtB(i + 1, i + 1) += row_w1[r] * row_w1[r];
    }

    // Second-difference penalty DtD; vanishes on linear coefficient
    // sequences, so linear trends are never penalized.
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
    for (int j = 0; j < K - 2; ++j) {
      D(j, j) = 1.0;
      D(j, j + 1) = -2.0;
      D(j, j + 2) = 1.0;
    }
    const Eigen::MatrixXd DtD = D.transpose() * D;

    factors.reserve(config.lambda_grid.size());
    traces.reserve(config.lambda_grid.size());
    ridged.reserve(config.lambda_grid.size());
    for (double lambda : config.lambda_grid) {
      if (!(lambda > 0.0)) throw ConfigError("fit_gam: lambda must be > 0");
      Eigen::MatrixXd A = BtB + lambda * DtD;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      bool used_ridge = false;
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        A += kRidge * Eigen::MatrixXd::Identity(K, K);
        ldlt.compute(A);
        used_ridge = true;
        if (ldlt.info() != Eigen::Success)
          throw NumericError("fit_gam: normal system is rank deficient");
      }
      const Eigen::MatrixXd AinvBtB = ldlt.solve(BtB);
      if (!AinvBtB.allFinite())
        throw NumericError("fit_gam: normal system is rank deficient");
      factors.push_back(std::move(ldlt));
      traces.push_back(AinvBtB.trace());
      ridged.push_back(used_ridge);
    }
  }

  FittedCurve fit(std::span<const double> y) const {
    const std::size_t n = xs.size();
    if (y.size() != n) throw ConfigError("fit_gam: |x| != |y|");
    for (double v : y)
      if (!std::isfinite(v)) throw DataError("fit_gam: non-finite y value");

    const int K = config.n_splines;
    Eigen::VectorXd Bty = Eigen::VectorXd::Zero(K);
    for (std::size_t r = 0; r < n; ++r) {
      Bty(row_i0[r]) += row_w0[r] * y[r];
      Bty(row_i0[r] + 1) += row_w1[r] * y[r];
    }

    FittedCurve best;
    double best_gcv = std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
      const Eigen::VectorXd beta = factors[li].solve(Bty);
      if (!beta.allFinite())
        throw NumericError("fit_gam: solve produced non-finite coefficients");
      double rss = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double fit_r = beta(row_i0[r]) * row_w0[r] +
                             beta(row_i0[r] + 1) * row_w1[r];
        const double d = y[r] - fit_r;
        rss += d * d;
      }
      const double denom = static_cast<double>(n) - traces[li];
      const double gcv = static_cast<double>(n) * rss / (denom * denom);
      if (gcv < best_gcv) {
        best_gcv = gcv;
        best.x_min = basis.x_min;
        best.x_max = basis.x_max;
        best.coefficients.assign(beta.data(), beta.data() + K);
        best.lambda = config.lambda_grid[li];
        best.gcv = gcv;
      }
    }
    return best;
  }
};

BatchGamFitter::BatchGamFitter(std::span<const double> x, const GamConfig& config)
    : impl_(std::make_unique<Impl>(x, config)) {}

BatchGamFitter::~BatchGamFitter() = default;
BatchGamFitter::BatchGamFitter(BatchGamFitter&&) noexcept = default;

FittedCurve BatchGamFitter::fit(std::span<const double> y) const {
  return impl_->fit(y);
}

std::size_t BatchGamFitter::n_points() const { return impl_->xs.size(); }

std::vector<FittedCurve> BatchGamFitter::fit_all_serial(
    std::span<const double> Y, std::size_t n_curves) const {
  const std::size_t n = impl_->xs.size();
  if (Y.size() != n_curves * n)
    throw ConfigError("fit_all: payload does not match n_curves x |x|");
  std::vector<FittedCurve> out(n_curves);
  for (std::size_t i = 0; i < n_curves; ++i)
    out[i] = impl_->fit(Y.subspan(i * n, n));
  return out;
}

std::vector<FittedCurve> BatchGamFitter::fit_all(std::span<const double> Y,
                                                 std::size_t n_curves) const {
  const std::size_t n = impl_->xs.size();
  if (Y.size() != n_curves * n)
    throw ConfigError("fit_all: payload does not match n_curves x |x|");
  std::vector<FittedCurve> out(n_curves);
  parallel_for(static_cast<std::int64_t>(n_curves), [&](std::int64_t i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = impl_->fit(Y.subspan(u * n, n));
  });
  return out;
}

FittedCurve fit_gam(std::span<const double> x, std::span<const double> y,
                    const GamConfig& config) {
  return BatchGamFitter(x, config).fit(y);
}

std::vector<Extremum> extrema_of_values(std::span<const double> values,
                                        std::span<const double> positions) {
  if (values.size() != positions.size())
    throw ConfigError("extrema: values/positions length mismatch");
  if (values.size() < 2)
    throw ConfigError("extrema: grid must have at least 2 points");

  // Collapse plateaus to their first index.
  std::vector<std::size_t> idx;
  idx.push_back(0);
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] != values[idx.back()]) idx.push_back(i);

  std::vector<Extremum> out;
  auto emit = [&](std::size_t i, bool is_max) {
    out.push_back({i, positions[i], values[i], is_max});
  };
  if (idx.size() == 1) {
    // Entirely flat: treat as a degenerate non-increasing curve.
    emit(0, true);
    emit(values.size() - 1, false);
    return out;
  }
  emit(idx[0], values[idx[0]] > values[idx[1]]);
  for (std::size_t j = 1; j + 1 < idx.size(); ++j) {
    const double prev = values[idx[j - 1]];
    const double cur = values[idx[j]];
    const double next = values[idx[j + 1]];
    if (cur > prev && cur > next) emit(idx[j], true);
    if (cur < prev && cur < next) emit(idx[j], false);
  }
  emit(idx.back(), values[idx.back()] > values[idx[idx.size() - 2]]);
  return out;
}

std::vector<Extremum> extrema_on_grid(const FittedCurve& curve,
                                      std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw ConfigError("extrema: grid not sorted");
  const std::vector<double> values = curve.evaluate(grid);
  return extrema_of_values(values, grid);
}

void write_gams(const std::string& path, const FittedCurveSet& set) {
  if (set.example_ids.size() != set.curves.size())
    throw ConfigError("write_gams: ids/curves size mismatch");
  io::BinaryWriter w(path);
  w.magic(kGamMagic);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(set.n_splines));
  w.u64(set.curves.size());
  for (const auto& [seq, pos] : set.example_ids) {
    w.u32(seq);
    w.u32(pos);
  }
  for (const auto& c : set.curves) {
    if (static_cast<int>(c.coefficients.size()) != set.n_splines)
      throw ConfigError("write_gams: coefficient count mismatch");
    w.f64(c.x_min);
    w.f64(c.x_max);
    w.f64(c.lambda);
    for (double v : c.coefficients) w.f64(v);
  }
  w.close();
}

FittedCurveSet read_gams(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kGamMagic);
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw DataError(path + ": unsupported GAM file version " +
                    std::to_string(version));
  FittedCurveSet set;
  set.n_splines = static_cast<int>(r.u32());
  const std::uint64_t n = r.u64();
  set.example_ids.resize(n);
  for (auto& [seq, pos] : set.example_ids) {
    seq = r.u32();
    pos = r.u32();
  }
  set.curves.resize(n);
  for (auto& c : set.curves) {
    c.x_min = r.f64();
    c.x_max = r.f64();
    c.lambda = r.f64();
    c.coefficients.resize(static_cast<std::size_t>(set.n_splines));
    for (double& v : c.coefficients) v = r.f64();
  }
  return set;
}

}  // namespace curvescope::gamfit
