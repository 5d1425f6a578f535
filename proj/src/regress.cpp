#include "curvescope/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>

#include "curvescope/errors.hpp"
#include "curvescope/features.hpp"

namespace curvescope::regress {

namespace {

constexpr double kSignTolerance = 1e-10;  // on standardized coefficients

double stddev_of(std::span<const double> v) {
  return v.size() >= 2 ? sample_stddev(v) : 0.0;
}

char sign_of_coefficient(double beta, double sd_x, double sd_y) {
  if (sd_y <= 0.0) return '0';
  const double standardized = beta * sd_x / sd_y;
  if (std::abs(standardized) < kSignTolerance) return '0';
  return standardized > 0.0 ? '+' : '-';
}

Eigen::VectorXd to_vec(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::MatrixXd design_with_intercept(
    std::span<const std::vector<double>> columns) {
  if (columns.empty()) throw ConfigError("design matrix needs >= 1 column");
  const Eigen::Index n = static_cast<Eigen::Index>(columns[0].size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(columns.size() + 1));
  X.col(0).setOnes();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (static_cast<Eigen::Index>(columns[c].size()) != n)
      throw ConfigError("design matrix: ragged columns");
    X.col(static_cast<Eigen::Index>(c + 1)) = to_vec(columns[c]);
  }
  return X;
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               bool intercept_included) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p_total = X.cols();
  if (y.size() != n) throw ConfigError("ols_fit: X/y row mismatch");
  if (n <= p_total)
    throw ConfigError("ols_fit: needs more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p_total) {
    const auto perm = qr.colsPermutation().indices();
    throw NumericError("ols_fit: rank deficient design; column " +
                       std::to_string(perm[qr.rank()]) +
                       " is linearly dependent");
  }

  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  fit.rss = fit.residuals.squaredNorm();
  fit.n = static_cast<int>(n);
  fit.n_predictors = static_cast<int>(p_total) - (intercept_included ? 1 : 0);

  double tss;
  if (intercept_included) {
    const double ybar = y.mean();
    tss = (y.array() - ybar).matrix().squaredNorm();
  } else {
    tss = y.squaredNorm();
  }
  fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;
  const double n_d = static_cast<double>(n);
  const double p_d = static_cast<double>(fit.n_predictors);
  fit.adjusted_r2 = 1.0 - (1.0 - fit.r2) * (n_d - 1.0) / (n_d - p_d - 1.0);
  return fit;
}

namespace {

// Projection-based R2 that tolerates redundant columns: a duplicated
// predictor adds no column space, so both R2 and the rank-based adjusted R2
// are unchanged.
void projection_r2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double* r2, double* adjusted_r2) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - X * beta).squaredNorm();
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).matrix().squaredNorm();
  *r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  const double n = static_cast<double>(X.rows());
  const double p = static_cast<double>(qr.rank()) - 1.0;  // minus intercept
  *adjusted_r2 = 1.0 - (1.0 - *r2) * (n - 1.0) / (n - p - 1.0);
}

}  // namespace

std::vector<LedgerEntry> incremental_r2(std::span<const PredictorGroup> groups,
                                        std::span<const double> y) {
  if (groups.empty()) throw ConfigError("incremental_r2: no predictor groups");
  const Eigen::VectorXd yv = to_vec(y);

  std::vector<std::vector<double>> columns;
  std::vector<LedgerEntry> ledger;
  double prev_adjusted = 0.0;
  for (const auto& g : groups) {
    for (const auto& c : g.columns) columns.push_back(c);
    LedgerEntry e;
    e.name = g.name;
    projection_r2(design_with_intercept(columns), yv, &e.r2, &e.adjusted_r2);
    e.delta_adjusted_r2 =
        ledger.empty() ? e.adjusted_r2 : e.adjusted_r2 - prev_adjusted;
    prev_adjusted = e.adjusted_r2;
    ledger.push_back(std::move(e));
  }
  return ledger;
}

SignTriple sign_triple(std::span<const double> predictor,
                       std::span<const std::vector<double>> other_predictors,
                       std::span<const double> y,
                       std::span<const double> log_freq) {
  const double sd_x = stddev_of(predictor);
  const double sd_y = stddev_of(y);
  SignTriple t;

  // (1) all predictors together; the predictor of interest sits in column 1.
  {
    std::vector<std::vector<double>> cols;
    cols.emplace_back(predictor.begin(), predictor.end());
    for (const auto& c : other_predictors) cols.push_back(c);
    const OlsFit fit = ols_fit(design_with_intercept(cols), to_vec(y));
    t.full = sign_of_coefficient(fit.coefficients(1), sd_x, sd_y);
  }
  // (2) the predictor alone.
  {
    std::vector<std::vector<double>> cols;
    cols.emplace_back(predictor.begin(), predictor.end());
    const OlsFit fit = ols_fit(design_with_intercept(cols), to_vec(y));
    t.alone = sign_of_coefficient(fit.coefficients(1), sd_x, sd_y);
  }
  // (3) alone, on the residuals of y ~ log-frequency.
  {
    std::vector<std::vector<double>> freq_col;
    freq_col.emplace_back(log_freq.begin(), log_freq.end());
    const OlsFit freq_fit =
        ols_fit(design_with_intercept(freq_col), to_vec(y));
    std::vector<std::vector<double>> cols;
    cols.emplace_back(predictor.begin(), predictor.end());
    const OlsFit fit =
        ols_fit(design_with_intercept(cols), freq_fit.residuals);
    std::vector<double> resid(freq_fit.residuals.data(),
                              freq_fit.residuals.data() + freq_fit.residuals.size());
    t.alone_freq_resid =
        sign_of_coefficient(fit.coefficients(1), sd_x, stddev_of(resid));
  }
  return t;
}

std::vector<double> vif(std::span<const std::vector<double>> columns) {
  if (columns.size() < 2) throw ConfigError("vif: needs >= 2 columns");
  std::vector<double> out(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    std::vector<std::vector<double>> others;
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (k != j) others.push_back(columns[k]);
    double r2_j;
    try {
      const OlsFit fit =
          ols_fit(design_with_intercept(others), to_vec(columns[j]));
      r2_j = fit.r2;
    } catch (const NumericError&) {
      // Dependent columns among the regressors already imply collinearity.
      out[j] = std::numeric_limits<double>::infinity();
      continue;
    }
    out[j] = r2_j >= 1.0 - 1e-12
                 ? std::numeric_limits<double>::infinity()
                 : 1.0 / (1.0 - r2_j);
  }
  return out;
}

namespace {

bool column_present(const Eigen::MatrixXd& X, const Eigen::VectorXd& col) {
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    if ((X.col(c).array() == col.array()).all()) return true;
  return false;
}

}  // namespace

NestedTest nested_test(const Eigen::MatrixXd& X_small,
                       const Eigen::MatrixXd& X_large,
                       const Eigen::VectorXd& y) {
  if (X_small.rows() != X_large.rows())
    throw ConfigError("nested_test: row mismatch");
  for (Eigen::Index c = 0; c < X_small.cols(); ++c)
    if (!column_present(X_large, X_small.col(c)))
      throw ConfigError("nested_test: models are not nested");

  const OlsFit small = ols_fit(X_small, y);
  const OlsFit large = ols_fit(X_large, y);
  NestedTest t;
  t.df_num = large.n_predictors - small.n_predictors;
  t.df_den = large.n - large.n_predictors - 1;
  if (t.df_num == 0) {
    t.f_statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  if (large.rss <= 0.0) {
    t.f_statistic = std::numeric_limits<double>::infinity();
    t.p_value = 0.0;
    return t;
  }
  t.f_statistic = ((small.rss - large.rss) / static_cast<double>(t.df_num)) /
                  (large.rss / static_cast<double>(t.df_den));
  if (t.f_statistic <= 0.0) {
    t.f_statistic = std::max(t.f_statistic, 0.0);
    t.p_value = 1.0;
    return t;
  }
  const boost::math::fisher_f dist(t.df_num, t.df_den);
  t.p_value = boost::math::cdf(boost::math::complement(dist, t.f_statistic));
  return t;
}

PosCoefficients pos_coefficients(std::span<const double> y,
                                 std::span<const std::vector<double>> continuous,
                                 std::span<const std::string> pos_tags,
                                 std::span<const std::string> word_pos) {
  const std::size_t n = y.size();
  if (pos_tags.size() != n || word_pos.size() != n)
    throw ConfigError("pos_coefficients: annotation length mismatch");

  Eigen::VectorXd resid;
  if (continuous.empty()) {
    resid = to_vec(y);
    resid.array() -= resid.mean();
  } else {
    const OlsFit fit = ols_fit(design_with_intercept(continuous), to_vec(y));
    resid = fit.residuals;
  }

  PosCoefficients out;
  const auto& inventory = features::upos_inventory();
  std::vector<std::string> present_tags;
  for (const auto& tag : inventory) {
    if (std::find(pos_tags.begin(), pos_tags.end(), tag) != pos_tags.end())
      present_tags.push_back(tag);
    else
      out.dropped.push_back(tag);
  }
  // Word position: U is the reference level and stays out of the design.
  std::vector<std::string> present_wp;
  for (const std::string& wp : {"B", "I", "L"}) {
    if (std::find(word_pos.begin(), word_pos.end(), wp) != word_pos.end())
      present_wp.push_back(wp);
    else
      out.dropped.push_back("word_pos:" + wp);
  }

  // POS one-hots sum to one, so they absorb the intercept; no intercept
  // column here.
  const std::size_t p = present_tags.size() + present_wp.size();
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    const auto tag_it =
        std::find(present_tags.begin(), present_tags.end(), pos_tags[i]);
    if (tag_it == present_tags.end())
      throw DataError("pos_coefficients: unknown tag '" + pos_tags[i] + "'");
    X(static_cast<Eigen::Index>(i),
      static_cast<Eigen::Index>(tag_it - present_tags.begin())) = 1.0;
    const auto wp_it =
        std::find(present_wp.begin(), present_wp.end(), word_pos[i]);
    if (wp_it != present_wp.end())
      X(static_cast<Eigen::Index>(i),
        static_cast<Eigen::Index>(present_tags.size() +
                                  static_cast<std::size_t>(
                                      wp_it - present_wp.begin()))) = 1.0;
  }

  const OlsFit fit = ols_fit(X, resid, /*intercept_included=*/false);
  for (std::size_t j = 0; j < present_tags.size(); ++j)
    out.pos.emplace_back(present_tags[j],
                         fit.coefficients(static_cast<Eigen::Index>(j)));
  for (std::size_t j = 0; j < present_wp.size(); ++j)
    out.word_pos.emplace_back(
        present_wp[j],
        fit.coefficients(static_cast<Eigen::Index>(present_tags.size() + j)));
  out.word_pos.emplace_back("U", 0.0);  // reference level by construction
  return out;
}

}  // namespace curvescope::regress
