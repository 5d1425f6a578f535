#ifndef CURVESCOPE_REGRESS_HPP
#define CURVESCOPE_REGRESS_HPP

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "curvescope/util.hpp"

namespace curvescope::regress {

using curvescope::pearson;

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  int n = 0;
  int n_predictors = 0;  // columns excluding the intercept
};

// Least squares via column-pivoted QR. X must include the intercept column
// unless intercept_included is false (then R2 is computed about zero).
// Rank deficiency raises NumericError naming the dependent column.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               bool intercept_included = true);

// Stacks columns into a design matrix with a leading intercept column.
Eigen::MatrixXd design_with_intercept(
    std::span<const std::vector<double>> columns);

struct PredictorGroup {
  std::string name;
  std::vector<std::vector<double>> columns;
};

struct LedgerEntry {
  std::string name;
  double r2 = 0.0;            // cumulative, unadjusted
  double adjusted_r2 = 0.0;   // cumulative
  double delta_adjusted_r2 = 0.0;  // increase over the previous model
};

// Nested fits adding one predictor group at a time, in the given order.
// The first entry's delta equals its adjusted R2.
std::vector<LedgerEntry> incremental_r2(std::span<const PredictorGroup> groups,
                                        std::span<const double> y);

// Coefficient sign of one predictor in (1) the full model, (2) a simple
// regression, (3) a simple regression on the residuals of y ~ log-frequency.
// Near-zero standardized coefficients report '0'.
struct SignTriple {
  char full = '0';
  char alone = '0';
  char alone_freq_resid = '0';
};
SignTriple sign_triple(std::span<const double> predictor,
                       std::span<const std::vector<double>> other_predictors,
                       std::span<const double> y,
                       std::span<const double> log_freq);

// VIF per column of X (no intercept among the targets). Perfect collinearity
// reports +infinity.
std::vector<double> vif(std::span<const std::vector<double>> columns);

struct NestedTest {
  double f_statistic = 0.0;
  double p_value = 1.0;
  int df_num = 0;
  int df_den = 0;
};

// Exact-Gaussian likelihood-ratio equivalent: the F test for nested linear
// models. The small design's columns must all appear in the large design.
NestedTest nested_test(const Eigen::MatrixXd& X_small,
                       const Eigen::MatrixXd& X_large,
                       const Eigen::VectorXd& y);

// Residualizes y on the continuous predictors, then regresses the residuals
// on POS and word-position one-hots. Word position uses reference level U
// (coefficient pinned to 0); POS tags are all reported. Empty categories are
// dropped and listed.
struct PosCoefficients {
  std::vector<std::pair<std::string, double>> pos;        // tag -> coefficient
  std::vector<std::pair<std::string, double>> word_pos;   // B/I/L/U
  std::vector<std::string> dropped;
};
PosCoefficients pos_coefficients(std::span<const double> y,
                                 std::span<const std::vector<double>> continuous,
                                 std::span<const std::string> pos_tags,
                                 std::span<const std::string> word_pos);

}  // namespace curvescope::regress

#endif
