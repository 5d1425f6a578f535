#ifndef CURVESCOPE_METRICS_HPP
#define CURVESCOPE_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvescope/curves.hpp"
#include "curvescope/gamfit.hpp"

namespace curvescope::metrics {

using curves::CheckpointGrid;
using curves::SurprisalMatrix;
using gamfit::FittedCurve;

// The four within-run metrics for one example.
struct CurveMetrics {
  double final_surprisal = 0.0;  // bits
  double step_variability = 0.0; // bits
  double aoa = 0.0;              // log10 step
  double forgettability = 0.0;   // bits
  bool never_acquired = false;   // fitted minimum never improved on chance
};

struct AoaResult {
  double aoa = 0.0;
  bool never_acquired = false;
};

// Mean raw surprisal at checkpoints with step >= 0.75 * t1.
double final_surprisal(std::span<const double> curve, const CheckpointGrid& grid,
                       std::int64_t t1, double window_fraction = 0.25);

// Sample standard deviation over the same window (needs >= 2 checkpoints).
double step_variability(std::span<const double> curve, const CheckpointGrid& grid,
                        std::int64_t t1, double window_fraction = 0.25);

// log10 step where the fitted curve first crosses halfway between chance
// surprisal and its own grid minimum, interpolating linearly between grid
// evaluations. Curves that never improve on chance return the final grid
// point, flagged.
AoaResult aoa(const FittedCurve& fitted, std::span<const double> grid_log10,
              std::uint64_t vocab_size);

// Total surprisal increase along the fitted curve evaluated on the grid:
// sum of positive increments, equal to the sum over each relative maximum
// minus its preceding relative minimum.
double forgettability(const FittedCurve& fitted, std::span<const double> grid_log10);
double forgettability_of_values(std::span<const double> values);

// Mean pairwise squared Euclidean distance between per-run fitted curves
// evaluated on a shared grid (bits^2).
double run_variability(std::span<const std::vector<double>> evaluated_runs);

// All four within-run metrics for every row of a run.
std::vector<CurveMetrics> run_metrics(const SurprisalMatrix& run,
                                      const std::vector<FittedCurve>& fits,
                                      std::int64_t t1, std::uint64_t vocab_size,
                                      double window_fraction = 0.25);

// Per-example arithmetic mean across runs; every run must cover every
// example (rows aligned by index).
std::vector<double> aggregate_over_runs(
    std::span<const std::vector<double>> per_run_values);

// Metric correlation matrix in the fixed order: final surprisal,
// step variability, aoa, forgettability, run variability.
// Off-diagonals: Pearson r between per-example run-mean metrics.
// Diagonals: mean pairwise cross-run r of that metric; the run-variability
// diagonal correlates values from different three-run subsets.
constexpr int kNumMetrics = 5;
extern const char* const kMetricNames[kNumMetrics];

struct CorrelationInputs {
  // per_run_metric[m][r] = per-example vector of metric m in run r, for the
  // four within-run metrics (m = 0..3).
  std::vector<std::vector<std::vector<double>>> per_run_metric;
  // Per-example run variability over all runs.
  std::vector<double> run_variability_all;
  // Evaluated fitted curves per run, used to recompute run variability on
  // three-run subsets: evaluated[r][e] = grid values of example e in run r.
  std::vector<std::vector<std::vector<double>>> evaluated;
};

std::vector<std::vector<double>> metric_correlations(const CorrelationInputs& in);

// Per-checkpoint mean/std over run pairs of the Pearson correlation between
// model surprisals (population std across pairs).
struct SimilarityProfile {
  std::vector<double> mean_r;
  std::vector<double> std_r;
};
SimilarityProfile checkpoint_similarity_profile(
    std::span<const SurprisalMatrix* const> runs);

// Pearson r between each checkpoint column and each n-gram surprisal vector,
// plus the step of maximum correlation per order.
struct AlignmentProfile {
  std::vector<std::vector<double>> r;      // [order-1][checkpoint]
  std::vector<std::int64_t> argmax_step;   // [order-1]
};
AlignmentProfile ngram_alignment_profile(
    const SurprisalMatrix& run,
    std::span<const std::vector<double>> ngram_surprisals);

// Quantile-cohort query over a metrics table plus fitted-curve predicates.
struct QuantileFilter {
  int metric = 0;      // index into the five-metric order
  bool top = true;     // top fraction (>= upper quantile) vs bottom
  double fraction = 0.05;
};

struct CurvePredicates {
  std::optional<double> rise_threshold;        // has-GAM-rise(theta bits)
  bool require_recovered = false;              // rise later descends near pre-rise min
  std::optional<double> min_before_step;       // argmin step < s
  std::optional<double> never_improve_pct;     // min >= chance * (1 - p/100)
};

struct CohortResult {
  std::vector<std::size_t> selected;       // example indices passing filters
  std::size_t n_rise = 0;                  // selected with a rise > threshold
  std::size_t n_recovered = 0;             // ... whose rise is later recovered
  std::size_t n_min_before = 0;
  std::size_t n_never_improve = 0;
  std::vector<std::size_t> matched;        // selected passing all predicates
};

// metric_table[m][e]; curve predicates evaluate on evaluated_curves[e].
CohortResult cohort_query(std::span<const std::vector<double>> metric_table,
                          std::span<const QuantileFilter> filters,
                          const CurvePredicates& preds,
                          std::span<const std::vector<double>> evaluated_curves,
                          std::span<const double> grid_log10,
                          std::span<const std::int64_t> grid_steps,
                          double chance);

}  // namespace curvescope::metrics

#endif
