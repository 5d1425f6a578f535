#include "curvescope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curvescope/errors.hpp"
#include "curvescope/threads.hpp"
#include "curvescope/util.hpp"

namespace curvescope::metrics {

const char* const kMetricNames[kNumMetrics] = {
    "final_surprisal", "var_steps", "aoa", "forgettability", "var_runs"};

namespace {

// Window = checkpoints in the last `fraction` of pre-training, step units.
std::vector<double> window_values(std::span<const double> curve,
                                  const CheckpointGrid& grid, std::int64_t t1,
                                  double fraction) {
  if (curve.size() != grid.size())
    throw DataError("metrics: curve/grid length mismatch");
  const double cutoff = (1.0 - fraction) * static_cast<double>(t1);
  std::vector<double> w;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (static_cast<double>(grid.steps[i]) >= cutoff) w.push_back(curve[i]);
  return w;
}

}  // namespace

double final_surprisal(std::span<const double> curve, const CheckpointGrid& grid,
                       std::int64_t t1, double window_fraction) {
  const auto w = window_values(curve, grid, t1, window_fraction);
  if (w.empty())
    throw DataError("final_surprisal: no checkpoints in the final window");
  return mean(w);
}

double step_variability(std::span<const double> curve, const CheckpointGrid& grid,
                        std::int64_t t1, double window_fraction) {
  const auto w = window_values(curve, grid, t1, window_fraction);
  if (w.size() < 2)
    throw DataError("step_variability: final window has fewer than 2 checkpoints");
  return sample_stddev(w);
}

AoaResult aoa(const FittedCurve& fitted, std::span<const double> grid_log10,
              std::uint64_t vocab_size) {
  if (grid_log10.empty()) throw ConfigError("aoa: empty grid");
  const double chance = curves::chance_surprisal(vocab_size);
  const std::vector<double> f = fitted.evaluate(grid_log10);
  const double fmin = *std::min_element(f.begin(), f.end());
  if (fmin >= chance) return {grid_log10.back(), true};

  const double tau = chance - 0.5 * (chance - fmin);
  if (f[0] <= tau) return {grid_log10[0], false};
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (f[i] <= tau) {
      // Linear interpolation of the crossing between adjacent grid points.
      const double x0 = grid_log10[i - 1], x1 = grid_log10[i];
      const double y0 = f[i - 1], y1 = f[i];
      return {x0 + (y0 - tau) * (x1 - x0) / (y0 - y1), false};
    }
  }
  // Unreachable: fmin <= tau guarantees a crossing.
  return {grid_log10.back(), false};
}

double forgettability_of_values(std::span<const double> values) {
  if (values.size() < 2)
    throw ConfigError("forgettability: grid must have at least 2 points");
  double total = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i)
    total += std::max(values[i] - values[i - 1], 0.0);
  return total;
}

double forgettability(const FittedCurve& fitted,
                      std::span<const double> grid_log10) {
  return forgettability_of_values(fitted.evaluate(grid_log10));
}

double run_variability(std::span<const std::vector<double>> evaluated_runs) {
  const std::size_t R = evaluated_runs.size();
  if (R < 2) throw ConfigError("run_variability needs at least 2 runs");
  const std::size_t n = evaluated_runs[0].size();
  for (const auto& r : evaluated_runs)
    if (r.size() != n) throw DataError("run_variability: grid mismatch");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < R; ++a) {
    for (std::size_t b = a + 1; b < R; ++b) {
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = evaluated_runs[a][i] - evaluated_runs[b][i];
        sq += d * d;
      }
      total += sq;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::vector<CurveMetrics> run_metrics(const SurprisalMatrix& run,
                                      const std::vector<FittedCurve>& fits,
                                      std::int64_t t1, std::uint64_t vocab_size,
                                      double window_fraction) {
  if (fits.size() != run.n_examples())
    throw DataError("run_metrics: fits do not cover every example");
  std::size_t skip = 0;
  const std::vector<double> xs = run.grid().log10_nonzero_steps(&skip);
  std::vector<CurveMetrics> out(run.n_examples());
  parallel_for(static_cast<std::int64_t>(run.n_examples()), [&](std::int64_t i) {
    const auto u = static_cast<std::uint64_t>(i);
    const std::vector<double> raw = run.row_as_double(u);
    CurveMetrics m;
    m.final_surprisal =
        final_surprisal(raw, run.grid(), t1, window_fraction);
    m.step_variability =
        step_variability(raw, run.grid(), t1, window_fraction);
    const AoaResult a = aoa(fits[u], xs, vocab_size);
    m.aoa = a.aoa;
    m.never_acquired = a.never_acquired;
    m.forgettability = forgettability(fits[u], xs);
    out[u] = m;
  });
  return out;
}

std::vector<double> aggregate_over_runs(
    std::span<const std::vector<double>> per_run_values) {
  if (per_run_values.empty())
    throw ConfigError("aggregate_over_runs: no runs");
  const std::size_t n = per_run_values[0].size();
  for (std::size_t r = 1; r < per_run_values.size(); ++r)
    if (per_run_values[r].size() != n)
      throw DataError("aggregate_over_runs: run " + std::to_string(r) +
                      " misses values for some examples");
  std::vector<double> out(n);
  std::vector<double> buf(per_run_values.size());
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t r = 0; r < per_run_values.size(); ++r)
      buf[r] = per_run_values[r][e];
    out[e] = mean(buf);
  }
  return out;
}

namespace {

double mean_pairwise_pearson(std::span<const std::vector<double>> vectors) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < vectors.size(); ++a)
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      total += pearson(vectors[a], vectors[b]);
      ++pairs;
    }
  if (pairs == 0) return std::numeric_limits<double>::quiet_NaN();
  return total / static_cast<double>(pairs);
}

std::vector<double> subset_run_variability(
    const std::vector<std::vector<std::vector<double>>>& evaluated,
    std::span<const std::size_t> subset) {
  const std::size_t n = evaluated[0].size();
  std::vector<double> out(n);
  std::vector<std::vector<double>> views(subset.size());
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t s = 0; s < subset.size(); ++s)
      views[s] = evaluated[subset[s]][e];
    out[e] = run_variability(views);
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> metric_correlations(const CorrelationInputs& in) {
  if (in.per_run_metric.size() != 4)
    throw ConfigError("metric_correlations: expected the 4 within-run metrics");
  const std::size_t R = in.per_run_metric[0].size();
  if (R < 2) throw ConfigError("metric_correlations: needs >= 2 runs");

  // Run-mean vectors for the four within-run metrics.
  std::vector<std::vector<double>> run_mean(4);
  for (int m = 0; m < 4; ++m)
    run_mean[m] = aggregate_over_runs(in.per_run_metric[m]);

  std::vector<std::vector<double>> table(
      kNumMetrics, std::vector<double>(kNumMetrics, 0.0));

  // The var-runs row is left undefined (NaN) when no cross-run variability
  // vector was supplied (fewer than 2 runs).
  const bool with_var_runs = !in.run_variability_all.empty();
  auto metric_vector = [&](int m) -> const std::vector<double>& {
    return m < 4 ? run_mean[m] : in.run_variability_all;
  };
  for (int a = 0; a < kNumMetrics; ++a)
    for (int b = a + 1; b < kNumMetrics; ++b) {
      double r = std::numeric_limits<double>::quiet_NaN();
      if (b < 4 || with_var_runs) r = pearson(metric_vector(a), metric_vector(b));
      table[a][b] = r;
      table[b][a] = r;
    }

  // Diagonals: cross-run reliability of each metric.
  for (int m = 0; m < 4; ++m)
    table[m][m] = mean_pairwise_pearson(in.per_run_metric[m]);

  // Run-variability reliability from three-run subsets.
  if (with_var_runs && R >= 4 && !in.evaluated.empty()) {
    std::vector<std::vector<double>> subset_values;
    std::vector<std::size_t> subset(3);
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = i + 1; j < R; ++j)
        for (std::size_t k = j + 1; k < R; ++k) {
          subset = {i, j, k};
          subset_values.push_back(subset_run_variability(in.evaluated, subset));
        }
    table[4][4] = mean_pairwise_pearson(subset_values);
  } else {
    table[4][4] = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

SimilarityProfile checkpoint_similarity_profile(
    std::span<const SurprisalMatrix* const> runs) {
  if (runs.size() < 2)
    throw ConfigError("similarity profile needs >= 2 runs");
  const auto& grid = runs[0]->grid();
  const std::uint64_t n = runs[0]->n_examples();
  for (const auto* r : runs) {
    if (!(r->grid() == grid))
      throw DataError("similarity profile: grid mismatch across runs");
    if (r->n_examples() != n)
      throw DataError("similarity profile: example count mismatch");
  }

  const std::size_t C = grid.size();
  SimilarityProfile prof;
  prof.mean_r.resize(C);
  prof.std_r.resize(C);
  parallel_for(static_cast<std::int64_t>(C), [&](std::int64_t c) {
    std::vector<std::vector<double>> cols(runs.size(), std::vector<double>(n));
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (std::uint64_t e = 0; e < n; ++e)
        cols[r][e] = static_cast<double>(
            runs[r]->row(e)[static_cast<std::size_t>(c)]);
    std::vector<double> rs;
    for (std::size_t a = 0; a < runs.size(); ++a)
      for (std::size_t b = a + 1; b < runs.size(); ++b)
        rs.push_back(pearson(cols[a], cols[b]));
    const double m = mean(rs);
    double var = 0.0;
    for (double r : rs) var += (r - m) * (r - m);
    // Population std: a single pair reports zero spread.
    prof.mean_r[static_cast<std::size_t>(c)] = m;
    prof.std_r[static_cast<std::size_t>(c)] =
        std::sqrt(var / static_cast<double>(rs.size()));
  });
  return prof;
}

AlignmentProfile ngram_alignment_profile(
    const SurprisalMatrix& run,
    std::span<const std::vector<double>> ngram_surprisals) {
  if (ngram_surprisals.empty())
    throw ConfigError("alignment profile: no n-gram surprisal vectors");
  const std::uint64_t n = run.n_examples();
  for (const auto& v : ngram_surprisals)
    if (v.size() != n)
      throw DataError("alignment profile: n-gram surprisals missing examples");

  const std::size_t C = run.n_checkpoints();
  AlignmentProfile prof;
  prof.r.assign(ngram_surprisals.size(), std::vector<double>(C, 0.0));
  prof.argmax_step.assign(ngram_surprisals.size(), 0);

  std::vector<std::vector<double>> cols(C, std::vector<double>(n));
  for (std::uint64_t e = 0; e < n; ++e) {
    const auto row = run.row(e);
    for (std::size_t c = 0; c < C; ++c)
      cols[c][e] = static_cast<double>(row[c]);
  }
  parallel_for(static_cast<std::int64_t>(C), [&](std::int64_t c) {
    for (std::size_t k = 0; k < ngram_surprisals.size(); ++k)
      prof.r[k][static_cast<std::size_t>(c)] =
          pearson(cols[static_cast<std::size_t>(c)], ngram_surprisals[k]);
  });
  for (std::size_t k = 0; k < ngram_surprisals.size(); ++k) {
    const auto& rk = prof.r[k];
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(rk.begin(), rk.end()) -
                                 rk.begin());
    prof.argmax_step[k] = run.grid().steps[best];
  }
  return prof;
}

namespace {

struct RiseScan {
  bool has_rise = false;       // some rise exceeds the threshold
  bool recovered = false;      // such a rise later returns near the pre-rise min
};

// Rises are relative-maximum minus preceding relative-minimum pairs.
// "Recovered" means the curve later drops below pre-rise min + 10% of the
// rise.
RiseScan scan_rises(std::span<const double> values,
                    std::span<const double> positions, double threshold) {
  RiseScan out;
  const auto ext = gamfit::extrema_of_values(values, positions);
  for (std::size_t i = 1; i < ext.size(); ++i) {
    if (!ext[i].is_max || ext[i - 1].is_max) continue;
    const double rise = ext[i].value - ext[i - 1].value;
    if (rise <= threshold) continue;
    out.has_rise = true;
    const double recover_level = ext[i - 1].value + 0.1 * rise;
    for (std::size_t k = ext[i].index + 1; k < values.size(); ++k) {
      if (values[k] < recover_level) {
        out.recovered = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace

CohortResult cohort_query(std::span<const std::vector<double>> metric_table,
                          std::span<const QuantileFilter> filters,
                          const CurvePredicates& preds,
                          std::span<const std::vector<double>> evaluated_curves,
                          std::span<const double> grid_log10,
                          std::span<const std::int64_t> grid_steps,
                          double chance) {
  if (metric_table.empty()) throw ConfigError("cohort_query: empty table");
  const std::size_t n = metric_table[0].size();

  // Quantile thresholds from the full population.
  std::vector<std::pair<const QuantileFilter*, double>> cuts;
  for (const auto& f : filters) {
    if (f.metric < 0 || f.metric >= static_cast<int>(metric_table.size()))
      throw ConfigError("cohort_query: bad metric index");
    const double q = f.top ? 1.0 - f.fraction : f.fraction;
    cuts.emplace_back(&f, quantile(metric_table[f.metric], q));
  }

  CohortResult res;
  for (std::size_t e = 0; e < n; ++e) {
    bool keep = true;
    for (const auto& [f, cut] : cuts) {
      const double v = metric_table[f->metric][e];
      if (f->top ? v < cut : v > cut) {
        keep = false;
        break;
      }
    }
    if (keep) res.selected.push_back(e);
  }

  const bool any_pred = preds.rise_threshold || preds.min_before_step ||
                        preds.never_improve_pct || preds.require_recovered;
  for (std::size_t e : res.selected) {
    if (!any_pred) {
      res.matched.push_back(e);
      continue;
    }
    const auto& vals = evaluated_curves[e];
    bool ok = true;
    if (preds.rise_threshold || preds.require_recovered) {
      const double theta = preds.rise_threshold.value_or(0.0);
      const RiseScan scan = scan_rises(vals, grid_log10, theta);
      if (scan.has_rise) ++res.n_rise;
      if (scan.recovered) ++res.n_recovered;
      if (preds.rise_threshold && !scan.has_rise) ok = false;
      if (preds.require_recovered && !scan.recovered) ok = false;
    }
    if (preds.min_before_step) {
      const std::size_t arg = static_cast<std::size_t>(
          std::min_element(vals.begin(), vals.end()) - vals.begin());
      const bool before =
          static_cast<double>(grid_steps[arg]) < *preds.min_before_step;
      if (before) ++res.n_min_before;
      if (!before) ok = false;
    }
    if (preds.never_improve_pct) {
      const double vmin = *std::min_element(vals.begin(), vals.end());
      const bool never =
          vmin >= chance * (1.0 - *preds.never_improve_pct / 100.0);
      if (never) ++res.n_never_improve;
      if (!never) ok = false;
    }
    if (ok) res.matched.push_back(e);
  }
  return res;
}

}  // namespace curvescope::metrics
