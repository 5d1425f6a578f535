#ifndef CURVESCOPE_CLI_HPP
#define CURVESCOPE_CLI_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curvescope/curves.hpp"
#include "curvescope/features.hpp"
#include "curvescope/regress.hpp"

namespace curvescope::cli {

constexpr const char* kVersion = "curvescope 0.1.0";

// Entry point shared by the binary and the tests; returns the exit code.
int run(const std::vector<std::string>& args);

// Plain key = value configuration (comments with '#', sections by key
// prefix, e.g. schedule.s0).
class KeyValues {
public:
  static KeyValues parse_file(const std::string& path);
  static KeyValues parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key) const;
  double num_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  std::vector<std::string> list(const std::string& key) const;  // comma-separated
  const std::map<std::string, std::string>& entries() const { return values_; }

private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

struct PipelineConfig {
  std::string corpus_path;
  std::vector<std::string> curve_paths;
  std::string pos_path;  // optional
  std::string out_dir;
  std::uint32_t vocab_size = 0;
  std::uint32_t sequence_length = 128;
  std::uint32_t ngram_order = 5;
  std::int64_t t1 = 0;  // 0: use the max grid step
  int gam_n_splines = 25;
  std::vector<double> gam_lambda_grid;  // empty: default grid
  double window_fraction = 0.25;
  std::uint64_t seed = 7;
  int threads = 0;  // 0: leave the global cap untouched

  static PipelineConfig from_file(const std::string& path);
};

// Static checks only; returns every problem found.
std::vector<std::string> validate_config(const PipelineConfig& config);

// Runs count-ngrams -> fit-gams -> metrics -> profiles -> features ->
// regress, writing every artifact under out_dir.
void run_pipeline(const PipelineConfig& config);

// metrics.tsv: fixed columns, optional trailing var_runs column written by
// the pipeline (run-mean metrics over several runs).
struct MetricsTsv {
  std::vector<curves::ExampleId> ids;
  std::vector<double> final_surprisal;
  std::vector<double> var_steps;
  std::vector<double> aoa;
  std::vector<double> forgettability;
  std::vector<int> never_acquired;
  std::vector<double> var_runs;  // empty when absent

  std::size_t size() const { return ids.size(); }
};

void write_metrics_tsv(const std::string& path, const MetricsTsv& t);
MetricsTsv read_metrics_tsv(const std::string& path);

// Table-3-style report for one target metric.
struct RegressionReport {
  std::string target;
  std::vector<regress::LedgerEntry> ledger;
  std::vector<std::pair<std::string, regress::SignTriple>> signs;
  std::vector<std::pair<std::string, double>> vifs;
  std::vector<std::pair<std::string, double>> nested_p;
  double total_adjusted_r2 = 0.0;
  std::optional<regress::PosCoefficients> pos;
};

// Joins features and metrics by example id (rows sorted by id first),
// clips the continuous predictors, and fits the ledger in the fixed predictor order.
RegressionReport build_regression_report(const features::FeatureTable& ft,
                                         const MetricsTsv& mt,
                                         const std::string& target);
void write_regression_json(const std::string& path, const RegressionReport& r);

}  // namespace curvescope::cli

#endif
