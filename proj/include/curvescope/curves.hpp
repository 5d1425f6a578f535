#ifndef CURVESCOPE_CURVES_HPP
#define CURVESCOPE_CURVES_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace curvescope::curves {

struct CheckpointGrid {
  std::vector<std::int64_t> steps;  // strictly increasing; may start at 0

  void validate() const;
  std::size_t size() const { return steps.size(); }
  bool operator==(const CheckpointGrid& o) const { return steps == o.steps; }

  // log10 of the non-zero steps: the evaluation axis for fitting and all
  // downstream metrics. first_nonzero reports how many leading columns
  // (step 0) were skipped.
  std::vector<double> log10_nonzero_steps(std::size_t* first_nonzero = nullptr) const;
};

struct ExampleId {
  std::uint32_t sequence_index = 0;
  std::uint32_t token_position = 0;  // >= 1: a target needs context

  bool operator==(const ExampleId& o) const {
    return sequence_index == o.sequence_index &&
           token_position == o.token_position;
  }
  std::string to_string() const;
  static ExampleId parse(const std::string& s);
};

struct ExampleIdHash {
  std::size_t operator()(const ExampleId& e) const {
    return (static_cast<std::size_t>(e.sequence_index) << 32) ^
           e.token_position;
  }
};

// Per-run surprisal curves: examples x checkpoints, float32, bits.
class SurprisalMatrix {
public:
  SurprisalMatrix(std::string run_id, CheckpointGrid grid,
                  std::vector<ExampleId> ids, std::vector<float> values);

  const std::string& run_id() const { return run_id_; }
  const CheckpointGrid& grid() const { return grid_; }
  std::uint64_t n_examples() const { return ids_.size(); }
  std::size_t n_checkpoints() const { return grid_.size(); }
  const std::vector<ExampleId>& example_ids() const { return ids_; }

  std::span<const float> row(std::uint64_t i) const {
    return {values_.data() + i * grid_.size(), grid_.size()};
  }
  std::vector<double> row_as_double(std::uint64_t i) const;
  const std::vector<float>& values() const { return values_; }

  // Row lookup by example id; throws DataError when absent.
  std::uint64_t row_of(const ExampleId& id) const;
  bool contains(const ExampleId& id) const;

private:
  std::string run_id_;
  CheckpointGrid grid_;
  std::vector<ExampleId> ids_;
  std::vector<float> values_;
  std::unordered_map<ExampleId, std::uint64_t, ExampleIdHash> index_;
};

SurprisalMatrix ingest_curves(const std::string& path);
void write_curves(const std::string& path, const SurprisalMatrix& m);

// log2(vocab_size): surprisal of a uniform predictor.
double chance_surprisal(std::uint64_t vocab_size);

// Euclidean distance between two curves on the same grid.
double raw_curve_distance(std::span<const double> a, std::span<const double> b);

// Fraction of other examples in run_b whose curve lies farther from this
// example's run_a curve than its own run_b curve; ties count 0.5.
// Both matrices may hold raw or fitted-evaluated values.
double nearest_neighbor_rank(const ExampleId& example,
                             const SurprisalMatrix& run_a,
                             const SurprisalMatrix& run_b);

// Ranks for every shared example. The parallel version writes each slot
// independently and equals the serial one for any thread count.
std::vector<double> nearest_neighbor_ranks_serial(const SurprisalMatrix& run_a,
                                                  const SurprisalMatrix& run_b);
std::vector<double> nearest_neighbor_ranks(const SurprisalMatrix& run_a,
                                           const SurprisalMatrix& run_b);

// Same computation on evaluated curves (rows aligned across both inputs);
// used for the fitted-curve distance source.
std::vector<double> nearest_neighbor_ranks_values(
    std::span<const std::vector<double>> a,
    std::span<const std::vector<double>> b);

constexpr const char* kCurveMagic = "SCRV1";

}  // namespace curvescope::curves

#endif
