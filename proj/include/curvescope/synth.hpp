#ifndef CURVESCOPE_SYNTH_HPP
#define CURVESCOPE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "curvescope/corpus.hpp"
#include "curvescope/curves.hpp"
#include "curvescope/schedule.hpp"

namespace curvescope::synth {

using curves::CheckpointGrid;
using curves::ExampleId;
using curves::SurprisalMatrix;

enum class CurveFamily { kSigmoid, kSigmoidSpike, kMonotone, kConstant };

// Parametric surprisal curve over log10 step. Sigmoids descend from the
// ceiling (defaults to chance surprisal) to the floor through the midpoint;
// spikes are Gaussian bumps in log-step space.
struct CurveSpec {
  CurveFamily family = CurveFamily::kSigmoid;
  double ceiling = 0.0;
  double floor = 0.0;
  double midpoint = 0.0;    // log10 step
  double slope = 4.0;
  double spike_position = 0.0;
  double spike_height = 0.0;
  double spike_width = 0.25;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Noise-free curve value at log10 step x.
double curve_value(const CurveSpec& spec, double x);

// Deterministic matrix of sampled curves; noise draws are keyed by
// (seed, example, checkpoint) so the output is layout-independent. Values
// are clamped at zero. A step-0 column samples the ceiling.
SurprisalMatrix generate_run(const std::vector<CurveSpec>& specs,
                             const std::vector<ExampleId>& ids,
                             const CheckpointGrid& grid,
                             const std::string& run_id, std::uint64_t seed);

// Cohort plan: a synthetic corpus plus planted frequency effects. Less
// frequent targets get higher floors (final surprisal), later midpoints
// (AoA), more step noise, and a higher spike probability, so the planted
// coefficient signs match the direction the predictors should recover.
struct CohortPlan {
  std::uint32_t vocab_size = 1000;
  std::uint32_t sequence_length = 64;
  std::uint64_t n_sequences = 1000;
  std::uint32_t examples_per_sequence = 10;
  double zipf_exponent = 1.1;
  std::uint32_t n_runs = 5;

  schedule::ScheduleParams schedule_params{100.0, 25000.0, 1000000};

  double floor_lo = 2.0, floor_hi = 8.5;
  double midpoint_lo = 3.0, midpoint_hi = 4.0;
  double slope = 5.0;
  double noise_lo = 0.05, noise_hi = 0.35;
  double spike_prob_lo = 0.05, spike_prob_hi = 0.45;
  double spike_height = 4.0;
  double spike_width = 0.3;
  double spike_position = 5.0;

  void validate() const;
};

struct CohortTruth {
  std::vector<ExampleId> ids;
  std::vector<double> log_freq;  // measured on the generated corpus
  std::vector<double> floor;
  std::vector<double> midpoint;
  std::vector<double> noise_std;
  std::vector<bool> spiked;
};

struct Cohort {
  corpus::Corpus corpus;
  CheckpointGrid grid;
  std::vector<SurprisalMatrix> runs;
  CohortTruth truth;
};

Cohort generate_cohort(const CohortPlan& plan, std::uint64_t seed);

// Uniformly tagged POS annotations for a synthetic cohort (tags carry no
// planted effect).
void write_synthetic_pos(const std::string& path,
                         const std::vector<ExampleId>& ids, std::uint64_t seed);
void write_truth_tsv(const std::string& path, const CohortTruth& truth);

}  // namespace curvescope::synth

#endif
