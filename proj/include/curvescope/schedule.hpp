#ifndef CURVESCOPE_SCHEDULE_HPP
#define CURVESCOPE_SCHEDULE_HPP

#include <cstdint>
#include <optional>
#include <vector>

namespace curvescope::schedule {

// Checkpoint schedule where the steps-per-checkpoint grows linearly in the
// current step: s(t) = s0 + ((s1 - s0) / t1) * t. Checkpoint steps are then
// an exponential function of the checkpoint ordinal.
struct ScheduleParams {
  double s0 = 0.0;        // steps per checkpoint at step 0
  double s1 = 0.0;        // steps per checkpoint at the final step
  std::int64_t t1 = 0;    // final pre-training step

  void validate() const;  // requires t1 > 0 and s1 > s0 > 0
};

struct Checkpoint {
  int index = 0;            // ordinal n >= 0
  std::int64_t step = 0;    // pre-training step; step(0) = 0
};

// s(t). Requires 0 <= t <= t1.
double steps_per_checkpoint(const ScheduleParams& p, double t);

// Continuous count of non-zero checkpoints reached by step t:
// (t1/(s1-s0)) * ln(1 + ((s1-s0)/(s0*t1)) * t). The step-0 checkpoint is
// excluded by convention; generate_schedule includes it.
double checkpoint_count(const ScheduleParams& p, double t);

// Integer step of the n-th checkpoint, half-away-from-zero rounding.
// nullopt signals end-of-schedule (rounded step would exceed t1).
std::optional<std::int64_t> step_of_checkpoint(const ScheduleParams& p, int n);

// Full schedule [0, step(1), ...], strictly increasing, deduplicated after
// rounding (lowest index kept).
std::vector<Checkpoint> generate_schedule(const ScheduleParams& p);

}  // namespace curvescope::schedule

#endif
