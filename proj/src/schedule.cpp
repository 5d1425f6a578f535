#include "curvescope/schedule.hpp"

#include <cmath>
#include <string>

#include "curvescope/errors.hpp"

namespace curvescope::schedule {

void ScheduleParams::validate() const {
  if (t1 <= 0) throw ConfigError("schedule: t1 must be > 0");
  if (!(s0 > 0.0) || !(s1 > s0))
    throw ConfigError("schedule: requires s1 > s0 > 0");
}

namespace {

void check_step_range(const ScheduleParams& p, double t) {
  if (t < 0.0 || t > static_cast<double>(p.t1))
    throw ConfigError("schedule: step " + std::to_string(t) +
                      " outside [0, t1]");
}

}  // namespace

double steps_per_checkpoint(const ScheduleParams& p, double t) {
  p.validate();
  check_step_range(p, t);
  return p.s0 + (p.s1 - p.s0) / static_cast<double>(p.t1) * t;
}

double checkpoint_count(const ScheduleParams& p, double t) {
  p.validate();
  check_step_range(p, t);
  const double t1 = static_cast<double>(p.t1);
  const double ds = p.s1 - p.s0;
  return t1 / ds * std::log1p(ds / (p.s0 * t1) * t);
}

std::optional<std::int64_t> step_of_checkpoint(const ScheduleParams& p, int n) {
  p.validate();
  if (n < 0) throw ConfigError("schedule: checkpoint ordinal must be >= 0");
  if (n == 0) return 0;
  const double t1 = static_cast<double>(p.t1);
  const double ds = p.s1 - p.s0;
  const double exact =
      p.s0 * t1 / ds * std::expm1(static_cast<double>(n) * ds / t1);
  // Compare before rounding: the exponential overflows llround's range for
  // steep schedules.
  if (!(exact <= t1 + 0.5)) return std::nullopt;
  // llround rounds halfway cases away from zero.
  const std::int64_t step = std::llround(exact);
  if (step > p.t1) return std::nullopt;
  return step;
}

std::vector<Checkpoint> generate_schedule(const ScheduleParams& p) {
  p.validate();
  std::vector<Checkpoint> out;
  out.push_back({0, 0});
  for (int n = 1;; ++n) {
    const auto step = step_of_checkpoint(p, n);
    if (!step) break;
    if (*step == out.back().step) continue;  // rounding collision; keep lowest index
    out.push_back({n, *step});
  }
  if (out.size() < 2)
    throw ConfigError("schedule: parameters yield no non-trivial checkpoints");
  return out;
}

}  // namespace curvescope::schedule
