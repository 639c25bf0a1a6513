#include "qavb/annealing.hpp"

#include <algorithm>
#include <cmath>

#include "qavb/error.hpp"

namespace qavb {

namespace {

void validate_taus(const AnnealingSchedule& s) {
  if (s.tau1 < 1) throw ValidationError("schedule: tau1 must be at least 1");
  if (s.tau2 < s.tau1) throw ValidationError("schedule: tau2 must be at least tau1");
}

double beta_at(int t, const AnnealingSchedule& sched) {
  if (t <= sched.tau1) return sched.beta0;
  if (t >= sched.tau2) return 1.0;
  return 1.0 + (sched.beta0 - 1.0) * static_cast<double>(sched.tau2 - t) /
                   static_cast<double>(sched.tau2 - sched.tau1);
}

}  // namespace

void AnnealingSchedule::validate() const {
  if (!(s0 >= 0.0 && s0 <= 1.0)) throw ValidationError("schedule: s0 must lie in [0, 1]");
  if (!(beta0 >= 1.0) || !std::isfinite(beta0)) {
    throw ValidationError("schedule: beta0 must be at least 1");
  }
  validate_taus(*this);
}

void AnnealingSchedule::validate_davb() const {
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) {
    throw ValidationError("schedule: beta0 must be positive");
  }
  validate_taus(*this);
}

ScheduleValue schedule_at(int t, const AnnealingSchedule& sched) {
  const double s =
      sched.s0 * std::max(1.0 - static_cast<double>(t) / static_cast<double>(sched.tau1), 0.0);
  return {beta_at(t, sched), s};
}

ScheduleValue davb_schedule_at(int t, const AnnealingSchedule& sched) {
  return {beta_at(t, sched), 0.0};
}

}  // namespace qavb
