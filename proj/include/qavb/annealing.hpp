#pragma once

namespace qavb {

/// Piecewise-linear controls indexed by iteration t:
///   s_t    = s0 * max(1 - t / tau1, 0)
///   beta_t = beta0                                          for t <= tau1
///          = 1 + (beta0 - 1)(tau2 - t) / (tau2 - tau1)      for tau1 <= t <= tau2
///          = 1                                              for t >= tau2
struct AnnealingSchedule {
  double s0 = 1.0;
  double beta0 = 30.0;
  int tau1 = 300;
  int tau2 = 350;

  /// QAVB requirements: s0 in [0, 1], beta0 >= 1, 1 <= tau1 <= tau2.
  void validate() const;
  /// Temperature-only schedules may start hot (0 < beta0 < 1).
  void validate_davb() const;
};

struct ScheduleValue {
  double beta;
  double s;
};

ScheduleValue schedule_at(int t, const AnnealingSchedule& sched);

/// Same beta_t as schedule_at; s_t is always 0.
ScheduleValue davb_schedule_at(int t, const AnnealingSchedule& sched);

}  // namespace qavb
