#pragma once

#include <cmath>

#include "quadjump/constraints.hpp"
#include "quadjump/grf_profile.hpp"
#include "quadjump/task.hpp"
#include "quadjump/trajectory.hpp"

namespace quadjump {

/// Penalty base constant; feasible candidates always score below it.
inline constexpr double kBeta = 1e3;

/// Global maximum number of sub-constraints in any priority level; fixes the
/// exponent stride so k is strictly increasing across levels.
inline constexpr int kJMax = ConstraintReport::kMaxChannelsPerLevel;
static_assert(kJMax == 6);

/// Exponent of the penalty weight for sub-constraint j of level i.
inline constexpr int k_index(int level, int j) { return level * kJMax + j; }

inline constexpr int kMaxKIndex =
    k_index(ConstraintReport::kNumLevels - 1,
            ConstraintReport::kChannelsPerLevel[ConstraintReport::kNumLevels - 1] - 1);

/// Score assigned when the coefficient solve degenerates; above every
/// achievable constraint penalty.
inline const double kDegenerateSentinel = std::pow(10.0, kMaxKIndex + 2) * kBeta;

struct FitnessValue {
  double value = 0.0;
  /// True when all constraints hold and `value` is the energy integral.
  bool in_energy_mode = false;
  double energy_joules = 0.0;
  int worst_level = -1;
  bool degenerate = false;
};

/// One penalty summand: 10^k * (beta + violation).
inline double penalty_term(int k, double violation) {
  return std::pow(10.0, k) * (kBeta + violation);
}

/// Sum of the exponentially weighted penalties of every violated channel.
/// With magnitudes clamped to [0, 100] this sum is strictly dominated by any
/// single violation at a higher level.
inline double penalty_value(const ConstraintReport& report) {
  double total = 0.0;
  for (int i = 0; i < ConstraintReport::kNumLevels; ++i) {
    const auto& row = report.levels[i];
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      if (row[j] > 0.0) total += penalty_term(k_index(i, j), row[j]);
    }
  }
  return total;
}

/// Trapezoidal energy integral of the summed absolute joint powers.
inline double energy(const Trajectory& traj) { return compute_energy(traj.samples); }

/// Priority-hierarchy fitness: builds the trajectory for a design vector,
/// scores constraint violations with exponentially separated penalties, and
/// switches to the energy objective once every constraint holds.
inline FitnessValue fitness(const DesignVector& d, const JumpTask& task, const RobotParams& params,
                            double dt = 0.005) {
  FitnessValue out;
  Trajectory traj;
  try {
    traj = build_trajectory(d, task, params, dt);
  } catch (const SolveError&) {
    out.value = kDegenerateSentinel;
    out.degenerate = true;
    return out;
  }
  const ConstraintReport report = evaluate(traj, task, params);
  out.worst_level = report.worst_level;
  if (report.all_satisfied) {
    out.energy_joules = traj.energy_j;
    out.value = traj.energy_j;
    out.in_energy_mode = true;
  } else {
    out.value = penalty_value(report);
  }
  return out;
}

}  // namespace quadjump
