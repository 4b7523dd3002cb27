#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "quadjump/leg_kinematics.hpp"
#include "quadjump/robot_params.hpp"
#include "quadjump/task.hpp"
#include "quadjump/trajectory.hpp"

namespace quadjump {

/// Violation magnitudes are normalized by the violated limit and clamped to
/// this value so that the exponential level weighting in the fitness stays
/// strictly ordered across levels.
inline constexpr double kViolationClamp = 100.0;

/// Two-feet phase moment realizability threshold.
inline constexpr double kResidualLimit = 0.5;  // N·m

/// Weight-transfer window before the pair switch. The wrench is continuous
/// at T1 while the stance set shrinks, so the lifting pair must unload
/// through zero; its contact-force floor and friction cone are waived while
/// it does. An absolute-time window keeps re-sampling at any rate consistent.
inline constexpr double kTransferBandSeconds = 5e-3;

/// Per-priority-level violation magnitudes for one candidate trajectory.
/// Levels, in increasing priority weight:
///   0 vertical contact force,  1 friction cone,  2 joint angles (+reach),
///   3 joint velocities,        4 joint torques,  5 joint ground clearance,
///   6 obstacle window,         7 two-feet moment realizability.
struct ConstraintReport {
  static constexpr int kNumLevels = 8;
  static constexpr std::array<int, kNumLevels> kChannelsPerLevel = {2, 2, 6, 4, 4, 4, 6, 1};
  static constexpr int kMaxChannelsPerLevel = 6;

  std::array<std::vector<double>, kNumLevels> levels;
  int worst_level = -1;
  bool all_satisfied = true;

  ConstraintReport() {
    for (int i = 0; i < kNumLevels; ++i) levels[i].assign(kChannelsPerLevel[i], 0.0);
  }

  void finalize() {
    worst_level = -1;
    all_satisfied = true;
    for (int i = 0; i < kNumLevels; ++i) {
      for (double m : levels[i]) {
        if (m > 0.0) {
          all_satisfied = false;
          worst_level = i;
          break;
        }
      }
    }
  }

  /// FNV-1a over the magnitude bytes; the feasibility certificate stored with
  /// library trajectories.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* bytes = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& level : levels)
      for (double m : level) mix(&m, sizeof(m));
    mix(&worst_level, sizeof(worst_level));
    return h;
  }
};

/// A detected obstacle-plane crossing of one joint trajectory.
struct Crossing {
  double t;  // s
  double z;  // m, joint height at the crossing instant
};

/// Finds the instants where a piecewise-linear coordinate series crosses
/// `target`, by sign-change bisection to 1e-6 s. Heights are interpolated on
/// the same segments.
inline std::vector<Crossing> detect_crossings(const std::vector<double>& times,
                                              const std::vector<double>& coords,
                                              const std::vector<double>& heights, double target) {
  std::vector<Crossing> out;
  auto push = [&out](double t, double z) {
    if (!out.empty() && std::abs(out.back().t - t) < 1e-9) return;
    out.push_back({t, z});
  };
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double f0 = coords[i] - target;
    const double f1 = coords[i + 1] - target;
    if (f0 == 0.0) push(times[i], heights[i]);
    if (f0 * f1 < 0.0) {
      double lo = times[i], hi = times[i + 1];
      double flo = f0;
      auto coord_at = [&](double t) {
        const double u = (t - times[i]) / (times[i + 1] - times[i]);
        return (coords[i] + u * (coords[i + 1] - coords[i])) - target;
      };
      while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double fm = coord_at(mid);
        if (fm == 0.0) { lo = hi = mid; break; }
        if ((flo < 0.0) != (fm < 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      const double tc = 0.5 * (lo + hi);
      const double u = (tc - times[i]) / (times[i + 1] - times[i]);
      push(tc, heights[i] + u * (heights[i + 1] - heights[i]));
    }
  }
  const std::size_t last = times.size() - 1;
  if (!times.empty() && coords[last] - target == 0.0) push(times[last], heights[last]);
  return out;
}

namespace detail {

inline double clamp_violation(double v) { return std::clamp(v, 0.0, kViolationClamp); }

inline double normalized_excess(double excess, double limit) {
  const double denom = std::abs(limit) > 1e-9 ? std::abs(limit) : 1.0;
  return clamp_violation(excess / denom);
}

inline void raise(std::vector<double>& channel_row, int j, double magnitude) {
  if (magnitude > channel_row[j]) channel_row[j] = magnitude;
}

}  // namespace detail

/// Evaluates every kino-dynamic constraint over a sampled trajectory and
/// returns the per-level violation magnitudes. IK reach failures surface as
/// level-2 magnitudes rather than errors.
inline ConstraintReport evaluate(const Trajectory& traj, const JumpTask& task,
                                 const RobotParams& params) {
  ConstraintReport report;
  const std::size_t n = traj.samples.size();

  // Joint world positions per pair, gathered once for the clearance and
  // obstacle levels.
  std::array<std::array<std::vector<double>, 3>, 2> joint_coord;  // [pair][hip,knee,foot]
  std::array<std::array<std::vector<double>, 3>, 2> joint_height;
  std::vector<double> times(n);
  for (int pair = 0; pair < 2; ++pair)
    for (int link = 0; link < 3; ++link) {
      joint_coord[pair][link].resize(n);
      joint_height[pair][link].resize(n);
    }

  for (std::size_t i = 0; i < n; ++i) {
    const TrajectorySample& s = traj.samples[i];
    times[i] = s.t;

    for (int pair = 0; pair < 2; ++pair) {
      const bool pair_loaded =
          s.phase == PhaseLabel::four_feet ||
          (s.phase == PhaseLabel::two_feet && pair == static_cast<int>(task.two_feet_stance()));
      const bool unloading =
          task.motion.has_two_feet_phase() && s.phase == PhaseLabel::four_feet &&
          pair != static_cast<int>(task.two_feet_stance()) &&
          s.t > traj.t1 - kTransferBandSeconds;

      if (pair_loaded && !unloading) {
        const double leg_fz = 0.5 * s.foot_force[pair].y();
        const double leg_ft = 0.5 * s.foot_force[pair].x();
        // Level 0: vertical contact force above the minimum push.
        detail::raise(report.levels[0], pair,
                      detail::normalized_excess(params.fz_min - leg_fz, params.fz_min));
        // Level 1: friction cone.
        if (leg_fz > 1e-9) {
          const double ratio = std::abs(leg_ft) / leg_fz;
          detail::raise(report.levels[1], pair,
                        detail::normalized_excess(ratio - params.friction_mu, params.friction_mu));
        } else if (std::abs(leg_ft) > 1e-9) {
          detail::raise(report.levels[1], pair, kViolationClamp);
        }
      }

      // Level 2: joint angle box (hip pitch, knee) and IK reach deficit.
      const JointTriple& q = s.q[pair];
      const JointLimits& hp = params.hip_pitch_limits;
      const JointLimits& kn = params.knee_limits;
      detail::raise(report.levels[2], 3 * pair + 0,
                    std::max(detail::normalized_excess(q.pitch - hp.max, hp.max),
                             detail::normalized_excess(hp.min - q.pitch, hp.min)));
      detail::raise(report.levels[2], 3 * pair + 1,
                    std::max(detail::normalized_excess(q.knee - kn.max, kn.max),
                             detail::normalized_excess(kn.min - q.knee, kn.min)));
      detail::raise(report.levels[2], 3 * pair + 2,
                    detail::normalized_excess(s.reach_deficit[pair],
                                              params.max_leg_reach() - params.workspace_margin));

      // Level 3: joint velocities.
      detail::raise(report.levels[3], 2 * pair + 0,
                    detail::normalized_excess(std::abs(s.qd[pair].pitch) - params.joint_vel_max,
                                              params.joint_vel_max));
      detail::raise(report.levels[3], 2 * pair + 1,
                    detail::normalized_excess(std::abs(s.qd[pair].knee) - params.joint_vel_max,
                                              params.joint_vel_max));

      // Level 4: joint torques.
      detail::raise(report.levels[4], 2 * pair + 0,
                    detail::normalized_excess(std::abs(s.tau[pair].pitch) - params.joint_torque_max,
                                              params.joint_torque_max));
      detail::raise(report.levels[4], 2 * pair + 1,
                    detail::normalized_excess(std::abs(s.tau[pair].knee) - params.joint_torque_max,
                                              params.joint_torque_max));

      const LinkPositions links =
          forward_kinematics({q.pitch, q.knee}, s.state,
                             hip_anchor(static_cast<StancePair>(pair), params), params);
      joint_coord[pair][0][i] = links.hip.x();
      joint_coord[pair][1][i] = links.knee.x();
      joint_coord[pair][2][i] = links.foot.x();
      joint_height[pair][0][i] = links.hip.y();
      joint_height[pair][1][i] = links.knee.y();
      joint_height[pair][2][i] = links.foot.y();

      // Level 5: hips and knees stay clear of the ground (feet exempt).
      detail::raise(report.levels[5], 2 * pair + 0,
                    detail::normalized_excess(params.z_min_clearance - links.hip.y(),
                                              params.z_min_clearance));
      detail::raise(report.levels[5], 2 * pair + 1,
                    detail::normalized_excess(params.z_min_clearance - links.knee.y(),
                                              params.z_min_clearance));
    }

    // Level 7: two-feet phase wrench realizability.
    if (s.phase == PhaseLabel::two_feet) {
      detail::raise(report.levels[7], 0,
                    detail::normalized_excess(s.residual - kResidualLimit, kResidualLimit));
    }
  }

  // Level 6: every joint height inside the shrunk obstacle window at every
  // crossing instant.
  if (task.obstacle) {
    const ObstacleSpec& obs = *task.obstacle;
    const double low = obs.window_low();
    const double high = obs.window_high();
    for (int pair = 0; pair < 2; ++pair) {
      for (int link = 0; link < 3; ++link) {
        const auto crossings = detect_crossings(times, joint_coord[pair][link],
                                                joint_height[pair][link], obs.crossing_coord);
        for (const Crossing& c : crossings) {
          const double v = std::max(detail::normalized_excess(low - c.z, low),
                                    detail::normalized_excess(c.z - high, high));
          detail::raise(report.levels[6], 3 * pair + link, v);
        }
      }
    }
  }

  report.finalize();
  return report;
}

}  // namespace quadjump
