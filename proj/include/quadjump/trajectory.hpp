#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "quadjump/grf_profile.hpp"
#include "quadjump/leg_kinematics.hpp"
#include "quadjump/robot_params.hpp"
#include "quadjump/srb_model.hpp"
#include "quadjump/task.hpp"

namespace quadjump {

enum class PhaseLabel { four_feet = 0, two_feet = 1, flight = 2 };

struct JointTriple {
  double roll = 0.0;
  double pitch = 0.0;
  double knee = 0.0;
};

/// One time sample of a planned motion. Joint-space quantities are stored per
/// pair with per-leg values; the two legs of a pair mirror each other, so a
/// pair's force is split evenly when mapped through a single leg.
struct TrajectorySample {
  double t = 0.0;
  PlanarState state;
  PhaseLabel phase = PhaseLabel::four_feet;
  std::array<Vec2, 2> foot_force = {Vec2::Zero(), Vec2::Zero()};  // per pair, world
  std::array<JointTriple, 2> q;
  std::array<JointTriple, 2> qd;
  std::array<JointTriple, 2> tau;
  double residual = 0.0;
  std::array<double, 2> reach_deficit = {0.0, 0.0};
};

struct Trajectory {
  MotionType motion;
  JumpTask task;
  DesignVector design;
  WrenchProfile profile;
  std::array<Vec2, 2> stance_feet = {Vec2::Zero(), Vec2::Zero()};
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  double sample_dt = 0.005;
  std::vector<TrajectorySample> samples;
  double energy_j = 0.0;
  std::uint64_t feasibility_hash = 0;
};

/// Summed absolute joint power over all four legs at one sample.
inline double sample_power(const TrajectorySample& s) {
  double p = 0.0;
  for (int pair = 0; pair < 2; ++pair) {
    p += std::abs(s.tau[pair].roll * s.qd[pair].roll) +
         std::abs(s.tau[pair].pitch * s.qd[pair].pitch) +
         std::abs(s.tau[pair].knee * s.qd[pair].knee);
  }
  return 2.0 * p;  // two legs per pair
}

/// Trapezoidal integral of the absolute joint power over the samples.
inline double compute_energy(const std::vector<TrajectorySample>& samples) {
  double e = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    e += 0.5 * (sample_power(samples[i - 1]) + sample_power(samples[i])) *
         (samples[i].t - samples[i - 1].t);
  }
  return e;
}

/// Leg configuration the flight-phase interpolation ends on: foot directly
/// below the hip at the task's landing depth.
inline LegAngles landing_configuration(const JumpTask& task, const RobotParams& params) {
  return try_inverse_kinematics(Vec2(0.0, -task.landing_leg_depth(params)), params).q;
}

namespace detail {

struct StanceLegSolution {
  LegAngles q;
  Vec2 qd = Vec2::Zero();
  Vec2 tau = Vec2::Zero();
  double reach_deficit = 0.0;
};

/// IK, joint rates, and torques for one stance pair with its foot pinned at a
/// world point. `pair_force_world` is the whole pair's ground reaction force.
inline StanceLegSolution solve_stance_leg(const PlanarState& body, const Vec2& foot_world,
                                          const Vec2& hip_anchor_body, const Vec2& pair_force_world,
                                          const RobotParams& params) {
  StanceLegSolution out;
  const Mat2 r_inv = rot2(-body.angle);
  const Vec2 com(body.pos_t, body.pos_z);
  const Vec2 foot_rel_com_body = r_inv * (foot_world - com);
  const Vec2 foot_rel_hip_body = foot_rel_com_body - hip_anchor_body;

  const IkSolution ik = try_inverse_kinematics(foot_rel_hip_body, params);
  out.q = ik.q;
  out.reach_deficit = ik.reach_deficit;

  // Joint rates exist only while the pinned foot is actually reachable; at a
  // clamped configuration the rate demand is undefined and the reach channel
  // already carries the violation. The workspace clamp keeps the knee away
  // from the straight-leg singularity, so the inverse below is well posed.
  if (ik.reach_deficit == 0.0) {
    out.qd = joint_velocities(Vec2(body.vel_t, body.vel_z), body.angvel, body.angle,
                              foot_rel_com_body, ik.q, params);
  }
  const Vec2 leg_force_body = r_inv * (0.5 * pair_force_world);
  out.tau = joint_torques(leg_force_body, ik.q, params);
  return out;
}

inline JointTriple to_triple(const LegAngles& q) { return {0.0, q.pitch, q.knee}; }

}  // namespace detail

/// Builds the fully articulated sampled trajectory for a design vector:
/// closed-form body states under the solved wrench profile, per-pair contact
/// forces, and joint angles/rates/torques from the stance kinematics, with
/// flight legs blending to the landing configuration on a quintic profile.
/// Samples run on a uniform grid with the phase boundaries inserted.
inline Trajectory build_trajectory(const DesignVector& d, const JumpTask& task,
                                   const RobotParams& params, double dt = 0.005) {
  Trajectory traj;
  traj.motion = task.motion;
  traj.task = task;
  traj.design = d;
  traj.profile = solve_coefficients(d, task, params);
  traj.t1 = traj.profile.t1;
  traj.t2 = traj.profile.t2;
  traj.t3 = traj.profile.t3;
  traj.sample_dt = dt;
  traj.stance_feet = initial_foot_positions(task, params);

  const bool two_feet = task.motion.has_two_feet_phase();
  const int push_pair = static_cast<int>(task.two_feet_stance());
  const int lift_pair = 1 - push_pair;

  std::vector<double> times;
  const auto grid_count = static_cast<std::size_t>(traj.t3 / dt);
  times.reserve(grid_count + 7);
  for (std::size_t i = 0; i * dt < traj.t3; ++i) times.push_back(static_cast<double>(i) * dt);
  times.push_back(traj.t1);
  times.push_back(traj.t2);
  times.push_back(traj.t3);
  // The contact force jumps at the pair switch and at liftoff; samples just
  // inside the stance side keep the trapezoid integral and the constraint
  // scan from smearing those jumps over a whole grid cell.
  if (traj.t2 - 1e-6 > 0.0) times.push_back(traj.t2 - 1e-6);
  if (two_feet && traj.t1 - 1e-6 > 0.0) times.push_back(traj.t1 - 1e-6);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              times.end());

  const LegAngles q_land = landing_configuration(task, params);

  // Configurations each pair leaves the ground with; starting points of the
  // quintic retraction toward the landing configuration.
  std::array<LegAngles, 2> q_liftoff;
  std::array<double, 2> t_liftoff;
  {
    const PlanarState at_t1 = analytic_state(traj.profile, task.start_state, params, traj.t1);
    const PlanarState at_t2 = analytic_state(traj.profile, task.start_state, params, traj.t2);
    for (int pair = 0; pair < 2; ++pair) {
      const bool leaves_at_t1 = !two_feet || pair == lift_pair;
      const PlanarState& body = leaves_at_t1 ? at_t1 : at_t2;
      const Mat2 r_inv = rot2(-body.angle);
      const Vec2 rel = r_inv * (traj.stance_feet[pair] - Vec2(body.pos_t, body.pos_z)) -
                       hip_anchor(static_cast<StancePair>(pair), params);
      q_liftoff[pair] = try_inverse_kinematics(rel, params).q;
      t_liftoff[pair] = leaves_at_t1 ? traj.t1 : traj.t2;
    }
  }

  traj.samples.reserve(times.size());
  for (double t : times) {
    TrajectorySample s;
    s.t = t;
    s.state = analytic_state(traj.profile, task.start_state, params, t);
    // Half-open phase intervals: the pair switch owns T1, flight owns T2.
    if (t >= traj.t2) {
      s.phase = PhaseLabel::flight;
    } else if (t < traj.t1) {
      s.phase = PhaseLabel::four_feet;
    } else {
      s.phase = PhaseLabel::two_feet;
    }

    if (s.phase != PhaseLabel::flight) {
      const PlanarWrench w = traj.profile.eval(t);
      const FootForces ff =
          distribute_forces(w, s.state, traj.stance_feet,
                            s.phase == PhaseLabel::four_feet ? ContactStance::four_feet
                                                             : ContactStance::two_feet,
                            task.motion, static_cast<StancePair>(push_pair));
      s.foot_force = ff.force;
      s.residual = ff.residual;
      for (int pair = 0; pair < 2; ++pair) {
        if (!ff.active[pair]) continue;
        const auto leg = detail::solve_stance_leg(
            s.state, traj.stance_feet[pair], hip_anchor(static_cast<StancePair>(pair), params),
            ff.force[pair], params);
        s.q[pair] = detail::to_triple(leg.q);
        s.qd[pair] = {0.0, leg.qd.x(), leg.qd.y()};
        s.tau[pair] = {0.0, leg.tau.x(), leg.tau.y()};
        s.reach_deficit[pair] = leg.reach_deficit;
      }
    }

    // Airborne pairs blend from their liftoff configuration to the landing
    // configuration; torque-free since the legs carry no contact force.
    for (int pair = 0; pair < 2; ++pair) {
      const bool airborne = s.phase == PhaseLabel::flight ||
                            (s.phase == PhaseLabel::two_feet && pair == lift_pair);
      if (!airborne) continue;
      const double span = traj.t3 - t_liftoff[pair];
      const double u = span > 0.0 ? std::clamp((t - t_liftoff[pair]) / span, 0.0, 1.0) : 1.0;
      const double blend = quintic_scale(u);
      const double blend_rate = span > 0.0 ? quintic_scale_rate(u) / span : 0.0;
      const LegAngles& q0 = q_liftoff[pair];
      s.q[pair] = {0.0, q0.pitch + blend * (q_land.pitch - q0.pitch),
                   q0.knee + blend * (q_land.knee - q0.knee)};
      s.qd[pair] = {0.0, blend_rate * (q_land.pitch - q0.pitch),
                    blend_rate * (q_land.knee - q0.knee)};
      s.tau[pair] = {};
    }

    traj.samples.push_back(s);
  }

  traj.energy_j = compute_energy(traj.samples);
  return traj;
}

}  // namespace quadjump
