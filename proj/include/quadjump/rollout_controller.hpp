#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "quadjump/grf_profile.hpp"
#include "quadjump/leg_kinematics.hpp"
#include "quadjump/task.hpp"
#include "quadjump/trajectory.hpp"

namespace quadjump {

/// Diagonal PD gains per joint (roll, pitch, knee).
struct PdGains {
  JointTriple kp;
  JointTriple kd;

  /// Stance-phase tracking gains.
  static PdGains stance_default() { return {{80.0, 80.0, 80.0}, {2.0, 2.0, 2.0}}; }
  /// Softer landing-phase gains.
  static PdGains landing_default() { return {{25.0, 45.0, 45.0}, {1.5, 2.5, 2.5}}; }
};

struct JointRefs {
  std::array<JointTriple, 2> q;
  std::array<JointTriple, 2> qd;
  std::array<JointTriple, 2> tau;
};

/// Linear interpolation of the planned joint references over time, exact at
/// the stored samples; the rollout queries it at its control rate.
class ReferenceStream {
 public:
  explicit ReferenceStream(const Trajectory& traj, double rate_hz = 1000.0)
      : traj_(&traj), rate_hz_(rate_hz) {}

  double rate_hz() const { return rate_hz_; }
  double duration() const { return traj_->t3; }

  /// Control-loop sample times covering [0, T3] with no gaps.
  std::vector<double> sample_times() const {
    std::vector<double> times;
    const double dt = 1.0 / rate_hz_;
    const auto n = static_cast<std::size_t>(traj_->t3 / dt);
    times.reserve(n + 2);
    for (std::size_t i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * dt);
    if (times.back() < traj_->t3 - 1e-12) times.push_back(traj_->t3);
    return times;
  }

  JointRefs at(double t) const {
    const auto& samples = traj_->samples;
    if (!(t >= samples.front().t - 1e-12) || !(t <= samples.back().t + 1e-12))
      throw RangeError("reference_stream: time outside the trajectory");
    t = std::clamp(t, samples.front().t, samples.back().t);
    std::size_t hi = 1;
    while (hi + 1 < samples.size() && samples[hi].t < t) ++hi;
    const TrajectorySample& a = samples[hi - 1];
    const TrajectorySample& b = samples[hi];
    const double span = b.t - a.t;
    const double u = span > 0.0 ? std::clamp((t - a.t) / span, 0.0, 1.0) : 0.0;

    JointRefs refs;
    for (int pair = 0; pair < 2; ++pair) {
      refs.q[pair] = lerp(a.q[pair], b.q[pair], u);
      refs.qd[pair] = lerp(a.qd[pair], b.qd[pair], u);
      refs.tau[pair] = lerp(a.tau[pair], b.tau[pair], u);
    }
    return refs;
  }

 private:
  static JointTriple lerp(const JointTriple& a, const JointTriple& b, double u) {
    return {a.roll + u * (b.roll - a.roll), a.pitch + u * (b.pitch - a.pitch),
            a.knee + u * (b.knee - a.knee)};
  }

  const Trajectory* traj_;
  double rate_hz_;
};

inline ReferenceStream reference_stream(const Trajectory& traj, double rate_hz = 1000.0) {
  return ReferenceStream(traj, rate_hz);
}

/// Feed-forward PD law, clamped to the actuator torque bound.
inline JointTriple pd_command(const JointTriple& q, const JointTriple& qd, const JointTriple& q_ref,
                              const JointTriple& qd_ref, const JointTriple& tau_ref,
                              const PdGains& gains, double tau_max) {
  auto one = [tau_max](double tr, double kp, double e, double kd, double ed) {
    return std::clamp(tr + kp * e + kd * ed, -tau_max, tau_max);
  };
  return {one(tau_ref.roll, gains.kp.roll, q_ref.roll - q.roll, gains.kd.roll, qd_ref.roll - qd.roll),
          one(tau_ref.pitch, gains.kp.pitch, q_ref.pitch - q.pitch, gains.kd.pitch,
              qd_ref.pitch - qd.pitch),
          one(tau_ref.knee, gains.kp.knee, q_ref.knee - q.knee, gains.kd.knee,
              qd_ref.knee - qd.knee)};
}

/// First-order low-pass blend used during landing: alpha = 1 follows the
/// reference, alpha = 0 holds the measurement.
inline double landing_filter(double q_measured, double q_ref, double alpha) {
  return q_measured * (1.0 - alpha) + q_ref * alpha;
}

inline JointTriple landing_filter(const JointTriple& q, const JointTriple& q_ref, double alpha) {
  return {landing_filter(q.roll, q_ref.roll, alpha), landing_filter(q.pitch, q_ref.pitch, alpha),
          landing_filter(q.knee, q_ref.knee, alpha)};
}

/// alpha = exp(-Ts / time_constant).
inline double filter_alpha(double control_period, double time_constant) {
  return std::exp(-control_period / time_constant);
}

enum class RolloutMode { pd_tracking, open_loop_forces };

/// Contact saturation for the torque-to-force map: near a kinematic
/// singularity the pinned-foot model would otherwise transmit unbounded
/// force from a clamped torque.
inline constexpr double kMaxLegForce = 500.0;  // N

struct RolloutOptions {
  RolloutMode mode = RolloutMode::pd_tracking;
  double dt = 0.001;                    // s, control/integration step
  double landing_settle = 0.4;          // s of landing simulation after T3
  double landing_time_constant = 0.02;  // s, Eq-style low-pass constant
  std::string csv_path;                 // per-millisecond CSV dump when set
};

struct RolloutReport {
  double max_com_error = 0.0;    // m, vs the planned CoM path over [0, T3]
  double max_joint_error = 0.0;  // rad
  double apex_z = 0.0;           // m
  double plan_apex_z = 0.0;      // m
  double final_angle_error = 0.0;  // rad, vs the target at the end of settle
  double final_pos_error = 0.0;    // m
  double max_tau_cmd = 0.0;        // N·m
  bool diverged = false;
  bool success = false;
};

namespace detail {

/// The planner stores joint torques in the ground-reaction convention
/// (tau = J^T f with f the force on the foot); motor torques carry the
/// opposite sign. The PD law composes in motor convention.
inline JointTriple motor_torque(const JointTriple& stored) {
  return {-stored.roll, -stored.pitch, -stored.knee};
}

struct LegMeasurement {
  LegAngles q;
  Vec2 qd = Vec2::Zero();
  Vec2 foot_rel_com_body = Vec2::Zero();
};

inline LegMeasurement measure_stance_leg(const PlanarState& body, const Vec2& foot_world,
                                         const Vec2& anchor, const RobotParams& params) {
  LegMeasurement m;
  const Mat2 r_inv = rot2(-body.angle);
  m.foot_rel_com_body = r_inv * (foot_world - Vec2(body.pos_t, body.pos_z));
  m.q = try_inverse_kinematics(m.foot_rel_com_body - anchor, params).q;
  m.qd = joint_velocities(Vec2(body.vel_t, body.vel_z), body.angvel, body.angle,
                          m.foot_rel_com_body, m.q, params);
  return m;
}

/// Ground force a leg exerts given its commanded torques: f = J^-T tau,
/// saturated at the contact force bound.
inline Vec2 leg_force_from_torque(const JointTriple& tau_cmd, const LegAngles& q,
                                  const RobotParams& params) {
  const Mat2 j = leg_jacobian(q, params);
  const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
  if (std::abs(det) < 1e-9) return Vec2::Zero();
  const Vec2 tau(tau_cmd.pitch, tau_cmd.knee);
  // inv(J^T) = inv(J)^T
  Vec2 f;
  f.x() = (j(1, 1) * tau.x() - j(1, 0) * tau.y()) / det;
  f.y() = (-j(0, 1) * tau.x() + j(0, 0) * tau.y()) / det;
  const double norm = f.norm();
  if (norm > kMaxLegForce) f *= kMaxLegForce / norm;
  return f;
}

}  // namespace detail

/// Replays a planned trajectory through the tracking pipeline on the planar
/// body model at the control rate: stance phases realize the commanded joint
/// torques as ground forces at the pinned feet, flight is ballistic, and the
/// landing phase engages the filtered low-gain PD. The open-loop mode applies
/// the planned wrench directly and measures pure integration error.
inline RolloutReport rollout(const Trajectory& traj, const PdGains& stance_gains,
                             const RobotParams& params, const RolloutOptions& opts = {},
                             const PdGains& landing_gains = PdGains::landing_default()) {
  RolloutReport report;
  for (const TrajectorySample& s : traj.samples)
    report.plan_apex_z = std::max(report.plan_apex_z, s.state.pos_z);

  const ReferenceStream refs(traj, 1.0 / opts.dt);
  const double alpha = filter_alpha(opts.dt, opts.landing_time_constant);
  const int push_pair = static_cast<int>(traj.task.two_feet_stance());
  const LegAngles q_land = landing_configuration(traj.task, params);

  std::ofstream csv;
  if (!opts.csv_path.empty()) {
    csv.open(opts.csv_path, std::ios::trunc);
    if (!csv) throw StorageError("cannot open rollout CSV: " + opts.csv_path);
    csv << "t,pos_t,pos_z,angle,vel_t,vel_z,angvel,"
           "q0_pitch,q0_knee,q1_pitch,q1_knee,"
           "tau0_pitch,tau0_knee,tau1_pitch,tau1_knee,"
           "f0_t,f0_z,f1_t,f1_z\n";
  }

  PlanarState state = traj.task.start_state;
  std::array<Vec2, 2> feet = traj.stance_feet;
  std::array<Vec2, 2> landing_feet = {Vec2::Zero(), Vec2::Zero()};
  bool landing_pinned = false;

  const double horizon =
      opts.mode == RolloutMode::pd_tracking ? traj.t3 + opts.landing_settle : traj.t3;

  double t = 0.0;
  while (t < horizon - 1e-12) {
    // Steps never straddle a phase boundary.
    double t_next = t + opts.dt;
    for (double boundary : {traj.t1, traj.t2, traj.t3, horizon})
      if (t < boundary - 1e-12 && t_next > boundary) t_next = boundary;
    const double dt = t_next - t;

    std::array<JointTriple, 2> tau_cmd{};
    std::array<JointTriple, 2> q_now{};
    std::array<Vec2, 2> pair_force = {Vec2::Zero(), Vec2::Zero()};

    if (opts.mode == RolloutMode::open_loop_forces) {
      if (t >= traj.t2) {
        state = ballistic_map(state, dt, params);
      } else {
        const PlanarWrench w = traj.profile.eval(0.5 * (t + t_next));
        state = integrate_step(state, w, dt, params, traj.motion);
      }
    } else if (t >= traj.t3) {
      // Landing: feet pinned where flight ended, soft filtered PD toward the
      // landing configuration.
      if (!landing_pinned) {
        for (int pair = 0; pair < 2; ++pair) {
          const LinkPositions links = forward_kinematics(
              q_land, state, hip_anchor(static_cast<StancePair>(pair), params), params);
          landing_feet[pair] = Vec2(links.foot.x(), 0.0);
        }
        landing_pinned = true;
      }
      PlanarWrench w{};
      for (int pair = 0; pair < 2; ++pair) {
        const auto m = detail::measure_stance_leg(
            state, landing_feet[pair], hip_anchor(static_cast<StancePair>(pair), params), params);
        const JointTriple q_meas = {0.0, m.q.pitch, m.q.knee};
        const JointTriple qd_meas = {0.0, m.qd.x(), m.qd.y()};
        const JointTriple q_cmd =
            landing_filter(q_meas, {0.0, q_land.pitch, q_land.knee}, alpha);
        q_now[pair] = q_meas;
        tau_cmd[pair] = pd_command(q_meas, qd_meas, q_cmd, {}, {}, landing_gains,
                                   params.joint_torque_max);
        const Vec2 f_body =
            -detail::leg_force_from_torque(tau_cmd[pair], m.q, params);  // motor -> GRF
        Vec2 f_world = rot2(state.angle) * f_body;
        // Unilateral contact: a pinned landing foot cannot pull on the ground.
        if (f_world.y() < 0.0) f_world.setZero();
        pair_force[pair] = 2.0 * f_world;
        w.force_t += pair_force[pair].x();
        w.force_z += pair_force[pair].y();
        w.moment += cross2(landing_feet[pair] - Vec2(state.pos_t, state.pos_z), pair_force[pair]);
      }
      state = integrate_step(state, w, dt, params, traj.motion);
    } else if (t >= traj.t2) {
      // Flight: ballistic body, legs follow the reference exactly.
      state = ballistic_map(state, dt, params);
      const JointRefs ref = refs.at(std::min(t_next, traj.t3));
      q_now = ref.q;
    } else {
      const JointRefs ref = refs.at(t);
      PlanarWrench w{};
      for (int pair = 0; pair < 2; ++pair) {
        const bool loaded = t < traj.t1 || (traj.motion.has_two_feet_phase() && pair == push_pair);
        if (!loaded) {
          q_now[pair] = ref.q[pair];
          continue;
        }
        const auto m = detail::measure_stance_leg(
            state, feet[pair], hip_anchor(static_cast<StancePair>(pair), params), params);
        const JointTriple q_meas = {0.0, m.q.pitch, m.q.knee};
        const JointTriple qd_meas = {0.0, m.qd.x(), m.qd.y()};
        q_now[pair] = q_meas;
        tau_cmd[pair] = pd_command(q_meas, qd_meas, ref.q[pair], ref.qd[pair],
                                   detail::motor_torque(ref.tau[pair]), stance_gains,
                                   params.joint_torque_max);
        report.max_joint_error =
            std::max({report.max_joint_error, std::abs(ref.q[pair].pitch - q_meas.pitch),
                      std::abs(ref.q[pair].knee - q_meas.knee)});
        const Vec2 f_body =
            -detail::leg_force_from_torque(tau_cmd[pair], m.q, params);  // motor -> GRF
        const Vec2 f_world = rot2(state.angle) * f_body;
        pair_force[pair] = 2.0 * f_world;
        w.force_t += pair_force[pair].x();
        w.force_z += pair_force[pair].y();
        w.moment += cross2(feet[pair] - Vec2(state.pos_t, state.pos_z), pair_force[pair]);
      }
      state = integrate_step(state, w, dt, params, traj.motion);
    }

    t = t_next;

    if (!state.finite() || std::abs(state.pos_z) > 1e3) {
      report.diverged = true;
      break;
    }

    report.apex_z = std::max(report.apex_z, state.pos_z);
    for (int pair = 0; pair < 2; ++pair)
      report.max_tau_cmd = std::max({report.max_tau_cmd, std::abs(tau_cmd[pair].pitch),
                                     std::abs(tau_cmd[pair].knee)});
    if (t <= traj.t3 + 1e-12) {
      const PlanarState plan = analytic_state(traj.profile, traj.task.start_state, params,
                                              std::min(t, traj.t3));
      report.max_com_error =
          std::max({report.max_com_error, std::abs(plan.pos_t - state.pos_t),
                    std::abs(plan.pos_z - state.pos_z)});
    }

    if (csv.is_open()) {
      char line[512];
      std::snprintf(line, sizeof(line),
                    "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                    "%.9g,%.9g,%.9g,%.9g\n",
                    t, state.pos_t, state.pos_z, state.angle, state.vel_t, state.vel_z,
                    state.angvel, q_now[0].pitch, q_now[0].knee, q_now[1].pitch, q_now[1].knee,
                    tau_cmd[0].pitch, tau_cmd[0].knee, tau_cmd[1].pitch, tau_cmd[1].knee,
                    pair_force[0].x(), pair_force[0].y(), pair_force[1].x(), pair_force[1].y());
      csv << line;
    }
  }

  report.final_angle_error = std::abs(state.angle - traj.task.target_angle);
  report.final_pos_error = std::hypot(state.pos_t - traj.task.target_t,
                                      state.pos_z - traj.task.target_z);
  report.success = !report.diverged && report.max_tau_cmd <= params.joint_torque_max + 1e-9 &&
                   report.final_angle_error < 0.5;
  return report;
}

}  // namespace quadjump
