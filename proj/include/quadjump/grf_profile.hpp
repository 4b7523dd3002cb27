#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "quadjump/errors.hpp"
#include "quadjump/leg_kinematics.hpp"
#include "quadjump/robot_params.hpp"
#include "quadjump/srb_model.hpp"
#include "quadjump/task.hpp"

namespace quadjump {

/// The twelve free optimization variables: cumulative phase end times, the
/// full planar state at the end of the four-feet phase, and the body rates at
/// the end of flight (the terminal pose itself comes from the task).
struct DesignVector {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  PlanarState mid_state;
  double term_vel_t = 0.0;
  double term_vel_z = 0.0;
  double term_angvel = 0.0;

  std::array<double, 12> flat() const {
    return {t1,
            t2,
            t3,
            mid_state.pos_t,
            mid_state.pos_z,
            mid_state.angle,
            mid_state.vel_t,
            mid_state.vel_z,
            mid_state.angvel,
            term_vel_t,
            term_vel_z,
            term_angvel};
  }

  static DesignVector from_flat(const std::array<double, 12>& v) {
    DesignVector d;
    d.t1 = v[0];
    d.t2 = v[1];
    d.t3 = v[2];
    d.mid_state = {v[3], v[4], v[5], v[6], v[7], v[8]};
    d.term_vel_t = v[9];
    d.term_vel_z = v[10];
    d.term_angvel = v[11];
    return d;
  }
};

namespace detail {
struct LinearPoly {
  double a = 0.0, b = 0.0;  // a*t + b
  double eval(double t) const { return a * t + b; }
};
struct QuadPoly {
  double c = 0.0, d = 0.0, e = 0.0;  // c*s^2 + d*s + e, s local to the phase
  double eval(double s) const { return (c * s + d) * s + e; }
};
}  // namespace detail

/// Phase-wise polynomial planar wrench: linear on [0, T1], quadratic on
/// [T1, T2] with the constant terms pinned by continuity at T1, identically
/// zero on [T2, T3]. Components are ordered (force_t, force_z, moment).
struct WrenchProfile {
  std::array<detail::LinearPoly, 3> phase1;
  std::array<detail::QuadPoly, 3> phase2;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  MotionType motion;

  PlanarWrench eval(double t) const {
    if (!(t >= 0.0) || !(t <= t3)) throw RangeError("eval_wrench: time outside [0, T3]");
    if (t >= t2) return PlanarWrench{};
    if (t <= t1) return PlanarWrench{phase1[0].eval(t), phase1[1].eval(t), phase1[2].eval(t)};
    const double s = t - t1;
    return PlanarWrench{phase2[0].eval(s), phase2[1].eval(s), phase2[2].eval(s)};
  }
};

inline PlanarWrench eval_wrench(const WrenchProfile& p, double t) { return p.eval(t); }

namespace detail {

struct ComponentSpec {
  double inertia;  // mass for forces, plane inertia for the moment
  double bias;     // constant acceleration offset (gravity on the z channel)
};

inline std::array<ComponentSpec, 3> component_specs(const RobotParams& params,
                                                    const MotionType& motion) {
  return {{{params.mass, 0.0},
           {params.mass, -params.gravity},
           {params.inertia_about(motion.plane_axis), 0.0}}};
}

inline double component_pos(const PlanarState& s, int k) {
  return k == 0 ? s.pos_t : (k == 1 ? s.pos_z : s.angle);
}
inline double component_vel(const PlanarState& s, int k) {
  return k == 0 ? s.vel_t : (k == 1 ? s.vel_z : s.angvel);
}
inline void set_component(PlanarState& s, int k, double pos, double vel) {
  switch (k) {
    case 0: s.pos_t = pos; s.vel_t = vel; break;
    case 1: s.pos_z = pos; s.vel_z = vel; break;
    default: s.angle = pos; s.angvel = vel; break;
  }
}

}  // namespace detail

/// The state the body must reach at liftoff (T2) so that free flight ends on
/// the task target with the design vector's terminal rates.
inline PlanarState liftoff_state(const DesignVector& d, const JumpTask& task,
                                 const RobotParams& params) {
  const double vel_t = task.motion.masks_translation() ? 0.0 : d.term_vel_t;
  const PlanarState terminal = task.terminal_state(vel_t, d.term_vel_z, d.term_angvel);
  return inverse_ballistic(terminal, d.t3 - d.t2, params);
}

/// The state targeted at the end of the four-feet phase. For the yaw spin the
/// design vector's mid-state slots are inert and the liftoff state is used
/// directly (T1 = T2, no two-feet phase).
inline PlanarState effective_mid_state(const DesignVector& d, const JumpTask& task,
                                       const RobotParams& params) {
  if (!task.motion.has_two_feet_phase()) return liftoff_state(d, task, params);
  return d.mid_state;
}

/// Solves the twelve polynomial coefficients from the boundary conditions:
/// the state at T1 must equal the design mid-state and the state at T2 must
/// equal the inverse-ballistic image of the terminal conditions. Decouples
/// into independent 2x2 linear systems per phase and wrench component.
inline WrenchProfile solve_coefficients(const DesignVector& d, const JumpTask& task,
                                        const RobotParams& params) {
  const MotionType& motion = task.motion;
  const bool two_feet = motion.has_two_feet_phase();
  const double t1 = d.t1, t2 = two_feet ? d.t2 : d.t1, t3 = d.t3;
  if (!(t1 > 0.0)) throw SolveError("solve_coefficients: T1 must be positive");
  if (two_feet && !(t2 > t1)) throw SolveError("solve_coefficients: T2 must exceed T1");
  if (!(t3 >= t2)) throw SolveError("solve_coefficients: T3 must be at least T2");

  WrenchProfile profile;
  profile.t1 = t1;
  profile.t2 = t2;
  profile.t3 = t3;
  profile.motion = motion;

  const PlanarState mid = effective_mid_state(d, task, params);
  const PlanarState lift = liftoff_state(d, task, params);
  const auto specs = detail::component_specs(params, motion);

  for (int k = 0; k < 3; ++k) {
    if (k == 0 && motion.masks_translation()) continue;  // pinned at zero
    const double m = specs[k].inertia;
    const double bias = specs[k].bias;
    const double p0 = detail::component_pos(task.start_state, k);
    const double v0 = detail::component_vel(task.start_state, k);
    const double p1 = detail::component_pos(mid, k);
    const double v1 = detail::component_vel(mid, k);

    // Phase 1: force a*t + b, conditions on velocity and position at T1.
    {
      const double c1 = m * (v1 - v0 - bias * t1);
      const double c2 = m * (p1 - p0 - v0 * t1 - 0.5 * bias * t1 * t1);
      const double A = 0.5 * t1 * t1, B = t1;
      const double C = t1 * t1 * t1 / 6.0, D = 0.5 * t1 * t1;
      const double det = A * D - B * C;
      profile.phase1[k].a = (c1 * D - c2 * B) / det;
      profile.phase1[k].b = (A * c2 - C * c1) / det;
    }

    // Phase 2: force c*s^2 + d*s + e with e pinned by continuity at T1,
    // conditions on velocity and position at T2.
    if (two_feet) {
      const double S = t2 - t1;
      const double e = profile.phase1[k].eval(t1);
      const double p2 = detail::component_pos(lift, k);
      const double v2 = detail::component_vel(lift, k);
      const double rv = m * (v2 - v1 - bias * S) - e * S;
      const double rp = m * (p2 - p1 - v1 * S - 0.5 * bias * S * S) - 0.5 * e * S * S;
      const double A = S * S * S / 3.0, B = 0.5 * S * S;
      const double C = S * S * S * S / 12.0, D = S * S * S / 6.0;
      const double det = A * D - B * C;
      profile.phase2[k].c = (rv * D - rp * B) / det;
      profile.phase2[k].d = (A * rp - C * rv) / det;
      profile.phase2[k].e = e;
    } else {
      profile.phase2[k].e = profile.phase1[k].eval(t1);
    }

    if (!std::isfinite(profile.phase1[k].a) || !std::isfinite(profile.phase1[k].b) ||
        !std::isfinite(profile.phase2[k].c) || !std::isfinite(profile.phase2[k].d))
      throw SolveError("solve_coefficients: non-finite coefficients");
  }
  return profile;
}

/// Closed-form body state under a wrench profile at time t, obtained by
/// analytic double integration of the phase polynomials and the ballistic
/// flight map. Exact up to floating-point rounding.
inline PlanarState analytic_state(const WrenchProfile& profile, const PlanarState& start,
                                  const RobotParams& params, double t) {
  if (!(t >= 0.0) || !(t <= profile.t3)) throw RangeError("analytic_state: time outside [0, T3]");
  const auto specs = detail::component_specs(params, profile.motion);

  auto phase1_at = [&](double tau) {
    PlanarState out = start;
    for (int k = 0; k < 3; ++k) {
      const double m = specs[k].inertia, bias = specs[k].bias;
      const double a = profile.phase1[k].a, b = profile.phase1[k].b;
      const double p0 = detail::component_pos(start, k), v0 = detail::component_vel(start, k);
      const double vel = v0 + (0.5 * a * tau * tau + b * tau) / m + bias * tau;
      const double pos = p0 + v0 * tau + (a * tau * tau * tau / 6.0 + 0.5 * b * tau * tau) / m +
                         0.5 * bias * tau * tau;
      detail::set_component(out, k, pos, vel);
    }
    return out;
  };

  if (t <= profile.t1) return phase1_at(t);

  const PlanarState mid = phase1_at(profile.t1);
  auto phase2_at = [&](double s) {
    PlanarState out = mid;
    for (int k = 0; k < 3; ++k) {
      const double m = specs[k].inertia, bias = specs[k].bias;
      const double c = profile.phase2[k].c, dd = profile.phase2[k].d, e = profile.phase2[k].e;
      const double p1 = detail::component_pos(mid, k), v1 = detail::component_vel(mid, k);
      const double vel = v1 + (c * s * s * s / 3.0 + 0.5 * dd * s * s + e * s) / m + bias * s;
      const double pos = p1 + v1 * s +
                         (c * s * s * s * s / 12.0 + dd * s * s * s / 6.0 + 0.5 * e * s * s) / m +
                         0.5 * bias * s * s;
      detail::set_component(out, k, pos, vel);
    }
    return out;
  };

  if (t <= profile.t2) return phase2_at(t - profile.t1);
  const PlanarState lift = phase2_at(profile.t2 - profile.t1);
  return ballistic_map(lift, t - profile.t2, params);
}

enum class ContactStance { four_feet, two_feet };

/// Per-pair ground reaction forces recovered from the net wrench.
struct FootForces {
  std::array<Vec2, 2> force = {Vec2::Zero(), Vec2::Zero()};    // N, world frame
  std::array<Vec2, 2> contact = {Vec2::Zero(), Vec2::Zero()};  // m, world frame
  std::array<bool, 2> active = {false, false};
  /// Two-feet phase: |parameterized moment - moment producible by the stance
  /// pair force|. Zero in the four-feet phase.
  double residual = 0.0;
};

/// Splits the net wrench over the stance pairs. Four-feet phase: least-norm
/// solution of the 3-equation/4-unknown system. Two-feet phase: the single
/// active pair carries the whole force and the moment mismatch is reported as
/// the realizability residual. The yaw spin splits the vertical force evenly;
/// its moment is about an axis the planar cross product cannot see.
inline FootForces distribute_forces(const PlanarWrench& w, const PlanarState& com,
                                    const std::array<Vec2, 2>& feet, ContactStance stance,
                                    const MotionType& motion,
                                    StancePair active_pair = StancePair::rear) {
  FootForces out;
  out.contact = feet;
  if (stance == ContactStance::two_feet) {
    const int p = static_cast<int>(active_pair);
    out.active[p] = true;
    out.force[p] = Vec2(w.force_t, w.force_z);
    const Vec2 arm = feet[p] - Vec2(com.pos_t, com.pos_z);
    out.residual = std::abs(w.moment - cross2(arm, out.force[p]));
    return out;
  }

  out.active = {true, true};
  if (motion.plane_axis == PlaneAxis::yaw) {
    out.force[0] = Vec2(0.0, 0.5 * w.force_z);
    out.force[1] = Vec2(0.0, 0.5 * w.force_z);
    return out;
  }

  if ((feet[0] - feet[1]).norm() < 1e-9)
    throw GeometryError("distribute_forces: coincident contact points");

  const Vec2 d0 = feet[0] - Vec2(com.pos_t, com.pos_z);
  const Vec2 d1 = feet[1] - Vec2(com.pos_t, com.pos_z);
  Eigen::Matrix<double, 3, 4> a;
  a << 1, 0, 1, 0,
       0, 1, 0, 1,
       -d0.y(), d0.x(), -d1.y(), d1.x();
  const Eigen::Vector3d rhs(w.force_t, w.force_z, w.moment);
  const Eigen::Matrix3d gram = a * a.transpose();
  const Eigen::Vector4d f = a.transpose() * gram.ldlt().solve(rhs);
  out.force[0] = Vec2(f[0], f[1]);
  out.force[1] = Vec2(f[2], f[3]);
  return out;
}

}  // namespace quadjump
