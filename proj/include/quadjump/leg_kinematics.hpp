#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "quadjump/errors.hpp"
#include "quadjump/robot_params.hpp"
#include "quadjump/srb_model.hpp"

namespace quadjump {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// 2D cross product in the (t, z) plane; the sign convention of the planar
/// moment throughout the library.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Mat2 rot2(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Hip-pitch and knee angles of the planar two-link leg. Zero angles point
/// the leg straight down in the body frame; positive knee bends the shank
/// toward +t (knee-backward branch).
struct LegAngles {
  double pitch = 0.0;
  double knee = 0.0;
};

struct IkSolution {
  LegAngles q;
  /// How far outside the reachable annulus the requested foot point was, in
  /// meters; zero when the target is reachable. The returned angles are for
  /// the target radially clamped into the workspace.
  double reach_deficit = 0.0;
};

/// Per-leg link positions in world coordinates.
struct LinkPositions {
  Vec2 hip;
  Vec2 knee;
  Vec2 foot;
};

namespace detail {
inline Vec2 link_dir(double angle) { return Vec2(std::sin(angle), -std::cos(angle)); }
}  // namespace detail

/// Foot position relative to the hip, body frame.
inline Vec2 foot_rel_hip(const LegAngles& q, const RobotParams& params) {
  return params.thigh() * detail::link_dir(q.pitch) +
         params.shank() * detail::link_dir(q.pitch + q.knee);
}

/// Two-link IK on the knee-backward branch; never throws. Unreachable
/// targets are clamped to the workspace boundary and the radial deficit is
/// reported so callers can penalize instead of aborting.
inline IkSolution try_inverse_kinematics(const Vec2& foot, const RobotParams& params) {
  const double l1 = params.thigh(), l2 = params.shank();
  const double r_max = params.max_leg_reach() - params.workspace_margin;
  const double r_min = params.min_leg_reach() + params.workspace_margin;
  const double r = foot.norm();

  IkSolution sol;
  double r_used = r;
  if (r > r_max) {
    sol.reach_deficit = r - r_max;
    r_used = r_max;
  } else if (r < r_min) {
    sol.reach_deficit = r_min - r;
    r_used = r_min;
  }

  const double cos_knee =
      std::clamp((r_used * r_used - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  sol.q.knee = std::acos(cos_knee);

  // Direction of the (possibly clamped) foot point, measured from straight
  // down; degenerate at r == 0 which the clamp above excludes.
  const double heading = std::atan2(foot.x(), -foot.y());
  sol.q.pitch = heading - std::atan2(l2 * std::sin(sol.q.knee), l1 + l2 * cos_knee);
  return sol;
}

/// Strict IK: throws RangeError when the target is outside the workspace.
inline LegAngles inverse_kinematics(const Vec2& foot, const RobotParams& params) {
  IkSolution sol = try_inverse_kinematics(foot, params);
  if (sol.reach_deficit > 0.0) throw RangeError("inverse_kinematics: target out of workspace");
  return sol.q;
}

/// World positions of hip, knee, and foot for one leg. `hip_anchor_body` is
/// the hip attachment point in the body frame (relative to the CoM).
inline LinkPositions forward_kinematics(const LegAngles& q, const PlanarState& body,
                                        const Vec2& hip_anchor_body, const RobotParams& params) {
  const Mat2 r = rot2(body.angle);
  const Vec2 com(body.pos_t, body.pos_z);
  LinkPositions links;
  links.hip = com + r * hip_anchor_body;
  const Vec2 knee_body = hip_anchor_body + params.thigh() * detail::link_dir(q.pitch);
  links.knee = com + r * knee_body;
  const Vec2 foot_body = knee_body + params.shank() * detail::link_dir(q.pitch + q.knee);
  links.foot = com + r * foot_body;
  return links;
}

/// Jacobian of the body-frame foot position w.r.t. (pitch, knee).
inline Mat2 leg_jacobian(const LegAngles& q, const RobotParams& params) {
  const double l1 = params.thigh(), l2 = params.shank();
  const double c1 = std::cos(q.pitch), s1 = std::sin(q.pitch);
  const double c12 = std::cos(q.pitch + q.knee), s12 = std::sin(q.pitch + q.knee);
  Mat2 j;
  j << l1 * c1 + l2 * c12, l2 * c12,
       l1 * s1 + l2 * s12, l2 * s12;
  return j;
}

inline double jacobian_determinant(const LegAngles& q, const RobotParams& params) {
  return params.thigh() * params.shank() * std::sin(q.knee);
}

/// Joint torques that realize a ground reaction force `f_body` (force exerted
/// by the ground on the foot, body frame): tau = J^T f.
inline Vec2 joint_torques(const Vec2& f_body, const LegAngles& q, const RobotParams& params) {
  return leg_jacobian(q, params).transpose() * f_body;
}

/// Joint rates that keep a stance foot pinned in the world while the body
/// moves. `foot_rel_com_body` is the foot position relative to the CoM in the
/// body frame.
inline Vec2 joint_velocities(const Vec2& com_vel, double angvel, double body_angle,
                             const Vec2& foot_rel_com_body, const LegAngles& q,
                             const RobotParams& params) {
  const Mat2 j = leg_jacobian(q, params);
  const double det = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
  if (std::abs(det) < 1e-9) throw SingularityError("joint_velocities: singular leg Jacobian");
  const Vec2 spin(-foot_rel_com_body.y(), foot_rel_com_body.x());  // S * p
  const Vec2 rhs = -(rot2(-body_angle) * com_vel + angvel * spin);
  Vec2 qdot;
  qdot.x() = (rhs.x() * j(1, 1) - rhs.y() * j(0, 1)) / det;
  qdot.y() = (rhs.y() * j(0, 0) - rhs.x() * j(1, 0)) / det;
  return qdot;
}

/// Quintic 0→1 blend with zero velocity and acceleration at both ends.
inline double quintic_scale(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

/// Time derivative of quintic_scale w.r.t. u.
inline double quintic_scale_rate(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return 30.0 * u * u * (1.0 + u * (-2.0 + u));
}

}  // namespace quadjump
