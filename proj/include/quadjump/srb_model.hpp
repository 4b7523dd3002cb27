#pragma once

#include <cmath>
#include <string>

#include "quadjump/errors.hpp"
#include "quadjump/robot_params.hpp"

namespace quadjump {

/// Reduced planar state of the single rigid body: in-plane translation,
/// height, rotation in the motion plane, and their rates. The rotation angle
/// is measured counterclockwise in the (t, z) plane.
struct PlanarState {
  double pos_t = 0.0;   // m
  double pos_z = 0.0;   // m
  double angle = 0.0;   // rad
  double vel_t = 0.0;   // m/s
  double vel_z = 0.0;   // m/s
  double angvel = 0.0;  // rad/s

  bool finite() const {
    return std::isfinite(pos_t) && std::isfinite(pos_z) && std::isfinite(angle) &&
           std::isfinite(vel_t) && std::isfinite(vel_z) && std::isfinite(angvel);
  }
};

/// Net planar wrench at the CoM: in-plane force, vertical force, and the
/// moment about the motion plane's rotation axis.
struct PlanarWrench {
  double force_t = 0.0;  // N
  double force_z = 0.0;  // N
  double moment = 0.0;   // N·m

  bool finite() const {
    return std::isfinite(force_t) && std::isfinite(force_z) && std::isfinite(moment);
  }
};

struct PlanarAccel {
  double lin_t = 0.0;  // m/s²
  double lin_z = 0.0;  // m/s²
  double ang = 0.0;    // rad/s²
};

enum class MotionKind {
  front,
  rear,
  left,
  right,
  yaw_spin,
  front_flip,
  back_flip,
  left_flip,
  right_flip,
};

/// Stance schedule family. Directional jumps and flips go four-feet →
/// two-feet → flight; the yaw spin lifts all four feet at once.
enum class ContactPattern { four_two_flight, four_flight };

struct MotionType {
  MotionKind kind = MotionKind::front;
  PlaneAxis plane_axis = PlaneAxis::pitch;
  ContactPattern contact_pattern = ContactPattern::four_two_flight;

  static MotionType make(MotionKind kind) {
    MotionType m;
    m.kind = kind;
    switch (kind) {
      case MotionKind::front:
      case MotionKind::rear:
      case MotionKind::front_flip:
      case MotionKind::back_flip:
        m.plane_axis = PlaneAxis::pitch;
        break;
      case MotionKind::left:
      case MotionKind::right:
      case MotionKind::left_flip:
      case MotionKind::right_flip:
        m.plane_axis = PlaneAxis::roll;
        break;
      case MotionKind::yaw_spin:
        m.plane_axis = PlaneAxis::yaw;
        break;
    }
    m.contact_pattern = (kind == MotionKind::yaw_spin) ? ContactPattern::four_flight
                                                       : ContactPattern::four_two_flight;
    return m;
  }

  bool is_flip() const {
    return kind == MotionKind::front_flip || kind == MotionKind::back_flip ||
           kind == MotionKind::left_flip || kind == MotionKind::right_flip;
  }

  bool has_two_feet_phase() const { return contact_pattern == ContactPattern::four_two_flight; }

  /// The yaw spin keeps in-plane translation pinned at zero; the matching
  /// force component is masked out of the wrench parameterization.
  bool masks_translation() const { return kind == MotionKind::yaw_spin; }
};

inline const char* to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::front: return "front";
    case MotionKind::rear: return "rear";
    case MotionKind::left: return "left";
    case MotionKind::right: return "right";
    case MotionKind::yaw_spin: return "yaw_spin";
    case MotionKind::front_flip: return "front_flip";
    case MotionKind::back_flip: return "back_flip";
    case MotionKind::left_flip: return "left_flip";
    case MotionKind::right_flip: return "right_flip";
  }
  return "unknown";
}

inline MotionKind motion_kind_from_string(const std::string& name) {
  for (MotionKind k : {MotionKind::front, MotionKind::rear, MotionKind::left, MotionKind::right,
                       MotionKind::yaw_spin, MotionKind::front_flip, MotionKind::back_flip,
                       MotionKind::left_flip, MotionKind::right_flip}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown motion kind: " + name);
}

/// CoM acceleration under a planar wrench: force over mass, gravity on the
/// vertical channel, moment over the inertia entry of the motion plane.
inline PlanarAccel planar_accel(const PlanarWrench& w, const RobotParams& params,
                                const MotionType& motion) {
  if (!w.finite()) throw InputError("planar_accel: non-finite wrench");
  PlanarAccel a;
  a.lin_t = motion.masks_translation() ? 0.0 : w.force_t / params.mass;
  a.lin_z = w.force_z / params.mass - params.gravity;
  a.ang = w.moment / params.inertia_about(motion.plane_axis);
  return a;
}

enum class Integrator { semi_implicit, explicit_euler };

/// One fixed-step integration of the planar dynamics. The default updates
/// rates first and then positions with the new rates; the explicit variant
/// uses the old rates for the position update.
inline PlanarState integrate_step(const PlanarState& s, const PlanarWrench& w, double dt,
                                  const RobotParams& params, const MotionType& motion,
                                  Integrator scheme = Integrator::semi_implicit) {
  if (!(dt >= 0.0)) throw InputError("integrate_step: dt must be non-negative");
  if (dt == 0.0) return s;
  const PlanarAccel a = planar_accel(w, params, motion);
  PlanarState out = s;
  if (scheme == Integrator::semi_implicit) {
    out.vel_t += a.lin_t * dt;
    out.vel_z += a.lin_z * dt;
    out.angvel += a.ang * dt;
    out.pos_t += out.vel_t * dt;
    out.pos_z += out.vel_z * dt;
    out.angle += out.angvel * dt;
  } else {
    out.pos_t += s.vel_t * dt;
    out.pos_z += s.vel_z * dt;
    out.angle += s.angvel * dt;
    out.vel_t += a.lin_t * dt;
    out.vel_z += a.lin_z * dt;
    out.angvel += a.ang * dt;
  }
  return out;
}

/// Closed-form flight propagation: constant angular velocity, parabolic
/// height, straight-line in-plane translation.
inline PlanarState ballistic_map(const PlanarState& s, double t_flight, const RobotParams& params) {
  if (!(t_flight >= 0.0)) throw RangeError("ballistic_map: negative flight time");
  PlanarState out = s;
  out.pos_t += s.vel_t * t_flight;
  out.pos_z += s.vel_z * t_flight - 0.5 * params.gravity * t_flight * t_flight;
  out.angle += s.angvel * t_flight;
  out.vel_z -= params.gravity * t_flight;
  return out;
}

/// Exact inverse of ballistic_map: the liftoff state that lands on `target`
/// after `t_flight` seconds of free flight.
inline PlanarState inverse_ballistic(const PlanarState& target, double t_flight,
                                     const RobotParams& params) {
  if (!(t_flight >= 0.0)) throw RangeError("inverse_ballistic: negative flight time");
  PlanarState out = target;
  out.vel_z = target.vel_z + params.gravity * t_flight;
  out.pos_t = target.pos_t - target.vel_t * t_flight;
  out.pos_z = target.pos_z - out.vel_z * t_flight + 0.5 * params.gravity * t_flight * t_flight;
  out.angle = target.angle - target.angvel * t_flight;
  return out;
}

}  // namespace quadjump
