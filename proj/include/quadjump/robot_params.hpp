#pragma once

#include <array>
#include <cmath>

#include "quadjump/config.hpp"
#include "quadjump/errors.hpp"

namespace quadjump {

/// Rotation plane of a planar jumping motion, named by the body axis the
/// rotation is about.
enum class PlaneAxis { roll = 0, pitch = 1, yaw = 2 };

struct JointLimits {
  double min;
  double max;
};

/**
 * Physical constants of the robot and the hard limits used by the
 * constraint checks. Defaults are the Mini-Cheetah values: mass 10.4 kg,
 * inertia diag [0.07, 0.26, 0.242] kg·m², links [0.072, 0.211, 0.2] m,
 * friction 0.7, minimum vertical contact force 1 N, ground clearance 0.05 m,
 * joint torque bound 24 N·m.
 */
struct RobotParams {
  double mass = 10.4;                                    // kg
  std::array<double, 3> inertia_diag = {0.07, 0.26, 0.242};  // kg·m², (I_x, I_y, I_z)
  std::array<double, 3> link_lengths = {0.072, 0.211, 0.2};  // m, (L0 hip offset, L1 thigh, L2 shank)

  JointLimits hip_roll_limits = {-1.0, 1.0};    // rad
  JointLimits hip_pitch_limits = {-4.0, 4.0};   // rad
  JointLimits knee_limits = {-2.6, 2.6};        // rad
  double joint_vel_max = 40.0;     // rad/s
  double joint_torque_max = 24.0;  // N·m

  double friction_mu = 0.7;
  double fz_min = 1.0;            // N
  double z_min_clearance = 0.05;  // m
  double gravity = 9.81;          // m/s²

  /// Fore-aft distance from the CoM to each hip in the motion plane. Not a
  /// Table-I quantity; matches the stance width the planner assumes.
  double hip_offset = 0.19;  // m

  /// Workspace margin kept away from the straight-leg and folded-leg
  /// singularities by the inverse kinematics.
  double workspace_margin = 1e-3;  // m

  double thigh() const { return link_lengths[1]; }
  double shank() const { return link_lengths[2]; }
  double max_leg_reach() const { return thigh() + shank(); }
  double min_leg_reach() const { return std::abs(thigh() - shank()); }

  double inertia_about(PlaneAxis axis) const { return inertia_diag[static_cast<int>(axis)]; }

  void validate() const {
    if (!(mass > 0)) throw ConfigError("robot mass must be positive");
    for (double i : inertia_diag)
      if (!(i > 0)) throw ConfigError("robot inertia entries must be positive");
    for (double l : link_lengths)
      if (!(l > 0)) throw ConfigError("robot link lengths must be positive");
    for (const JointLimits* lim : {&hip_roll_limits, &hip_pitch_limits, &knee_limits})
      if (!(lim->min < lim->max)) throw ConfigError("joint angle min must be below max");
    if (!(joint_vel_max > 0)) throw ConfigError("joint velocity limit must be positive");
    if (!(joint_torque_max > 0)) throw ConfigError("joint torque limit must be positive");
    if (!(friction_mu > 0)) throw ConfigError("friction coefficient must be positive");
    if (!(fz_min >= 0)) throw ConfigError("fz_min must be non-negative");
    if (!(gravity > 0)) throw ConfigError("gravity must be positive");
    if (!(hip_offset > 0)) throw ConfigError("hip offset must be positive");
  }

  static RobotParams from_config(const KeyValueConfig& cfg) {
    RobotParams p;
    p.mass = cfg.get_double("robot.mass", p.mass);
    p.inertia_diag[0] = cfg.get_double("robot.inertia_x", p.inertia_diag[0]);
    p.inertia_diag[1] = cfg.get_double("robot.inertia_y", p.inertia_diag[1]);
    p.inertia_diag[2] = cfg.get_double("robot.inertia_z", p.inertia_diag[2]);
    p.link_lengths[0] = cfg.get_double("robot.link_l0", p.link_lengths[0]);
    p.link_lengths[1] = cfg.get_double("robot.link_l1", p.link_lengths[1]);
    p.link_lengths[2] = cfg.get_double("robot.link_l2", p.link_lengths[2]);
    p.hip_roll_limits.min = cfg.get_double("robot.hip_roll_min", p.hip_roll_limits.min);
    p.hip_roll_limits.max = cfg.get_double("robot.hip_roll_max", p.hip_roll_limits.max);
    p.hip_pitch_limits.min = cfg.get_double("robot.hip_pitch_min", p.hip_pitch_limits.min);
    p.hip_pitch_limits.max = cfg.get_double("robot.hip_pitch_max", p.hip_pitch_limits.max);
    p.knee_limits.min = cfg.get_double("robot.knee_min", p.knee_limits.min);
    p.knee_limits.max = cfg.get_double("robot.knee_max", p.knee_limits.max);
    p.joint_vel_max = cfg.get_double("robot.joint_vel_max", p.joint_vel_max);
    p.joint_torque_max = cfg.get_double("robot.joint_torque_max", p.joint_torque_max);
    p.friction_mu = cfg.get_double("robot.friction_mu", p.friction_mu);
    p.fz_min = cfg.get_double("robot.fz_min", p.fz_min);
    p.z_min_clearance = cfg.get_double("robot.z_min_clearance", p.z_min_clearance);
    p.gravity = cfg.get_double("robot.gravity", p.gravity);
    p.hip_offset = cfg.get_double("robot.hip_offset", p.hip_offset);
    p.validate();
    return p;
  }

  void to_config(KeyValueConfig& cfg) const {
    cfg.set("robot.mass", mass);
    cfg.set("robot.inertia_x", inertia_diag[0]);
    cfg.set("robot.inertia_y", inertia_diag[1]);
    cfg.set("robot.inertia_z", inertia_diag[2]);
    cfg.set("robot.link_l0", link_lengths[0]);
    cfg.set("robot.link_l1", link_lengths[1]);
    cfg.set("robot.link_l2", link_lengths[2]);
    cfg.set("robot.hip_roll_min", hip_roll_limits.min);
    cfg.set("robot.hip_roll_max", hip_roll_limits.max);
    cfg.set("robot.hip_pitch_min", hip_pitch_limits.min);
    cfg.set("robot.hip_pitch_max", hip_pitch_limits.max);
    cfg.set("robot.knee_min", knee_limits.min);
    cfg.set("robot.knee_max", knee_limits.max);
    cfg.set("robot.joint_vel_max", joint_vel_max);
    cfg.set("robot.joint_torque_max", joint_torque_max);
    cfg.set("robot.friction_mu", friction_mu);
    cfg.set("robot.fz_min", fz_min);
    cfg.set("robot.z_min_clearance", z_min_clearance);
    cfg.set("robot.gravity", gravity);
    cfg.set("robot.hip_offset", hip_offset);
  }
};

}  // namespace quadjump
