#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "quadjump/config.hpp"
#include "quadjump/errors.hpp"
#include "quadjump/leg_kinematics.hpp"
#include "quadjump/robot_params.hpp"
#include "quadjump/srb_model.hpp"

namespace quadjump {

/// Obstacle geometry: a ground obstacle topping out at `ground_top_z` and an
/// aerial obstacle bottoming out at `aerial_bottom_z`, both located where the
/// motion coordinate equals `crossing_coord`. Joint trajectories must pass
/// through the window between the two, shrunk by `expansion_margin` on each
/// side.
struct ObstacleSpec {
  double crossing_coord = 0.0;   // m, along the motion direction
  double ground_top_z = 0.0;     // m (O_bz)
  double aerial_bottom_z = 1.0;  // m (O_az)
  double expansion_margin = 0.0; // m

  void validate() const {
    if (!(aerial_bottom_z > ground_top_z))
      throw ConfigError("obstacle: aerial_bottom_z must exceed ground_top_z");
    if (!(expansion_margin >= 0)) throw ConfigError("obstacle: margin must be non-negative");
  }

  double window_low() const { return ground_top_z + expansion_margin; }
  double window_high() const { return aerial_bottom_z - expansion_margin; }
};

/// Which leg pair keeps ground contact during the two-feet phase, named in
/// plane coordinates (+t side is "front").
enum class StancePair { front = 0, rear = 1 };

/// One jumping problem: motion type, start state, target planar pose at the
/// end of flight, and optional obstacle.
struct JumpTask {
  MotionType motion = MotionType::make(MotionKind::front);
  PlanarState start_state = {0.0, 0.2, 0.0, 0.0, 0.0, 0.0};
  double target_t = 0.3;      // m
  double target_z = 0.2;      // m
  double target_angle = 0.0;  // rad
  std::optional<ObstacleSpec> obstacle;
  /// Distance between hip and foot in the leg's landing configuration; the
  /// flight-phase joint interpolation ends here. Defaults to target_z so the
  /// feet meet the ground as flight ends; obstacle tasks usually tuck.
  std::optional<double> landing_depth;

  double landing_leg_depth(const RobotParams& params) const {
    const double raw = landing_depth.value_or(target_z);
    return std::clamp(raw, params.min_leg_reach() + 2.0 * params.workspace_margin,
                      params.max_leg_reach() - 2.0 * params.workspace_margin);
  }

  /// Full planar state at the end of flight, given the free terminal rates.
  PlanarState terminal_state(double vel_t, double vel_z, double angvel) const {
    return {target_t, target_z, target_angle, vel_t, vel_z, angvel};
  }

  /// The pair that pushes alone in the two-feet phase: the trailing side for
  /// directional jumps, the side the flip rotates over for flips.
  StancePair two_feet_stance() const {
    if (motion.is_flip()) return target_angle >= 0.0 ? StancePair::front : StancePair::rear;
    return target_t >= start_state.pos_t ? StancePair::rear : StancePair::front;
  }

  void validate(const RobotParams& params) const {
    if (!start_state.finite()) throw ConfigError("task: non-finite start state");
    if (!(start_state.pos_z > 0)) throw ConfigError("task: start height must be positive");
    if (!std::isfinite(target_t) || !std::isfinite(target_z) || !std::isfinite(target_angle))
      throw ConfigError("task: non-finite target");
    if (!(target_z > 0)) throw ConfigError("task: target height must be positive");
    if (motion.is_flip() && std::abs(std::abs(target_angle) - 2.0 * M_PI) > 1e-9)
      throw ConfigError("task: flip tasks require |target angle| = 2*pi");
    if (motion.masks_translation() &&
        (std::abs(target_t - start_state.pos_t) > 1e-9 || std::abs(start_state.vel_t) > 1e-9))
      throw ConfigError("task: yaw spin keeps in-plane translation fixed");
    if (obstacle) obstacle->validate();
    (void)params;
  }

  static JumpTask from_config(const KeyValueConfig& cfg) {
    JumpTask t;
    t.motion = MotionType::make(motion_kind_from_string(cfg.get_string("task.motion", "front")));
    t.start_state.pos_t = cfg.get_double("task.start_t", t.start_state.pos_t);
    t.start_state.pos_z = cfg.get_double("task.start_z", t.start_state.pos_z);
    t.start_state.angle = cfg.get_double("task.start_angle", t.start_state.angle);
    t.target_t = cfg.get_double("task.target_t", t.start_state.pos_t + (t.motion.masks_translation() ? 0.0 : 0.3));
    t.target_z = cfg.get_double("task.target_z", t.start_state.pos_z);
    double default_angle = 0.0;
    if (t.motion.kind == MotionKind::back_flip || t.motion.kind == MotionKind::right_flip)
      default_angle = -2.0 * M_PI;
    else if (t.motion.is_flip())
      default_angle = 2.0 * M_PI;
    t.target_angle = cfg.get_double("task.target_angle", default_angle);
    if (cfg.get_bool("task.obstacle", false)) {
      ObstacleSpec obs;
      obs.crossing_coord = cfg.get_double("task.obstacle_crossing", 0.15);
      obs.ground_top_z = cfg.get_double("task.obstacle_ground_top", 0.05);
      obs.aerial_bottom_z = cfg.get_double("task.obstacle_aerial_bottom", 1.0);
      obs.expansion_margin = cfg.get_double("task.obstacle_margin", 0.0);
      t.obstacle = obs;
    }
    if (cfg.has("task.landing_depth")) t.landing_depth = cfg.get_double("task.landing_depth", 0.0);
    return t;
  }

  void to_config(KeyValueConfig& cfg) const {
    cfg.set("task.motion", std::string(to_string(motion.kind)));
    cfg.set("task.start_t", start_state.pos_t);
    cfg.set("task.start_z", start_state.pos_z);
    cfg.set("task.start_angle", start_state.angle);
    cfg.set("task.target_t", target_t);
    cfg.set("task.target_z", target_z);
    cfg.set("task.target_angle", target_angle);
    cfg.set("task.obstacle", std::string(obstacle ? "true" : "false"));
    if (obstacle) {
      cfg.set("task.obstacle_crossing", obstacle->crossing_coord);
      cfg.set("task.obstacle_ground_top", obstacle->ground_top_z);
      cfg.set("task.obstacle_aerial_bottom", obstacle->aerial_bottom_z);
      cfg.set("task.obstacle_margin", obstacle->expansion_margin);
    }
    if (landing_depth) cfg.set("task.landing_depth", *landing_depth);
  }
};

/// Body-frame hip anchor of a pair: front pair at +hip_offset, rear at
/// -hip_offset, at CoM height.
inline Vec2 hip_anchor(StancePair pair, const RobotParams& params) {
  return Vec2(pair == StancePair::front ? params.hip_offset : -params.hip_offset, 0.0);
}

/// World stance-foot positions held fixed through the contact phases:
/// directly on the ground under each hip of the start posture.
inline std::array<Vec2, 2> initial_foot_positions(const JumpTask& task, const RobotParams& params) {
  std::array<Vec2, 2> feet;
  const Mat2 r = rot2(task.start_state.angle);
  const Vec2 com(task.start_state.pos_t, task.start_state.pos_z);
  for (int i = 0; i < 2; ++i) {
    const Vec2 hip = com + r * hip_anchor(static_cast<StancePair>(i), params);
    feet[i] = Vec2(hip.x(), 0.0);
  }
  return feet;
}

}  // namespace quadjump
