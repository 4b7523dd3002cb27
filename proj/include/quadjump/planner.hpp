#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "quadjump/config.hpp"
#include "quadjump/de_optimizer.hpp"
#include "quadjump/fitness.hpp"
#include "quadjump/grf_profile.hpp"
#include "quadjump/task.hpp"
#include "quadjump/trajectory.hpp"

namespace quadjump {

/// Box bounds of the optimizer's 12 raw variables. The first three are the
/// phase duration gaps (four-feet, two-feet, flight), which keeps the
/// ordering T1 < T2 < T3 inside a plain box; the rest are the mid-state and
/// the terminal rates. Inert slots (yaw spin) get a dummy unit range.
struct DesignBounds {
  std::array<double, 12> lo;
  std::array<double, 12> hi;

  static const std::array<std::string, 12>& dim_names() {
    static const std::array<std::string, 12> names = {
        "gap1",   "gap2",   "gap3",   "mid_t",  "mid_z",  "mid_angle",
        "mid_vt", "mid_vz", "mid_w",  "end_vt", "end_vz", "end_w"};
    return names;
  }

  static DesignBounds derive(const JumpTask& task, const RobotParams& params) {
    DesignBounds b;
    const bool flip = task.motion.is_flip();
    const bool yaw = task.motion.masks_translation();
    const double start_t = task.start_state.pos_t;
    const double travel = task.target_t - start_t;
    // Motion direction shapes the velocity boxes; a pure hop gets symmetric
    // ranges.
    const double fwd = travel > 1e-9 ? 1.0 : (travel < -1e-9 ? -1.0 : 0.0);

    // Flips spin in the sign of the target angle; their boxes mirror with it.
    const double spin = task.target_angle >= 0.0 ? 1.0 : -1.0;

    b.lo[0] = flip ? 0.10 : 0.08;                   // four-feet duration
    b.hi[0] = flip ? 0.45 : 0.35;
    b.lo[1] = 0.05; b.hi[1] = flip ? 0.18 : 0.25;   // two-feet duration
    // Flips fly long and spin slowly: fast spins need liftoff joint rates
    // beyond the velocity limit.
    b.lo[2] = flip ? 0.45 : 0.18;                   // flight duration
    b.hi[2] = flip ? 0.78 : 0.65;
    if (yaw) { b.lo[1] = 0.0; b.hi[1] = 1.0; }      // inert

    // The friction cone caps how far the body may advance past the stance
    // pair before liftoff, so the mid position stays near the start and the
    // flight phase covers the travel. Flips wind up toward the stance side.
    b.lo[3] = start_t - 0.10;
    b.hi[3] = start_t + 0.10;
    if (flip) {
      b.lo[3] = start_t + (spin < 0 ? -0.15 : -0.05);
      b.hi[3] = start_t + (spin < 0 ? 0.05 : 0.15);
    }
    b.lo[4] = 0.15;
    b.hi[4] = std::min(flip ? 0.30 : 0.34,
                       params.max_leg_reach() - 2.0 * params.workspace_margin);
    if (flip) { b.lo[5] = spin < 0 ? -0.9 : -0.3; b.hi[5] = spin < 0 ? 0.3 : 0.9; }
    else { b.lo[5] = -0.35; b.hi[5] = 0.35; }
    if (flip) { b.lo[6] = -1.5; b.hi[6] = 1.5; }
    else if (fwd > 0) { b.lo[6] = -0.3; b.hi[6] = 1.5; }
    else if (fwd < 0) { b.lo[6] = -1.5; b.hi[6] = 0.3; }
    else { b.lo[6] = -0.8; b.hi[6] = 0.8; }
    b.lo[7] = -0.3;
    b.hi[7] = flip ? 2.5 : 3.5;
    if (flip) { b.lo[8] = spin < 0 ? -14.0 : -1.0; b.hi[8] = spin < 0 ? 1.0 : 14.0; }
    else { b.lo[8] = -6.0; b.hi[8] = 6.0; }
    if (yaw) {
      for (int j : {3, 5, 6, 7, 8}) { b.lo[j] = 0.0; b.hi[j] = 1.0; }  // inert
      b.lo[4] = 0.15; b.hi[4] = 0.34;                                   // unused but harmless
    }

    if (flip) { b.lo[9] = -2.2; b.hi[9] = 2.2; }
    else if (fwd > 0) { b.lo[9] = -0.3; b.hi[9] = 2.2; }
    else if (fwd < 0) { b.lo[9] = -2.2; b.hi[9] = 0.3; }
    else { b.lo[9] = -1.0; b.hi[9] = 1.0; }
    b.lo[10] = -4.5; b.hi[10] = flip ? -0.5 : 0.0;
    if (flip) { b.lo[11] = spin < 0 ? -11.5 : 6.5; b.hi[11] = spin < 0 ? -6.5 : 11.5; }
    else { b.lo[11] = yaw ? -15.0 : -8.0; b.hi[11] = yaw ? 15.0 : 8.0; }
    if (yaw) { b.lo[9] = 0.0; b.hi[9] = 1.0; }  // inert
    return b;
  }

  /// Applies `bounds.<dim>_min` / `bounds.<dim>_max` overrides.
  void apply_overrides(const KeyValueConfig& cfg) {
    for (int j = 0; j < 12; ++j) {
      lo[j] = cfg.get_double("bounds." + dim_names()[j] + "_min", lo[j]);
      hi[j] = cfg.get_double("bounds." + dim_names()[j] + "_max", hi[j]);
    }
  }
};

/// Maps a raw optimizer vector to a design vector: cumulative times from the
/// gap variables; the yaw spin pins T2 = T1 and ignores its inert slots.
inline DesignVector decode_design(const std::vector<double>& raw, const MotionType& motion) {
  DesignVector d;
  d.t1 = raw[0];
  d.t2 = motion.has_two_feet_phase() ? raw[0] + raw[1] : raw[0];
  d.t3 = d.t2 + raw[2];
  if (motion.has_two_feet_phase()) {
    d.mid_state = {raw[3], raw[4], raw[5], raw[6], raw[7], raw[8]};
  }
  d.term_vel_t = motion.masks_translation() ? 0.0 : raw[9];
  d.term_vel_z = raw[10];
  d.term_angvel = raw[11];
  return d;
}

/// DE configuration knobs read from `de.*` keys; bounds are filled by the
/// planner per task.
inline DeConfig de_config_from(const KeyValueConfig& cfg) {
  DeConfig de;
  de.population = static_cast<int>(cfg.get_int("de.population", de.population));
  de.max_generations = static_cast<int>(cfg.get_int("de.max_generations", de.max_generations));
  de.strategy = de_strategy_from_string(cfg.get_string("de.strategy", to_string(de.strategy)));
  de.scale_factor = cfg.get_double("de.scale_factor", de.scale_factor);
  de.crossover_rate = cfg.get_double("de.crossover_rate", de.crossover_rate);
  de.seed = static_cast<std::uint64_t>(cfg.get_int("de.seed", static_cast<long long>(de.seed)));
  de.jobs = static_cast<int>(cfg.get_int("de.jobs", de.jobs));
  if (cfg.has("de.early_stop_target"))
    de.early_stop.target = cfg.get_double("de.early_stop_target", 0.0);
  de.early_stop.patience = static_cast<int>(cfg.get_int("de.early_stop_patience", 0));
  return de;
}

inline void de_config_to(const DeConfig& de, KeyValueConfig& cfg) {
  cfg.set("de.population", static_cast<long long>(de.population));
  cfg.set("de.max_generations", static_cast<long long>(de.max_generations));
  cfg.set("de.strategy", std::string(to_string(de.strategy)));
  cfg.set("de.scale_factor", de.scale_factor);
  cfg.set("de.crossover_rate", de.crossover_rate);
  cfg.set("de.seed", static_cast<long long>(de.seed));
  cfg.set("de.jobs", static_cast<long long>(de.jobs));
  if (de.early_stop.target) cfg.set("de.early_stop_target", *de.early_stop.target);
  cfg.set("de.early_stop_patience", static_cast<long long>(de.early_stop.patience));
}

struct PlanResult {
  DesignVector best;
  FitnessValue fitness;
  Trajectory trajectory;
  DeResult de;
};

/// Runs the DE search for one task and rebuilds the best trajectory. The
/// returned trajectory carries the feasibility certificate of its constraint
/// report.
inline PlanResult plan_jump(const JumpTask& task, const RobotParams& params, DeConfig de_cfg,
                            const DesignBounds* bounds_override = nullptr,
                            double sample_dt = 0.005) {
  params.validate();
  task.validate(params);
  const DesignBounds bounds =
      bounds_override ? *bounds_override : DesignBounds::derive(task, params);
  de_cfg.dims = 12;
  de_cfg.lower.assign(bounds.lo.begin(), bounds.lo.end());
  de_cfg.upper.assign(bounds.hi.begin(), bounds.hi.end());

  const Objective objective = [&task, &params, sample_dt](const std::vector<double>& raw) {
    return fitness(decode_design(raw, task.motion), task, params, sample_dt).value;
  };

  PlanResult result;
  result.de = optimize(de_cfg, objective);
  result.best = decode_design(result.de.best_vector, task.motion);
  result.fitness = fitness(result.best, task, params, sample_dt);
  result.trajectory = build_trajectory(result.best, task, params, sample_dt);
  result.trajectory.feasibility_hash = evaluate(result.trajectory, task, params).hash();
  return result;
}

}  // namespace quadjump
