#include "quadjump/constraints.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "quadjump/rng.hpp"

namespace quadjump {
namespace {

const RobotParams kParams;

// A calm hand-built trajectory that satisfies every constraint: constant
// body height, firm vertical forces, modest joint rates. Tests then inject
// violations into individual samples.
Trajectory make_synthetic(int n_samples = 24, double horizon = 0.6) {
  Trajectory traj;
  traj.task = JumpTask{};
  traj.task.target_t = 0.3;
  traj.motion = traj.task.motion;
  traj.t1 = 0.4 * horizon;
  traj.t2 = 0.7 * horizon;
  traj.t3 = horizon;
  traj.stance_feet = initial_foot_positions(traj.task, kParams);

  const LegAngles crouch = inverse_kinematics(Vec2(0.0, -0.25), kParams);
  for (int i = 0; i < n_samples; ++i) {
    TrajectorySample s;
    s.t = horizon * i / (n_samples - 1.0);
    s.state = {0.0, 0.25, 0.0, 0.0, 0.0, 0.0};
    s.phase = s.t >= traj.t2 ? PhaseLabel::flight
                             : (s.t <= traj.t1 ? PhaseLabel::four_feet : PhaseLabel::two_feet);
    for (int pair = 0; pair < 2; ++pair) {
      s.q[pair] = {0.0, crouch.pitch, crouch.knee};
      s.qd[pair] = {0.0, 0.5, -0.5};
      s.tau[pair] = {0.0, 5.0, 5.0};
    }
    if (s.phase == PhaseLabel::four_feet) {
      s.foot_force = {Vec2(0.0, 60.0), Vec2(0.0, 60.0)};
    } else if (s.phase == PhaseLabel::two_feet) {
      const int push = static_cast<int>(traj.task.two_feet_stance());
      s.foot_force[push] = Vec2(0.0, 120.0);
    } else {
      s.foot_force = {Vec2::Zero(), Vec2::Zero()};
      s.tau = {JointTriple{}, JointTriple{}};
    }
    traj.samples.push_back(s);
  }
  traj.energy_j = compute_energy(traj.samples);
  return traj;
}

TEST(Evaluate, CleanTrajectoryAllSatisfied) {
  const Trajectory traj = make_synthetic();
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_TRUE(report.all_satisfied);
  EXPECT_EQ(report.worst_level, -1);
  for (const auto& level : report.levels)
    for (double m : level) EXPECT_DOUBLE_EQ(m, 0.0);
}

TEST(Evaluate, ContactForceMagnitude) {
  Trajectory traj = make_synthetic();
  traj.samples[2].foot_force[0] = Vec2(0.0, 1.0);  // per-leg fz = 0.5 N
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_FALSE(report.all_satisfied);
  EXPECT_NEAR(report.levels[0][0], 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(report.levels[0][1], 0.0);
  EXPECT_EQ(report.worst_level, 0);
}

TEST(Evaluate, FrictionConeMagnitude) {
  Trajectory traj = make_synthetic();
  traj.samples[2].foot_force[1] = Vec2(1.6, 2.0);  // per-leg (0.8, 1.0)
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_NEAR(report.levels[1][1], (0.8 - 0.7) / 0.7, 1e-12);
}

TEST(Evaluate, JointAngleAndReach) {
  Trajectory traj = make_synthetic();
  traj.samples[3].q[0].knee = kParams.knee_limits.max + 0.26;
  traj.samples[4].reach_deficit[1] = 0.05;
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_NEAR(report.levels[2][1], 0.26 / 2.6, 1e-12);
  EXPECT_NEAR(report.levels[2][5], 0.05 / (kParams.max_leg_reach() - kParams.workspace_margin),
              1e-12);
}

TEST(Evaluate, VelocityAndTorqueLevels) {
  Trajectory traj = make_synthetic();
  traj.samples[5].qd[0].pitch = 44.0;
  traj.samples[6].tau[1].knee = -30.0;
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_NEAR(report.levels[3][0], 4.0 / 40.0, 1e-12);
  EXPECT_NEAR(report.levels[4][3], 6.0 / 24.0, 1e-12);
  EXPECT_EQ(report.worst_level, 4);
}

TEST(Evaluate, GroundClearanceLevel) {
  Trajectory traj = make_synthetic();
  // Sink the body so the knees drop below the clearance height.
  for (TrajectorySample& s : traj.samples) s.state.pos_z = 0.12;
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_FALSE(report.all_satisfied);
  EXPECT_GT(report.levels[5][1], 0.0);         // knee channel
  EXPECT_DOUBLE_EQ(report.levels[5][0], 0.0);  // hips ride at body height
}

TEST(Evaluate, ObstacleWindowMagnitude) {
  Trajectory traj = make_synthetic(41, 0.8);
  // Body glides forward at constant height 0.29; hips cross the obstacle
  // plane at that height.
  for (TrajectorySample& s : traj.samples) {
    s.state.pos_t = 1.2 * s.t;
    s.state.pos_z = 0.29;
    s.state.vel_t = 1.2;
  }
  ObstacleSpec obs;
  obs.crossing_coord = 0.5;
  obs.ground_top_z = 0.0;
  obs.aerial_bottom_z = 0.30;
  obs.expansion_margin = 0.02;
  traj.task.obstacle = obs;

  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  const double expected = (0.29 - 0.28) / 0.28;
  EXPECT_NEAR(report.levels[6][0], expected, 1e-9);  // front hip
  EXPECT_NEAR(report.levels[6][3], expected, 1e-9);  // rear hip
  EXPECT_EQ(report.worst_level, 6);
}

TEST(Evaluate, RealizabilityResidualLevel) {
  Trajectory traj = make_synthetic();
  for (TrajectorySample& s : traj.samples)
    if (s.phase == PhaseLabel::two_feet) s.residual = 0.6;
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_NEAR(report.levels[7][0], (0.6 - 0.5) / 0.5, 1e-12);
  EXPECT_EQ(report.worst_level, 7);
}

TEST(Evaluate, MagnitudesClampAtHundred) {
  Trajectory traj = make_synthetic();
  traj.samples[2].tau[0].pitch = 1e9;
  const ConstraintReport report = evaluate(traj, traj.task, kParams);
  EXPECT_DOUBLE_EQ(report.levels[4][0], kViolationClamp);
}

// Raising a single sample's excess never lowers its level magnitude.
TEST(Evaluate, MonotoneInSampleExcess) {
  double previous = -1.0;
  for (double tau : {25.0, 28.0, 40.0, 90.0}) {
    Trajectory traj = make_synthetic();
    traj.samples[7].tau[0].pitch = tau;
    const ConstraintReport report = evaluate(traj, traj.task, kParams);
    EXPECT_GE(report.levels[4][0], previous);
    previous = report.levels[4][0];
  }
}

TEST(Evaluate, HashDistinguishesReports) {
  Trajectory clean = make_synthetic();
  Trajectory dirty = make_synthetic();
  dirty.samples[2].tau[0].pitch = 30.0;
  const ConstraintReport a = evaluate(clean, clean.task, kParams);
  const ConstraintReport b = evaluate(dirty, dirty.task, kParams);
  EXPECT_EQ(a.hash(), evaluate(clean, clean.task, kParams).hash());
  EXPECT_NE(a.hash(), b.hash());
}

TEST(DetectCrossings, MonotoneCoordinateSingleCrossing) {
  std::vector<double> times, coords, heights;
  for (int i = 0; i <= 60; ++i) {
    const double t = 0.01 * i;
    times.push_back(t);
    coords.push_back(0.8 * t + 0.05 * t * t);  // strictly increasing
    heights.push_back(0.2 + 0.5 * t - 0.4 * t * t);
  }
  const double target = 0.31;
  const auto crossings = detect_crossings(times, coords, heights, target);
  ASSERT_EQ(crossings.size(), 1u);

  // Brute-force dense scan on the same piecewise-linear series at dt/100.
  double brute_t = -1.0;
  for (std::size_t i = 0; i + 1 < times.size() && brute_t < 0; ++i) {
    for (int k = 0; k < 100; ++k) {
      const double u0 = k / 100.0, u1 = (k + 1) / 100.0;
      const double c0 = coords[i] + u0 * (coords[i + 1] - coords[i]);
      const double c1 = coords[i] + u1 * (coords[i + 1] - coords[i]);
      if ((c0 - target) * (c1 - target) <= 0.0 && c0 != c1) {
        brute_t = times[i] + 0.5 * (u0 + u1) * (times[i + 1] - times[i]);
        break;
      }
    }
  }
  EXPECT_NEAR(crossings[0].t, brute_t, 1e-4);

  // Bisection hits the piecewise-linear root to its stated tolerance.
  const auto seg = static_cast<std::size_t>(crossings[0].t / 0.01);
  const double u = (target - coords[seg]) / (coords[seg + 1] - coords[seg]);
  const double exact_t = times[seg] + u * 0.01;
  EXPECT_NEAR(crossings[0].t, exact_t, 2e-6);
  const double exact_z = heights[seg] + u * (heights[seg + 1] - heights[seg]);
  EXPECT_NEAR(crossings[0].z, exact_z, 1e-4);
}

TEST(DetectCrossings, OscillatingCoordinateFindsAll) {
  std::vector<double> times, coords, heights;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.005 * i;
    times.push_back(t);
    coords.push_back(0.3 * std::sin(3.0 * 2.0 * M_PI * t));
    heights.push_back(0.2);
  }
  const auto crossings = detect_crossings(times, coords, heights, 0.15);
  EXPECT_EQ(crossings.size(), 6u);  // three periods, two crossings each
  for (std::size_t i = 1; i < crossings.size(); ++i)
    EXPECT_GT(crossings[i].t, crossings[i - 1].t);
}

TEST(DetectCrossings, ExactSampleHitDeduplicated) {
  const std::vector<double> times = {0.0, 0.1, 0.2};
  const std::vector<double> coords = {-1.0, 0.0, 1.0};
  const std::vector<double> heights = {0.5, 0.6, 0.7};
  const auto crossings = detect_crossings(times, coords, heights, 0.0);
  ASSERT_EQ(crossings.size(), 1u);
  EXPECT_DOUBLE_EQ(crossings[0].t, 0.1);
  EXPECT_DOUBLE_EQ(crossings[0].z, 0.6);
}

TEST(ObstacleSpecChecks, Validation) {
  ObstacleSpec bad;
  bad.ground_top_z = 0.4;
  bad.aerial_bottom_z = 0.3;
  EXPECT_THROW(bad.validate(), ConfigError);
  ObstacleSpec ok;
  ok.ground_top_z = 0.05;
  ok.aerial_bottom_z = 0.35;
  ok.expansion_margin = 0.02;
  ok.validate();
  EXPECT_DOUBLE_EQ(ok.window_low(), 0.07);
  EXPECT_DOUBLE_EQ(ok.window_high(), 0.33);
}

}  // namespace
}  // namespace quadjump
