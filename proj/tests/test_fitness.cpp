#include "quadjump/fitness.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "quadjump/planner.hpp"
#include "quadjump/rng.hpp"

namespace quadjump {
namespace {

const RobotParams kParams;

JumpTask front_task() {
  JumpTask task;
  task.target_t = 0.3;
  return task;
}

// A smooth forward hop with a comfortably extended liftoff posture: the
// boundary states keep the legs well inside the workspace so the power
// integrand stays mild.
DesignVector gentle_hop_design() {
  DesignVector d;
  d.t1 = 0.25;
  d.t2 = 0.50;
  d.t3 = 0.70;
  d.mid_state = {0.02, 0.22, 0.01, 0.25, 0.3, 0.05};
  d.term_vel_t = 1.0;
  d.term_vel_z = -1.4;
  d.term_angvel = -0.05;
  return d;
}

ConstraintReport report_with(std::initializer_list<std::pair<std::pair<int, int>, double>> marks) {
  ConstraintReport r;
  for (const auto& [key, magnitude] : marks) r.levels[key.first][key.second] = magnitude;
  r.finalize();
  return r;
}

TEST(PenaltyTerms, BaseCase) {
  EXPECT_DOUBLE_EQ(penalty_term(0, 0.0), 1000.0);
  EXPECT_DOUBLE_EQ(penalty_term(1, 0.0), 10000.0);
  EXPECT_EQ(k_index(7, 0), 42);
}

TEST(PenaltyValue, SingleViolationNearBeta) {
  const ConstraintReport r = report_with({{{0, 0}, 1e-12}});
  EXPECT_NEAR(penalty_value(r), 1000.0, 1e-6);
  EXPECT_EQ(r.worst_level, 0);
}

TEST(PenaltyValue, SumsAcrossChannels) {
  // Sub-constraint j = 1 carries exponent k = 0*6 + 1.
  const ConstraintReport r = report_with({{{0, 0}, 2.0}, {{0, 1}, 3.0}});
  EXPECT_DOUBLE_EQ(penalty_value(r), (1000.0 + 2.0) + 10.0 * (1000.0 + 3.0));
}

// Any candidate whose worst violated level is i scores strictly above any
// candidate whose worst level is i' < i, for clamped magnitudes.
TEST(PenaltyValue, HierarchyDominance) {
  for (int hi = 1; hi < ConstraintReport::kNumLevels; ++hi) {
    for (int lo = 0; lo < hi; ++lo) {
      // Weakest high-level offender: one channel, smallest tested magnitude.
      const ConstraintReport weak_high = report_with({{{hi, 0}, 1.0}});
      // Strongest low-level offender: every channel at the clamp up to lo.
      ConstraintReport strong_low;
      for (int i = 0; i <= lo; ++i)
        for (int j = 0; j < ConstraintReport::kChannelsPerLevel[i]; ++j)
          strong_low.levels[i][j] = kViolationClamp;
      strong_low.finalize();
      EXPECT_GT(penalty_value(weak_high), penalty_value(strong_low))
          << "levels " << hi << " vs " << lo;
    }
  }
}

TEST(PenaltyValue, RandomClampedGridKeepsDominance) {
  SplitMix64 rng(2024);
  const std::array<double, 3> grid = {0.0, 1.0, kViolationClamp};
  for (int trial = 0; trial < 300; ++trial) {
    const int level_a = 1 + static_cast<int>(rng.below(ConstraintReport::kNumLevels - 1));
    const int level_b = static_cast<int>(rng.below(level_a));
    auto fill = [&](int worst) {
      ConstraintReport r;
      for (int i = 0; i < worst; ++i)
        for (int j = 0; j < ConstraintReport::kChannelsPerLevel[i]; ++j)
          r.levels[i][j] = grid[rng.below(3)];
      r.levels[worst][rng.below(ConstraintReport::kChannelsPerLevel[worst])] =
          grid[1 + rng.below(2)];
      r.finalize();
      return r;
    };
    EXPECT_GT(penalty_value(fill(level_a)), penalty_value(fill(level_b)));
  }
}

TEST(Fitness, EnergyBranchIffAllSatisfied) {
  const JumpTask task = front_task();
  SplitMix64 rng(404);
  const DesignBounds bounds = DesignBounds::derive(task, kParams);
  for (int i = 0; i < 60; ++i) {
    std::vector<double> raw(12);
    for (int j = 0; j < 12; ++j) raw[j] = rng.uniform(bounds.lo[j], bounds.hi[j]);
    const DesignVector d = decode_design(raw, task.motion);
    const FitnessValue f = fitness(d, task, kParams);
    if (f.in_energy_mode) {
      EXPECT_EQ(f.worst_level, -1);
      EXPECT_DOUBLE_EQ(f.value, f.energy_joules);
      EXPECT_LT(f.value, kBeta);
      EXPECT_GT(f.value, 0.0);
    } else {
      EXPECT_GE(f.value, kBeta);
      EXPECT_DOUBLE_EQ(f.energy_joules, 0.0);
    }
  }
}

TEST(Fitness, MatchesManualRecomputation) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const FitnessValue f = fitness(d, task, kParams);
  const Trajectory traj = build_trajectory(d, task, kParams);
  const ConstraintReport report = evaluate(traj, task, kParams);
  if (report.all_satisfied) {
    EXPECT_DOUBLE_EQ(f.value, traj.energy_j);
  } else {
    EXPECT_DOUBLE_EQ(f.value, penalty_value(report));
    EXPECT_EQ(f.worst_level, report.worst_level);
  }
}

TEST(Fitness, DeterministicBitIdentical) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const FitnessValue a = fitness(d, task, kParams);
  const FitnessValue b = fitness(d, task, kParams);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.worst_level, b.worst_level);
}

TEST(Fitness, DegenerateSolveGetsSentinel) {
  const JumpTask task = front_task();
  DesignVector d = gentle_hop_design();
  d.t2 = d.t1;  // no two-feet phase duration
  const FitnessValue f = fitness(d, task, kParams);
  EXPECT_TRUE(f.degenerate);
  EXPECT_DOUBLE_EQ(f.value, kDegenerateSentinel);
  // The sentinel dominates the largest achievable constraint penalty.
  ConstraintReport all_max;
  for (int i = 0; i < ConstraintReport::kNumLevels; ++i)
    for (int j = 0; j < ConstraintReport::kChannelsPerLevel[i]; ++j)
      all_max.levels[i][j] = kViolationClamp;
  all_max.finalize();
  EXPECT_GT(f.value, penalty_value(all_max));
}

TEST(Energy, ZeroTorqueZeroEnergy) {
  Trajectory traj;
  for (int i = 0; i < 10; ++i) {
    TrajectorySample s;
    s.t = 0.05 * i;
    s.qd[0] = {0.0, 3.0, -2.0};
    traj.samples.push_back(s);
  }
  EXPECT_DOUBLE_EQ(energy(traj), 0.0);
}

TEST(Energy, ConstantPowerRectangle) {
  // Total absolute power 12 W held for 0.5 s -> 6 J; the trapezoid rule is
  // exact for a constant integrand.
  Trajectory traj;
  for (int i = 0; i <= 10; ++i) {
    TrajectorySample s;
    s.t = 0.05 * i;
    s.tau[0] = {0.0, 3.0, 0.0};
    s.qd[0] = {0.0, 1.0, 0.0};
    s.tau[1] = {0.0, -3.0, 0.0};
    s.qd[1] = {0.0, 1.0, 0.0};
    traj.samples.push_back(s);
  }
  EXPECT_NEAR(energy(traj), 6.0, 1e-12);
}

// Trapezoid convergence: refining the sampling leaves the energy invariant
// within 1% once the liftoff power ramp is resolved. The joint power grows
// steeply in the last few milliseconds of stance, so the planning-rate value
// sits a few percent below the refined one.
TEST(Energy, RefinementInvariance) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const Trajectory planning = build_trajectory(d, task, kParams, 0.005);
  const Trajectory coarse = build_trajectory(d, task, kParams, 0.002);
  const Trajectory fine = build_trajectory(d, task, kParams, 0.001);
  EXPECT_NEAR(coarse.energy_j, fine.energy_j, 0.01 * std::max(1.0, fine.energy_j));
  EXPECT_NEAR(planning.energy_j, fine.energy_j, 0.05 * std::max(1.0, fine.energy_j));
}

// --- trajectory builder behavior the fitness pipeline relies on ---

TEST(BuildTrajectory, BoundarySamplesAndPhases) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const Trajectory traj = build_trajectory(d, task, kParams);
  EXPECT_DOUBLE_EQ(traj.samples.front().t, 0.0);
  EXPECT_DOUBLE_EQ(traj.samples.back().t, d.t3);
  bool saw_t1 = false, saw_t2 = false;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    EXPECT_GT(traj.samples[i].t, traj.samples[i - 1].t);
    if (traj.samples[i].t == d.t1) saw_t1 = true;
    if (traj.samples[i].t == d.t2) saw_t2 = true;
  }
  EXPECT_TRUE(saw_t1);
  EXPECT_TRUE(saw_t2);
  for (const TrajectorySample& s : traj.samples) {
    if (s.t < d.t1) EXPECT_EQ(s.phase, PhaseLabel::four_feet);
    if (s.t > d.t1 && s.t < d.t2) EXPECT_EQ(s.phase, PhaseLabel::two_feet);
    if (s.t >= d.t2) EXPECT_EQ(s.phase, PhaseLabel::flight);
  }
}

TEST(BuildTrajectory, FlightLegsAreTorqueFreeAndLand) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const Trajectory traj = build_trajectory(d, task, kParams);
  const LegAngles land = landing_configuration(task, kParams);
  for (const TrajectorySample& s : traj.samples) {
    if (s.phase != PhaseLabel::flight) continue;
    for (int pair = 0; pair < 2; ++pair) {
      EXPECT_DOUBLE_EQ(s.tau[pair].pitch, 0.0);
      EXPECT_DOUBLE_EQ(s.tau[pair].knee, 0.0);
    }
  }
  const TrajectorySample& last = traj.samples.back();
  for (int pair = 0; pair < 2; ++pair) {
    EXPECT_NEAR(last.q[pair].pitch, land.pitch, 1e-9);
    EXPECT_NEAR(last.q[pair].knee, land.knee, 1e-9);
    EXPECT_NEAR(last.qd[pair].pitch, 0.0, 1e-9);
  }
}

TEST(BuildTrajectory, StanceFeetStayPinned) {
  const JumpTask task = front_task();
  const DesignVector d = gentle_hop_design();
  const Trajectory traj = build_trajectory(d, task, kParams);
  for (const TrajectorySample& s : traj.samples) {
    for (int pair = 0; pair < 2; ++pair) {
      const bool loaded =
          s.phase == PhaseLabel::four_feet ||
          (s.phase == PhaseLabel::two_feet && pair == static_cast<int>(task.two_feet_stance()));
      if (!loaded || s.reach_deficit[pair] > 0.0) continue;
      const LinkPositions links =
          forward_kinematics({s.q[pair].pitch, s.q[pair].knee}, s.state,
                             hip_anchor(static_cast<StancePair>(pair), kParams), kParams);
      EXPECT_NEAR((links.foot - traj.stance_feet[pair]).norm(), 0.0, 1e-9);
    }
  }
}

TEST(BuildTrajectory, YawSpinKeepsTranslationFixed) {
  JumpTask task;
  task.motion = MotionType::make(MotionKind::yaw_spin);
  task.target_t = task.start_state.pos_t;
  task.target_angle = M_PI;
  DesignVector d;
  d.t1 = 0.3;
  d.t2 = 0.3;
  d.t3 = 0.7;
  d.term_vel_z = -1.2;
  d.term_angvel = 2.0;
  const Trajectory traj = build_trajectory(d, task, kParams);
  for (const TrajectorySample& s : traj.samples) {
    EXPECT_DOUBLE_EQ(s.state.pos_t, task.start_state.pos_t);
    EXPECT_DOUBLE_EQ(s.state.vel_t, 0.0);
    if (s.t >= traj.t1) EXPECT_EQ(s.phase, PhaseLabel::flight);
  }
  EXPECT_NEAR(traj.samples.back().state.angle, M_PI, 1e-8);
}

}  // namespace
}  // namespace quadjump
