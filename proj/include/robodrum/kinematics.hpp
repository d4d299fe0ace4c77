#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace robodrum {

// Planar 3-link arm: a desk-scale stand-in with the same solution-set /
// selection interfaces a full 6-DOF backend would use. The wrist (joints
// 1-2) admits the classic elbow-up / elbow-down branches; joint 3 absorbs
// the end-effector heading.

using JointConfig = std::array<double, 3>;

struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // end-effector heading, radians
};

struct ArmModel {
  std::array<double, 3> link_lengths{0.3, 0.3, 0.1};  // meters
  // limits per joint, radians; velocity in rad/s
  std::array<std::array<double, 2>, 3> joint_limits{
      {{-2.967, 2.967}, {-2.967, 2.967}, {-2.967, 2.967}}};
  std::array<double, 3> velocity_limits{3.14, 3.14, 3.14};

  void validate() const {
    for (double l : link_lengths)
      if (!(l > 0.0)) throw std::invalid_argument("ArmModel: link length <= 0");
    for (const auto& lim : joint_limits)
      if (!(lim[0] < lim[1]))
        throw std::invalid_argument("ArmModel: joint limits not well-ordered");
    for (double v : velocity_limits)
      if (!(v > 0.0))
        throw std::invalid_argument("ArmModel: velocity limit <= 0");
  }
};

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline PlanarPose forward_kinematics(const ArmModel& arm,
                                     const JointConfig& q) {
  const auto& l = arm.link_lengths;
  double a1 = q[0], a12 = q[0] + q[1], a123 = q[0] + q[1] + q[2];
  PlanarPose pose;
  pose.x = l[0] * std::cos(a1) + l[1] * std::cos(a12) + l[2] * std::cos(a123);
  pose.y = l[0] * std::sin(a1) + l[1] * std::sin(a12) + l[2] * std::sin(a123);
  pose.theta = wrap_angle(a123);
  return pose;
}

/// Analytic IK. Returns both elbow branches for a reachable target
/// (deduplicated when they coincide at full extension / full fold) and an
/// empty set for an unreachable one. Joint limits are not applied here;
/// validate_limits covers that.
inline std::vector<JointConfig> solve_ik(const ArmModel& arm,
                                         const PlanarPose& target) {
  const auto& l = arm.link_lengths;
  const double wx = target.x - l[2] * std::cos(target.theta);
  const double wy = target.y - l[2] * std::sin(target.theta);
  const double r2 = wx * wx + wy * wy;

  double d = (r2 - l[0] * l[0] - l[1] * l[1]) / (2.0 * l[0] * l[1]);
  constexpr double kReachTol = 1e-10;
  if (d > 1.0) {
    if (d > 1.0 + kReachTol) return {};
    d = 1.0;
  } else if (d < -1.0) {
    if (d < -1.0 - kReachTol) return {};
    d = -1.0;
  }

  std::vector<JointConfig> solutions;
  const double base = std::atan2(wy, wx);
  for (double sign : {+1.0, -1.0}) {
    double q2 = sign * std::acos(d);
    double q1 =
        base - std::atan2(l[1] * std::sin(q2), l[0] + l[1] * std::cos(q2));
    double q3 = wrap_angle(target.theta - q1 - q2);
    solutions.push_back({wrap_angle(q1), q2, q3});
    if (std::abs(q2) < 1e-12) break;  // singular: both branches coincide
  }
  return solutions;
}

/// Argmin of weighted squared joint-space distance to the reference.
/// Exact ties fall to the lexicographically smaller configuration.
inline JointConfig select_solution(std::span<const JointConfig> solutions,
                                   const JointConfig& reference,
                                   const std::array<double, 3>& weights = {
                                       1.0, 1.0, 1.0}) {
  if (solutions.empty())
    throw std::invalid_argument("select_solution: empty solution set");
  auto dist = [&](const JointConfig& q) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      double d = q[i] - reference[i];
      acc += weights[i] * d * d;
    }
    return acc;
  };
  const JointConfig* best = &solutions[0];
  double best_d = dist(solutions[0]);
  for (const auto& q : solutions.subspan(1)) {
    double d = dist(q);
    if (d < best_d || (d == best_d && q < *best)) {
      best = &q;
      best_d = d;
    }
  }
  return *best;
}

struct JointTrajectory {
  std::vector<double> times;
  std::vector<JointConfig> configs;
};

struct LimitViolation {
  size_t sample = 0;
  int joint = 0;
  bool is_velocity = false;
  double value = 0.0;  // offending angle (rad) or speed (rad/s)
  double limit = 0.0;
};

struct LimitReport {
  std::vector<LimitViolation> violations;
  // worst (smallest) margin per joint; negative means violated
  std::array<double, 3> position_margin{};
  std::array<double, 3> velocity_margin{};

  bool ok() const { return violations.empty(); }
};

/// Flags every sample outside the joint limits and every finite-difference
/// velocity above the velocity limits. Report only; nothing throws.
inline LimitReport validate_limits(const JointTrajectory& traj,
                                   const ArmModel& arm) {
  if (traj.times.size() != traj.configs.size())
    throw std::invalid_argument("validate_limits: times/configs mismatch");
  if (traj.times.size() < 2)
    throw std::invalid_argument("validate_limits: need at least 2 samples");

  LimitReport report;
  report.position_margin.fill(std::numeric_limits<double>::infinity());
  report.velocity_margin.fill(std::numeric_limits<double>::infinity());

  for (size_t i = 0; i < traj.configs.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto& lim = arm.joint_limits[j];
      double q = traj.configs[i][j];
      double margin = std::min(q - lim[0], lim[1] - q);
      report.position_margin[j] = std::min(report.position_margin[j], margin);
      if (q < lim[0] || q > lim[1])
        report.violations.push_back(
            {i, j, false, q, q < lim[0] ? lim[0] : lim[1]});
    }
    if (i == 0) continue;
    double dt = traj.times[i] - traj.times[i - 1];
    if (!(dt > 0.0))
      throw std::invalid_argument("validate_limits: non-increasing times");
    for (int j = 0; j < 3; ++j) {
      double speed = std::abs(traj.configs[i][j] - traj.configs[i - 1][j]) / dt;
      double margin = arm.velocity_limits[j] - speed;
      report.velocity_margin[j] = std::min(report.velocity_margin[j], margin);
      if (speed > arm.velocity_limits[j])
        report.violations.push_back(
            {i, j, true, speed, arm.velocity_limits[j]});
    }
  }
  return report;
}

}  // namespace robodrum
