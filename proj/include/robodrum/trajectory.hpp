#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robodrum/errors.hpp"
#include "robodrum/gp.hpp"
#include "robodrum/kinematics.hpp"

namespace robodrum {

// Retargets recorded human pose trajectories onto the arm model. A GP is
// fitted per channel (x, y, z and the sign-aligned quaternion components),
// resampled at the arm control rate, projected into the planar workspace,
// solved by analytic IK, and the branch closest to a rolling reference is
// kept so the arm never flips elbow mid-gesture. The length-scale is the
// smoothing knob: long enough keeps the joint velocities inside the limits.

struct PoseSample {
  double t = 0.0;
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  Eigen::Quaterniond orientation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
};

struct DemoTrajectory {
  std::vector<PoseSample> samples;
  double nominal_rate = 300.0;  // Hz

  void validate() const {
    if (samples.size() < 2)
      throw std::invalid_argument("DemoTrajectory: need at least 2 samples");
    for (size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i].t > samples[i - 1].t))
        throw std::invalid_argument(
            "DemoTrajectory: times must be strictly increasing");
    for (const auto& s : samples)
      if (std::abs(s.orientation.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("DemoTrajectory: non-unit quaternion");
    double span = samples.back().t - samples.front().t;
    double mean_dt = span / static_cast<double>(samples.size() - 1);
    if (std::abs(mean_dt * nominal_rate - 1.0) > 0.1)
      throw std::invalid_argument(
          "DemoTrajectory: sample rate deviates >10% from nominal");
  }

  double duration() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
};

// --- CSV I/O (header: t,x,y,z,qw,qx,qy,qz) ----------------------------------

inline DemoTrajectory load_pose_csv(const std::string& path,
                                    double nominal_rate = 300.0) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);

  DemoTrajectory demo;
  demo.nominal_rate = nominal_rate;
  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++line_no;
  {
    std::string squeezed;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) squeezed += c;
    if (squeezed != "t,x,y,z,qw,qx,qy,qz")
      throw ParseError(1, "expected header t,x,y,z,qw,qx,qy,qz");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    double v[8];
    std::string cell;
    for (int i = 0; i < 8; ++i) {
      if (!std::getline(row, cell, ','))
        throw ParseError(line_no, "expected 8 comma-separated values");
      try {
        size_t used = 0;
        v[i] = std::stod(cell, &used);
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad number '" + cell + "'");
      }
    }
    PoseSample s;
    s.t = v[0];
    s.position = {v[1], v[2], v[3]};
    s.orientation = Eigen::Quaterniond(v[4], v[5], v[6], v[7]);
    if (std::abs(s.orientation.norm() - 1.0) > 1e-6)
      throw ParseError(line_no, "quaternion is not unit length");
    s.orientation.normalize();
    demo.samples.push_back(s);
  }
  demo.validate();
  return demo;
}

inline void save_pose_csv(const std::string& path, const DemoTrajectory& demo) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "t,x,y,z,qw,qx,qy,qz\n";
  out.precision(12);
  for (const auto& s : demo.samples)
    out << s.t << ',' << s.position.x() << ',' << s.position.y() << ','
        << s.position.z() << ',' << s.orientation.w() << ','
        << s.orientation.x() << ',' << s.orientation.y() << ','
        << s.orientation.z() << '\n';
}

// --- Smoothing ---------------------------------------------------------------

/// GP-smooths a pose trajectory and resamples it at the query times.
/// Positions are regressed per channel; quaternions are sign-aligned
/// (consecutive dot >= 0), regressed componentwise and renormalized.
inline std::vector<PoseSample> smooth_pose_trajectory(
    const DemoTrajectory& demo, double length_scale,
    std::span<const double> query_times, double noise_variance = 1e-6,
    double* jitter_used = nullptr) {
  demo.validate();

  const size_t n = demo.samples.size();
  std::vector<double> times(n);
  std::vector<std::vector<double>> channels(7, std::vector<double>(n));
  Eigen::Quaterniond prev = demo.samples.front().orientation;
  for (size_t i = 0; i < n; ++i) {
    const auto& s = demo.samples[i];
    times[i] = s.t;
    Eigen::Quaterniond q = s.orientation;
    if (q.dot(prev) < 0.0) q.coeffs() *= -1.0;
    prev = q;
    channels[0][i] = s.position.x();
    channels[1][i] = s.position.y();
    channels[2][i] = s.position.z();
    channels[3][i] = q.w();
    channels[4][i] = q.x();
    channels[5][i] = q.y();
    channels[6][i] = q.z();
  }

  auto model = GpModel::fit(times, channels, length_scale, noise_variance);
  if (jitter_used) *jitter_used = model.jitter_used();
  auto pred = model.predict(query_times);

  std::vector<PoseSample> out(query_times.size());
  for (size_t q = 0; q < query_times.size(); ++q) {
    out[q].t = query_times[q];
    out[q].position = {pred.mean[0][q], pred.mean[1][q], pred.mean[2][q]};
    Eigen::Quaterniond quat(pred.mean[3][q], pred.mean[4][q], pred.mean[5][q],
                            pred.mean[6][q]);
    double norm = quat.norm();
    if (norm < 1e-6)
      throw std::domain_error(
          "smooth_pose_trajectory: degenerate orientation (near-zero "
          "quaternion) at t=" +
          std::to_string(query_times[q]));
    quat.coeffs() /= norm;
    out[q].orientation = quat;
  }
  return out;
}

// --- Planar projection and retargeting ---------------------------------------

/// Workspace projection for the planar arm: x, y and the yaw about +z.
inline PlanarPose project_planar(const PoseSample& s) {
  const auto& q = s.orientation;
  double yaw = std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()),
                          1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
  return {s.position.x(), s.position.y(), yaw};
}

struct RetargetOptions {
  double length_scale = 0.05;    // seconds
  double noise_variance = 1e-6;
  double query_rate = 125.0;     // arm control rate, Hz
  JointConfig reference{0.3, 1.0, -0.8};  // seed for the rolling reference
  std::array<double, 3> weights{1.0, 1.0, 1.0};
};

struct RetargetResult {
  JointTrajectory trajectory;
  LimitReport report;
  double gp_jitter = 0.0;
};

/// Smooth -> project -> IK -> branch selection against the rolling
/// reference -> limit validation. An unreachable smoothed pose raises
/// InputError naming the first offending query time.
inline RetargetResult retarget(const DemoTrajectory& demo, const ArmModel& arm,
                               const RetargetOptions& opts = {}) {
  arm.validate();
  demo.validate();

  const double t0 = demo.samples.front().t;
  const double t1 = demo.samples.back().t;
  std::vector<double> query;
  const double dt = 1.0 / opts.query_rate;
  for (double t = t0; t <= t1 + 1e-12; t += dt) query.push_back(std::min(t, t1));
  if (query.size() < 2) query = {t0, t1};

  RetargetResult result;
  auto smoothed = smooth_pose_trajectory(demo, opts.length_scale, query,
                                         opts.noise_variance,
                                         &result.gp_jitter);

  JointConfig reference = opts.reference;
  result.trajectory.times.reserve(query.size());
  result.trajectory.configs.reserve(query.size());
  for (const auto& pose : smoothed) {
    auto solutions = solve_ik(arm, project_planar(pose));
    if (solutions.empty())
      throw InputError("retarget: unreachable pose at t=" +
                       std::to_string(pose.t));
    JointConfig chosen = select_solution(solutions, reference, opts.weights);
    reference = chosen;
    result.trajectory.times.push_back(pose.t);
    result.trajectory.configs.push_back(chosen);
  }
  result.report = validate_limits(result.trajectory, arm);
  return result;
}

/// Uniform draw from a joint-space box; the random-pose behavior of the
/// arm. Defaults to a conservative sub-box of the joint limits.
inline JointConfig sample_random_config(std::mt19937_64& rng,
                                        const std::array<double, 3>& lo = {
                                            -1.5, -1.5, -1.5},
                                        const std::array<double, 3>& hi = {
                                            1.5, 1.5, 1.5}) {
  JointConfig q;
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> pick(lo[i], hi[i]);
    q[i] = pick(rng);
  }
  return q;
}

// --- JSON output --------------------------------------------------------------

inline void to_json(nlohmann::json& j, const LimitViolation& v) {
  j = {{"sample", v.sample},
       {"joint", v.joint},
       {"kind", v.is_velocity ? "velocity" : "position"},
       {"value", v.value},
       {"limit", v.limit}};
}

inline void to_json(nlohmann::json& j, const LimitReport& r) {
  j = {{"violations", r.violations},
       {"position_margin", r.position_margin},
       {"velocity_margin", r.velocity_margin},
       {"ok", r.ok()}};
}

inline void to_json(nlohmann::json& j, const RetargetResult& r) {
  auto configs = nlohmann::json::array();
  for (const auto& q : r.trajectory.configs) configs.push_back(q);
  j = {{"times", r.trajectory.times},
       {"configs", std::move(configs)},
       {"report", r.report},
       {"gp_jitter", r.gp_jitter}};
}

}  // namespace robodrum
