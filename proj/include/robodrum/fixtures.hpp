#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "robodrum/trajectory.hpp"

namespace robodrum {

// Synthetic pose fixtures standing in for motion capture. All of them live
// in the planar arm's workspace (z = 0, orientation = yaw about +z) so the
// planar projection is lossless and the generator doubles as the oracle.

struct ArcDemoSpec {
  double freq_hz = 2.0;      // shake frequency
  double duration_s = 5.0;
  double rate_hz = 300.0;    // sample rate
  double center_x = 0.38;
  double center_y = 0.22;
  double amp = 0.03;         // meters
  double yaw0 = 0.5;         // radians
  double yaw_amp = 0.25;
};

inline Eigen::Quaterniond yaw_quat(double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
}

/// Smooth in-plane shaking arc. Exact poses are known in closed form.
inline DemoTrajectory make_arc_demo(const ArcDemoSpec& spec = {}) {
  DemoTrajectory demo;
  demo.nominal_rate = spec.rate_hz;
  const auto n = static_cast<size_t>(std::lround(spec.duration_s * spec.rate_hz));
  if (n < 2) throw std::invalid_argument("make_arc_demo: too short");
  demo.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / spec.rate_hz;
    double phase = 2.0 * M_PI * spec.freq_hz * t;
    auto& s = demo.samples[i];
    s.t = t;
    s.position = {spec.center_x + spec.amp * std::sin(phase),
                  spec.center_y + 0.6 * spec.amp * std::sin(phase + M_PI / 3),
                  0.0};
    s.orientation = yaw_quat(spec.yaw0 + spec.yaw_amp * std::sin(phase));
  }
  return demo;
}

/// The three bundled caxixi snippets: shake gestures whose amplitude
/// envelope pulses at three different rhythmic signatures (eighths,
/// sixteenths, triplets) at 120 BPM. Index is 1-based like the files.
inline DemoTrajectory make_snippet_demo(int index, double rate_hz = 300.0) {
  if (index < 1 || index > 3)
    throw std::invalid_argument("make_snippet_demo: index must be 1..3");

  // pulses per beat and length per signature
  const double pulses[] = {2.0, 4.0, 3.0};
  const double durations[] = {2.0, 2.0, 3.0};
  const double beat = 0.5;  // 120 BPM
  const double pulse_rate = pulses[index - 1] / beat;
  const double duration = durations[index - 1];

  DemoTrajectory demo;
  demo.nominal_rate = rate_hz;
  const auto n = static_cast<size_t>(std::lround(duration * rate_hz));
  demo.samples.resize(n);
  const double shake_hz = 3.0;
  for (size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / rate_hz;
    // raised-cosine pulse train: amplitude swells on each rhythmic pulse
    double pulse_phase = t * pulse_rate;
    double env = 0.5 - 0.5 * std::cos(2.0 * M_PI * pulse_phase);
    double shake = std::sin(2.0 * M_PI * shake_hz * t);
    auto& s = demo.samples[i];
    s.t = t;
    s.position = {0.38 + 0.030 * env * shake,
                  0.22 + 0.018 * env * std::sin(2.0 * M_PI * shake_hz * t + 1.1),
                  0.0};
    s.orientation = yaw_quat(0.5 + 0.2 * env * shake);
  }
  return demo;
}

}  // namespace robodrum
