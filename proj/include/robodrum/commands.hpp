#pragma once

#include <cmath>
#include <cstdint>

#include "robodrum/rhythm.hpp"

namespace robodrum {

// Commands exchanged between the conductor and the actuators. All
// scheduling runs on an integer-microsecond simulated clock so latency
// arithmetic is exact; seconds exist only at the analysis boundary.

using SimMicros = int64_t;

inline SimMicros to_micros(double seconds) {
  return static_cast<SimMicros>(std::llround(seconds * 1e6));
}

inline double to_seconds(SimMicros us) {
  return static_cast<double>(us) * 1e-6;
}

struct StrikeCommand {
  int drum = 0;  // 0..5
  StrikeTarget target = StrikeTarget::kInterior;
  SimMicros issued_at = 0;
};

struct ArmAction {
  enum class Kind : uint8_t { kSnippet, kRandomPose };
  Kind kind = Kind::kRandomPose;
  int snippet = 0;  // 1..3 when kind == kSnippet

  static ArmAction make_snippet(int index) {
    return {Kind::kSnippet, index};
  }
  static ArmAction random_pose() { return {Kind::kRandomPose, 0}; }
};

struct ArmCommand {
  ArmAction action;
  SimMicros duration = 0;  // how long the motion occupies the arm
  SimMicros issued_at = 0;
};

}  // namespace robodrum
