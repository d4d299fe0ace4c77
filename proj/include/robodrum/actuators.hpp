#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "robodrum/commands.hpp"
#include "robodrum/kinematics.hpp"
#include "robodrum/trajectory.hpp"

namespace robodrum {

// Simulated endpoints: a six-motor dual-beater drum bank and a virtual arm
// with injectable safety stops supervised by a watchdog. Every command
// resolves to exactly one actuation record, either ok or dropped with a
// reason; a busy actuator drops rather than queues so strikes never slip
// off the beat.

enum class Outcome : uint8_t { kOk, kDroppedBusy, kDroppedSafety };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::kOk: return "ok";
    case Outcome::kDroppedBusy: return "dropped(busy)";
    case Outcome::kDroppedSafety: return "dropped(safety)";
  }
  return "?";
}

struct ActuationRecord {
  SimMicros t_dispatch = 0;
  std::optional<SimMicros> t_actual;  // strike/motion-start time for ok
  std::string actuator;               // "drum3", "arm"
  Outcome outcome = Outcome::kOk;
};

// ---------------------------------------------------------------------------
// Drum bank

struct DrumMotorConfig {
  double min_angle = -0.6;   // rim extreme, radians
  double rest_angle = 0.0;
  double max_angle = 0.6;    // interior extreme
  SimMicros sweep = 40000;   // rest -> extreme travel; strike sounds then

  void validate() const {
    if (!(min_angle < rest_angle && rest_angle < max_angle))
      throw std::invalid_argument(
          "DrumMotorConfig: need min_angle < rest_angle < max_angle");
    if (sweep <= 0)
      throw std::invalid_argument("DrumMotorConfig: sweep time must be > 0");
  }
};

/// One dual-beater motor. The beater sweeps rest -> extreme -> rest; the
/// strike sounds on reaching the extreme (rim = min register, interior =
/// max register). The angle trace never leaves [min_angle, max_angle].
class DrumMotor {
 public:
  explicit DrumMotor(DrumMotorConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  bool busy(SimMicros now) const { return sweep_started_ && now < busy_until_; }

  /// Starts a sweep if idle; returns the strike time, or nothing if busy.
  std::optional<SimMicros> strike(StrikeTarget target, SimMicros now) {
    if (busy(now)) return std::nullopt;
    sweep_started_ = now;
    busy_until_ = now + 2 * cfg_.sweep;
    target_ = target;
    return now + cfg_.sweep;
  }

  /// Beater angle at any simulated time (piecewise linear sweep model).
  double angle_at(SimMicros t) const {
    if (!sweep_started_ || t < *sweep_started_ || t >= busy_until_)
      return cfg_.rest_angle;
    double extreme =
        target_ == StrikeTarget::kRim ? cfg_.min_angle : cfg_.max_angle;
    auto elapsed = t - *sweep_started_;
    double frac;
    if (elapsed < cfg_.sweep)
      frac = static_cast<double>(elapsed) / static_cast<double>(cfg_.sweep);
    else
      frac = static_cast<double>(busy_until_ - t) /
             static_cast<double>(cfg_.sweep);
    return cfg_.rest_angle + frac * (extreme - cfg_.rest_angle);
  }

  const DrumMotorConfig& config() const { return cfg_; }

 private:
  DrumMotorConfig cfg_;
  std::optional<SimMicros> sweep_started_;
  SimMicros busy_until_ = 0;
  StrikeTarget target_ = StrikeTarget::kInterior;
};

class DrumBank {
 public:
  explicit DrumBank(const std::array<DrumMotorConfig, kDrumCount>& cfgs)
      : motors_{DrumMotor(cfgs[0]), DrumMotor(cfgs[1]), DrumMotor(cfgs[2]),
                DrumMotor(cfgs[3]), DrumMotor(cfgs[4]), DrumMotor(cfgs[5])} {}

  DrumBank() : DrumBank(uniform_configs(DrumMotorConfig{})) {}

  static std::array<DrumMotorConfig, kDrumCount> uniform_configs(
      const DrumMotorConfig& cfg) {
    std::array<DrumMotorConfig, kDrumCount> out;
    out.fill(cfg);
    return out;
  }

  ActuationRecord execute_strike(const StrikeCommand& cmd, SimMicros now) {
    if (cmd.drum < 0 || cmd.drum >= kDrumCount)
      throw std::invalid_argument("execute_strike: drum id out of range");
    ActuationRecord rec;
    rec.t_dispatch = now;
    rec.actuator = "drum" + std::to_string(cmd.drum);
    if (auto strike_t = motors_[cmd.drum].strike(cmd.target, now)) {
      rec.outcome = Outcome::kOk;
      rec.t_actual = *strike_t;
    } else {
      rec.outcome = Outcome::kDroppedBusy;
    }
    return rec;
  }

  DrumMotor& motor(int id) { return motors_.at(static_cast<size_t>(id)); }
  const DrumMotor& motor(int id) const {
    return motors_.at(static_cast<size_t>(id));
  }

 private:
  std::array<DrumMotor, kDrumCount> motors_;
};

// ---------------------------------------------------------------------------
// Virtual arm

struct VirtualArmConfig {
  JointConfig rest_config{0.3, 1.0, -0.8};
  std::array<double, 3> pose_box_lo{-1.5, -1.5, -1.5};
  std::array<double, 3> pose_box_hi{1.5, 1.5, 1.5};
  uint64_t seed = 0;
};

/// idle | playing_snippet | moving | safety_stopped. A safety stop blocks
/// every command (dropped(safety), never a throw) until the watchdog
/// resets the arm back to idle at its rest configuration.
class VirtualArm {
 public:
  enum class State : uint8_t { kIdle, kPlayingSnippet, kMoving, kSafetyStopped };

  explicit VirtualArm(VirtualArmConfig cfg = {})
      : cfg_(cfg), rng_(cfg.seed ^ 0xa5a5a5a5deadbeefull) {
    current_config_ = cfg_.rest_config;
  }

  State state(SimMicros now) const {
    if (state_ == State::kSafetyStopped) return State::kSafetyStopped;
    if (state_ != State::kIdle && now >= busy_until_) return State::kIdle;
    return state_;
  }

  int active_snippet(SimMicros now) const {
    return state(now) == State::kPlayingSnippet ? snippet_ : 0;
  }

  ActuationRecord execute(const ArmCommand& cmd, SimMicros now) {
    ActuationRecord rec;
    rec.t_dispatch = now;
    rec.actuator = "arm";
    switch (state(now)) {
      case State::kSafetyStopped:
        rec.outcome = Outcome::kDroppedSafety;
        return rec;
      case State::kPlayingSnippet:
      case State::kMoving:
        rec.outcome = Outcome::kDroppedBusy;
        return rec;
      case State::kIdle:
        break;
    }
    if (cmd.action.kind == ArmAction::Kind::kSnippet) {
      state_ = State::kPlayingSnippet;
      snippet_ = cmd.action.snippet;
    } else {
      state_ = State::kMoving;
      current_config_ =
          sample_random_config(rng_, cfg_.pose_box_lo, cfg_.pose_box_hi);
    }
    busy_until_ = now + cmd.duration;
    rec.outcome = Outcome::kOk;
    rec.t_actual = now;
    return rec;
  }

  /// Force-sensing auto-shutoff: truncates any motion in progress.
  void inject_safety_stop(SimMicros at) {
    state_ = State::kSafetyStopped;
    stopped_at_ = at;
    busy_until_ = at;
    ++stop_count_;
  }

  /// Supervisor tick. After recovery_delay in safety stop the arm resets
  /// to idle at the rest configuration; returns the reset time when that
  /// happens on this tick.
  std::optional<SimMicros> watchdog_step(SimMicros now,
                                         SimMicros recovery_delay = 5000000) {
    if (state_ != State::kSafetyStopped) return std::nullopt;
    if (now - stopped_at_ < recovery_delay) return std::nullopt;
    state_ = State::kIdle;
    busy_until_ = stopped_at_ + recovery_delay;
    current_config_ = cfg_.rest_config;
    total_stopped_ += recovery_delay;
    ++recovery_count_;
    return stopped_at_ + recovery_delay;
  }

  int stop_count() const { return stop_count_; }
  int recovery_count() const { return recovery_count_; }

  /// Cumulative time spent safety-stopped, including a still-open stop.
  SimMicros total_stopped(SimMicros now) const {
    SimMicros open =
        state_ == State::kSafetyStopped ? std::max<SimMicros>(0, now - stopped_at_) : 0;
    return total_stopped_ + open;
  }

  const JointConfig& current_config() const { return current_config_; }

 private:
  VirtualArmConfig cfg_;
  State state_ = State::kIdle;
  SimMicros busy_until_ = 0;
  SimMicros stopped_at_ = 0;
  SimMicros total_stopped_ = 0;
  int snippet_ = 0;
  int stop_count_ = 0;
  int recovery_count_ = 0;
  JointConfig current_config_;
  std::mt19937_64 rng_;
};

}  // namespace robodrum
