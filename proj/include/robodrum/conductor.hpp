#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "robodrum/analysis.hpp"
#include "robodrum/commands.hpp"
#include "robodrum/rhythm.hpp"

namespace robodrum {

// The conductor owns the beat clock and the dataflow: it consumes feature
// records, (re)generates patterns, lays out each two-bar cycle as a list of
// latency-compensated events and dispatches them in simulated time. Every
// strike is dispatched actuation_latency ahead of its musical slot; while
// the volume or tempo-stability gate is off, pending events are cancelled
// and nothing new is scheduled.

struct BeatClock {
  double bpm = 120.0;
  SimMicros beat_interval = 500000;  // 60e6 / bpm
  SimMicros next_beat = 0;           // upcoming cycle start

  static BeatClock from_bpm(double bpm, SimMicros next_beat,
                            SimMicros actuation_latency) {
    BeatClock clock;
    clock.bpm = bpm;
    clock.beat_interval = static_cast<SimMicros>(std::llround(60e6 / bpm));
    clock.next_beat = next_beat;
    if (clock.beat_interval <= actuation_latency)
      throw SchedulingError("BeatClock: beat interval must exceed latency");
    return clock;
  }
};

struct ConductorConfig {
  SimMicros actuation_latency = 120000;  // strike dispatch lead
  SimMicros arm_latency = 150000;        // arm moves need a longer lead
  double p_snippet = 0.4;
  double delta_density_sig = 1.0;  // onsets/s change that retires a pattern
  double bpm_min = 70.0;
  double bpm_max = 180.0;
  double density_scale = 8.0;  // onsets/s mapped to generator density 1.0
  double play_prob_min = kDefaultPlayProbMin;
  SimMicros min_slot_spacing = 40000;  // thinner grids get eighth-note slots
  SimMicros schedule_lead = 500000;    // how early a cycle may be laid out
  int bars_limit = 32;
  std::array<SimMicros, 3> snippet_durations{2000000, 2000000, 3000000};
  uint64_t seed = 0;
};

/// Dispatch lead: commands leave this much before the strike sounds,
/// covering movement time and system latency.
inline SimMicros compute_dispatch_time(SimMicros strike_time,
                                       SimMicros actuation_latency) {
  if (actuation_latency < 0)
    throw std::invalid_argument("compute_dispatch_time: negative latency");
  if (strike_time < actuation_latency)
    throw SchedulingError(
        "compute_dispatch_time: strike earlier than the actuation latency");
  return strike_time - actuation_latency;
}

/// Snippet with probability p_snippet (uniform over the three snippets),
/// otherwise a random pose.
inline ArmAction select_arm_action(std::mt19937_64& rng, double p_snippet) {
  if (p_snippet < 0.0 || p_snippet > 1.0)
    throw std::invalid_argument("select_arm_action: p_snippet outside [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < p_snippet) {
    std::uniform_int_distribution<int> pick(1, 3);
    return ArmAction::make_snippet(pick(rng));
  }
  return ArmAction::random_pose();
}

struct ScheduledEvent {
  SimMicros dispatch = 0;
  SimMicros strike = 0;
  int rank = 0;  // drum index; the arm sorts as -1 on dispatch ties
  std::variant<StrikeCommand, ArmCommand> command;
  int slot = -1;
  int64_t pattern_id = -1;
  int bar_index = -1;

  bool is_strike() const {
    return std::holds_alternative<StrikeCommand>(command);
  }
};

/// Lays out one two-bar cycle: strikes on the sixteenth grid anchored at
/// clock.next_beat plus one arm action on the downbeat, all dispatched
/// their latency ahead. Events come back sorted by (dispatch, rank),
/// strictly increasing. Slot spacing below min_slot_spacing thins the
/// grid to eighth notes; a beat interval at or below the strike latency
/// is unschedulable and raises SchedulingError.
inline std::vector<ScheduledEvent> schedule_cycle(
    const CycleRealization& realization, const BeatClock& clock,
    const ConductorConfig& cfg, const ArmAction& action,
    int64_t pattern_id = 0, int bar_index = 0) {
  if (clock.beat_interval <= cfg.actuation_latency)
    throw SchedulingError("schedule_cycle: tempo too fast for the latency");

  const SimMicros cycle_start = clock.next_beat;
  const SimMicros slot_spacing = clock.beat_interval / 4;
  const int stride = slot_spacing < cfg.min_slot_spacing ? 2 : 1;

  std::vector<ScheduledEvent> events;
  events.reserve(realization.strikes.size() + 1);

  ScheduledEvent arm_event;
  arm_event.strike = cycle_start;
  arm_event.dispatch = compute_dispatch_time(cycle_start, cfg.arm_latency);
  arm_event.rank = -1;
  ArmCommand arm_cmd;
  arm_cmd.action = action;
  arm_cmd.duration = action.kind == ArmAction::Kind::kSnippet
                         ? cfg.snippet_durations.at(action.snippet - 1)
                         : clock.beat_interval;
  arm_event.command = arm_cmd;
  arm_event.pattern_id = pattern_id;
  arm_event.bar_index = bar_index;
  events.push_back(arm_event);

  for (const auto& [slot, spec] : realization.strikes) {
    if (slot % stride != 0) continue;
    ScheduledEvent ev;
    ev.strike = cycle_start + slot * clock.beat_interval / 4;
    ev.dispatch = compute_dispatch_time(ev.strike, cfg.actuation_latency);
    ev.rank = spec.drum;
    ev.command = StrikeCommand{spec.drum, spec.target, 0};
    ev.slot = slot;
    ev.pattern_id = pattern_id;
    ev.bar_index = bar_index + (slot >= kGridSlots / 2 ? 1 : 0);
    events.push_back(ev);
  }

  std::sort(events.begin(), events.end(),
            [](const ScheduledEvent& a, const ScheduledEvent& b) {
              return a.dispatch != b.dispatch ? a.dispatch < b.dispatch
                                              : a.rank < b.rank;
            });
  return events;
}

struct PatternBirth {
  SimMicros at = 0;
  int64_t id = 0;
  GridPattern pattern;
};

class Conductor {
 public:
  explicit Conductor(ConductorConfig cfg = {})
      : cfg_(cfg), rng_(cfg.seed ^ 0x7b0ca57a11efull) {}

  void ingest(const FeatureRecord& rec) {
    if (const auto* gate = std::get_if<GateChange>(&rec.payload)) {
      volume_gate_ = gate->active;
    } else if (const auto* density = std::get_if<DensityEstimate>(&rec.payload)) {
      latest_density_ = *density;
    } else if (const auto* tempo = std::get_if<TempoEstimate>(&rec.payload)) {
      latest_tempo_ = *tempo;
    }
  }

  /// Event-loop tick: cancels on gate-off, lays out cycles while the gates
  /// hold, and returns every event whose dispatch time has arrived, in
  /// dispatch order (commands carry their exact dispatch stamp).
  std::vector<ScheduledEvent> step(SimMicros now) {
    if (now < last_now_)
      throw std::logic_error("Conductor: simulated clock went backwards");
    last_now_ = now;

    if (!gates_on()) {
      if (!queue_.empty()) {
        cancelled_ += queue_.size();
        queue_.clear();
      }
      next_cycle_start_.reset();
    } else {
      maybe_schedule(now);
    }

    std::vector<ScheduledEvent> due;
    while (!queue_.empty() && queue_.front().dispatch <= now) {
      ScheduledEvent ev = queue_.front();
      queue_.pop_front();
      if (auto* strike = std::get_if<StrikeCommand>(&ev.command))
        strike->issued_at = ev.dispatch;
      else
        std::get<ArmCommand>(ev.command).issued_at = ev.dispatch;
      due.push_back(std::move(ev));
      ++dispatched_;
    }
    return due;
  }

  std::vector<PatternBirth> drain_pattern_births() {
    return std::exchange(pattern_births_, {});
  }

  bool gates_on() const {
    return volume_gate_ && latest_tempo_ && latest_tempo_->stable;
  }
  int64_t pattern_id() const { return pattern_id_; }
  uint64_t cancelled_events() const { return cancelled_; }
  uint64_t skipped_cycles() const { return skipped_; }
  uint64_t dispatched_events() const { return dispatched_; }
  const ConductorConfig& config() const { return cfg_; }

 private:
  void maybe_schedule(SimMicros now) {
    if (!queue_.empty()) return;
    const SimMicros max_latency =
        std::max(cfg_.actuation_latency, cfg_.arm_latency);

    const double bpm = latest_tempo_->bpm;
    const auto interval = static_cast<SimMicros>(std::llround(60e6 / bpm));
    const SimMicros anchor = to_micros(latest_tempo_->beat_phase);

    SimMicros start;
    if (next_cycle_start_) {
      // keep cycles contiguous but re-snap to the live beat grid
      SimMicros desired = *next_cycle_start_;
      auto k = static_cast<SimMicros>(std::llround(
          static_cast<double>(desired - anchor) / static_cast<double>(interval)));
      start = anchor + k * interval;
      while (start < now + max_latency) start += interval;
    } else {
      // first cycle (or resume after a gate pause): next predicted downbeat
      // with dispatch feasible
      SimMicros earliest = now + max_latency;
      auto k = static_cast<SimMicros>(std::ceil(
          static_cast<double>(earliest - anchor) / static_cast<double>(interval)));
      if (k < 1) k = 1;
      start = anchor + k * interval;
    }
    if (now + cfg_.schedule_lead + max_latency < start) return;  // not yet

    if (pattern_ && should_regenerate(density_span(), bars_played_,
                                      cfg_.delta_density_sig, cfg_.bars_limit))
      pattern_.reset();
    if (!pattern_) {
      GenParams params;
      params.density = latest_density_
                           ? std::clamp(latest_density_->value / cfg_.density_scale,
                                        0.0, 1.0)
                           : 0.5;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      params.syncopation = unit(rng_);
      params.seed = cfg_.seed * 0x9e3779b97f4a7c15ull +
                    static_cast<uint64_t>(pattern_id_ + 1);
      pattern_ = generate_pattern(params, cfg_.play_prob_min);
      ++pattern_id_;
      bars_played_ = 0;
      birth_density_ = latest_density_;
      pattern_births_.push_back({start, pattern_id_, *pattern_});
    }

    try {
      auto clock = BeatClock::from_bpm(bpm, start, cfg_.actuation_latency);
      auto realization = realize_cycle(*pattern_, rng_);
      auto action = select_arm_action(rng_, cfg_.p_snippet);
      auto events = schedule_cycle(realization, clock, cfg_, action,
                                   pattern_id_, global_bar_);
      queue_.assign(events.begin(), events.end());
    } catch (const SchedulingError&) {
      ++skipped_;  // tempo too fast: skip this cycle, try again later
    }
    bars_played_ += 2;
    global_bar_ += 2;
    next_cycle_start_ = start + 8 * interval;
  }

  std::span<const DensityEstimate> density_span() {
    density_pair_[0] = birth_density_.value_or(DensityEstimate{});
    density_pair_[1] = latest_density_.value_or(density_pair_[0]);
    if (!birth_density_) return {};
    return {density_pair_.data(), 2};
  }

  ConductorConfig cfg_;
  std::mt19937_64 rng_;
  bool volume_gate_ = false;
  std::optional<TempoEstimate> latest_tempo_;
  std::optional<DensityEstimate> latest_density_;
  std::optional<DensityEstimate> birth_density_;
  std::array<DensityEstimate, 2> density_pair_{};
  std::optional<GridPattern> pattern_;
  int64_t pattern_id_ = 0;
  int bars_played_ = 0;
  int global_bar_ = 0;
  std::optional<SimMicros> next_cycle_start_;
  std::deque<ScheduledEvent> queue_;
  std::vector<PatternBirth> pattern_births_;
  SimMicros last_now_ = 0;
  uint64_t cancelled_ = 0;
  uint64_t skipped_ = 0;
  uint64_t dispatched_ = 0;
};

}  // namespace robodrum
