#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "robodrum/analysis.hpp"

namespace robodrum {

// Stochastic two-bar pattern generator. A pattern is a 32-slot grid (two
// 4/4 bars at sixteenth resolution); density sets how many slots fill,
// syncopation biases fills toward off-beat slots, and every filled slot
// carries a per-cycle play probability so the realized rhythm keeps
// varying between repeats.

inline constexpr int kGridSlots = 32;
inline constexpr int kDrumCount = 6;
inline constexpr int kOnBeatStride = 4;  // quarter-note slots
inline constexpr int kOnBeatSlots = kGridSlots / kOnBeatStride;
inline constexpr int kOffBeatSlots = kGridSlots - kOnBeatSlots;
inline constexpr double kDefaultPlayProbMin = 0.6;

enum class StrikeTarget : uint8_t { kRim, kInterior };

inline const char* to_string(StrikeTarget t) {
  return t == StrikeTarget::kRim ? "rim" : "interior";
}

struct GenParams {
  double density = 0.5;      // [0, 1]
  double syncopation = 0.5;  // [0, 1]
  uint64_t seed = 0;

  GenParams clamped() const {
    return {std::clamp(density, 0.0, 1.0), std::clamp(syncopation, 0.0, 1.0),
            seed};
  }
};

struct DrumStrikeSpec {
  int drum = 0;  // 0..5
  StrikeTarget target = StrikeTarget::kInterior;
  double play_prob = 1.0;  // [0, 1]
};

struct GridPattern {
  std::array<std::optional<DrumStrikeSpec>, kGridSlots> slots;
  GenParams params_used;

  size_t filled_count() const {
    size_t n = 0;
    for (const auto& s : slots)
      if (s) ++n;
    return n;
  }
};

struct CycleRealization {
  std::vector<std::pair<int, DrumStrikeSpec>> strikes;  // slot order
};

inline bool is_on_beat(int slot) { return slot % kOnBeatStride == 0; }

/// Filled-slot count law: round(4 + 24 * density).
inline int pattern_fill_count(double density) {
  return static_cast<int>(std::lround(4.0 + 24.0 * std::clamp(density, 0.0, 1.0)));
}

/// Probability that a single fill lands in the off-beat category when
/// off-beat slots carry weight w = 1 + 3 * syncopation and on-beat slots
/// weight 1: 24w / (8 + 24w).
inline double offbeat_category_prob(double syncopation) {
  double w = 1.0 + 3.0 * std::clamp(syncopation, 0.0, 1.0);
  return kOffBeatSlots * w / (kOnBeatSlots + kOffBeatSlots * w);
}

/// Fills round(4 + 24*density) of the 32 slots. Each fill first picks the
/// on-/off-beat category with the fixed weighted probability above (falling
/// back to the other category when one runs out of free slots), then a
/// uniform free slot within it; drum and surface are uniform and play_prob
/// is uniform in [play_prob_min, 1]. Pure function of the params and seed.
inline GridPattern generate_pattern(const GenParams& params,
                                    double play_prob_min = kDefaultPlayProbMin) {
  GenParams p = params.clamped();
  GridPattern pattern;
  pattern.params_used = p;

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> drum_pick(0, kDrumCount - 1);
  std::uniform_int_distribution<int> target_pick(0, 1);

  std::vector<int> free_on, free_off;
  for (int s = 0; s < kGridSlots; ++s)
    (is_on_beat(s) ? free_on : free_off).push_back(s);

  const double p_off = offbeat_category_prob(p.syncopation);
  const int fills = pattern_fill_count(p.density);
  for (int i = 0; i < fills; ++i) {
    bool pick_off = unit(rng) < p_off;
    auto& pool = [&]() -> std::vector<int>& {
      if (pick_off) return free_off.empty() ? free_on : free_off;
      return free_on.empty() ? free_off : free_on;
    }();
    std::uniform_int_distribution<size_t> slot_pick(0, pool.size() - 1);
    size_t at = slot_pick(rng);
    int slot = pool[at];
    pool[at] = pool.back();
    pool.pop_back();

    DrumStrikeSpec spec;
    spec.drum = drum_pick(rng);
    spec.target = target_pick(rng) == 0 ? StrikeTarget::kRim
                                        : StrikeTarget::kInterior;
    spec.play_prob = play_prob_min + unit(rng) * (1.0 - play_prob_min);
    pattern.slots[slot] = spec;
  }
  return pattern;
}

/// Per-cycle realization: every occupied slot sounds independently with
/// its play probability. Output keeps slot order.
inline CycleRealization realize_cycle(const GridPattern& pattern,
                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CycleRealization out;
  for (int s = 0; s < kGridSlots; ++s) {
    if (!pattern.slots[s]) continue;
    if (unit(rng) < pattern.slots[s]->play_prob)
      out.strikes.emplace_back(s, *pattern.slots[s]);
  }
  return out;
}

/// A pattern retires after 32 bars, or earlier when the music density has
/// drifted by delta_sig onsets/s from its value at pattern birth. The
/// history spans the pattern's lifetime: front() is the estimate at birth.
inline bool should_regenerate(std::span<const DensityEstimate> history,
                              int bars_played, double delta_sig = 1.0,
                              int bars_limit = 32) {
  if (bars_played < 0)
    throw std::invalid_argument("should_regenerate: negative bar count");
  if (bars_played >= bars_limit) return true;
  if (history.empty()) return false;
  return std::abs(history.back().value - history.front().value) >= delta_sig;
}

// --- JSON (logging / replay) ------------------------------------------------

inline void to_json(nlohmann::json& j, const DrumStrikeSpec& s) {
  j = {{"drum", s.drum},
       {"target", to_string(s.target)},
       {"play_prob", s.play_prob}};
}

inline void from_json(const nlohmann::json& j, DrumStrikeSpec& s) {
  s.drum = j.at("drum").get<int>();
  s.target = j.at("target").get<std::string>() == "rim"
                 ? StrikeTarget::kRim
                 : StrikeTarget::kInterior;
  s.play_prob = j.at("play_prob").get<double>();
}

inline void to_json(nlohmann::json& j, const GridPattern& p) {
  auto slots = nlohmann::json::array();
  for (const auto& s : p.slots) {
    if (s)
      slots.push_back(*s);
    else
      slots.push_back(nullptr);
  }
  j = {{"slots", std::move(slots)},
       {"params",
        {{"density", p.params_used.density},
         {"syncopation", p.params_used.syncopation},
         {"seed", p.params_used.seed}}}};
}

inline void from_json(const nlohmann::json& j, GridPattern& p) {
  const auto& slots = j.at("slots");
  for (size_t i = 0; i < kGridSlots && i < slots.size(); ++i)
    p.slots[i] = slots[i].is_null()
                     ? std::nullopt
                     : std::optional<DrumStrikeSpec>(slots[i].get<DrumStrikeSpec>());
  const auto& params = j.at("params");
  p.params_used.density = params.at("density").get<double>();
  p.params_used.syncopation = params.at("syncopation").get<double>();
  p.params_used.seed = params.at("seed").get<uint64_t>();
}

inline void to_json(nlohmann::json& j, const CycleRealization& r) {
  auto strikes = nlohmann::json::array();
  for (const auto& [slot, spec] : r.strikes) {
    nlohmann::json s = spec;
    s["slot"] = slot;
    strikes.push_back(std::move(s));
  }
  j = {{"strikes", std::move(strikes)}};
}

}  // namespace robodrum
