#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "robodrum/audio.hpp"

namespace robodrum {

// Synthetic click sources. Each generator returns the rendered samples
// together with the exact event times it placed, which the tests use as
// ground truth.

struct ClickTrackSpec {
  double bpm = 120.0;
  double duration_s = 30.0;
  double jitter_pct = 0.0;  // Gaussian sigma as % of the beat period
  double amplitude = 0.9;
  double click_len_s = 0.003;
  uint64_t seed = 0;
  double sample_rate = kDefaultSampleRate;
};

struct PoissonClickSpec {
  double rate_hz = 3.0;  // mean events per second
  double duration_s = 60.0;
  double amplitude = 0.9;
  double click_len_s = 0.003;
  uint64_t seed = 0;
  double sample_rate = kDefaultSampleRate;
};

struct SynthTrack {
  std::vector<double> samples;
  double sample_rate = kDefaultSampleRate;
  std::vector<double> event_times;  // exact, in seconds
};

namespace detail {

// One broadband burst shape, shared by every click in a track so that
// identical clicks produce identical spectra.
inline std::vector<double> click_shape(double len_s, double rate,
                                       uint64_t seed) {
  auto n = std::max<size_t>(8, static_cast<size_t>(std::lround(len_s * rate)));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<double> shape(n);
  for (size_t i = 0; i < n; ++i) {
    double env = std::sin(M_PI * (i + 1) / static_cast<double>(n + 1));
    shape[i] = env * noise(rng);
  }
  // normalize to unit peak
  double peak = 0.0;
  for (double s : shape) peak = std::max(peak, std::abs(s));
  for (double& s : shape) s /= peak;
  return shape;
}

inline void mix_clicks(SynthTrack& track, double amplitude, double len_s) {
  auto shape = click_shape(len_s, track.sample_rate, 1234567);
  for (double t : track.event_times) {
    auto start = static_cast<size_t>(std::lround(t * track.sample_rate));
    for (size_t i = 0; i < shape.size(); ++i) {
      size_t idx = start + i;
      if (idx >= track.samples.size()) break;
      track.samples[idx] += amplitude * shape[i];
    }
  }
  for (double& s : track.samples) s = std::clamp(s, -1.0, 1.0);
}

}  // namespace detail

/// Metronome track. With jitter_pct > 0 each click is displaced by
/// N(0, jitter_pct/100 * period), clamped so times stay increasing.
inline SynthTrack make_click_track(const ClickTrackSpec& spec) {
  SynthTrack track;
  track.sample_rate = spec.sample_rate;
  track.samples.assign(
      static_cast<size_t>(std::lround(spec.duration_s * spec.sample_rate)),
      0.0);

  const double period = 60.0 / spec.bpm;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> jitter(0.0,
                                          spec.jitter_pct / 100.0 * period);
  double prev = -1.0;
  for (double t0 = period / 2; t0 < spec.duration_s - spec.click_len_s;
       t0 += period) {
    double t = t0;
    if (spec.jitter_pct > 0.0) t += jitter(rng);
    t = std::clamp(t, prev + 0.001, spec.duration_s - spec.click_len_s);
    track.event_times.push_back(t);
    prev = t;
  }
  detail::mix_clicks(track, spec.amplitude, spec.click_len_s);
  return track;
}

/// Homogeneous Poisson click process (exponential gaps).
inline SynthTrack make_poisson_clicks(const PoissonClickSpec& spec) {
  SynthTrack track;
  track.sample_rate = spec.sample_rate;
  track.samples.assign(
      static_cast<size_t>(std::lround(spec.duration_s * spec.sample_rate)),
      0.0);

  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gap(spec.rate_hz);
  for (double t = gap(rng); t < spec.duration_s - spec.click_len_s;
       t += gap(rng))
    track.event_times.push_back(t);
  detail::mix_clicks(track, spec.amplitude, spec.click_len_s);
  return track;
}

/// Click train with no coherent tempo: gaps drawn uniformly from
/// [min_gap_s, max_gap_s]. Used to exercise the stability gate.
inline SynthTrack make_unstable_track(double duration_s, uint64_t seed,
                                      double min_gap_s = 0.3,
                                      double max_gap_s = 0.9,
                                      double amplitude = 0.9,
                                      double sample_rate = kDefaultSampleRate) {
  SynthTrack track;
  track.sample_rate = sample_rate;
  track.samples.assign(
      static_cast<size_t>(std::lround(duration_s * sample_rate)), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(min_gap_s, max_gap_s);
  for (double t = gap(rng); t < duration_s - 0.003; t += gap(rng))
    track.event_times.push_back(t);
  detail::mix_clicks(track, amplitude, 0.003);
  return track;
}

}  // namespace robodrum
