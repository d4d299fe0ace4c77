#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "robodrum/audio.hpp"
#include "robodrum/errors.hpp"

namespace robodrum {

// Feature extraction chain: volume gate -> onset detection -> density and
// tempo. Onsets come from half-wave-rectified log-magnitude spectral flux
// (1024-sample Hann window, 256-sample hop) with an adaptive threshold of
// median(trailing flux) + offset and a minimum inter-onset gap. Tempo is an
// inter-onset-interval histogram with 1 BPM bins, octave-folded into the
// configured range, exponentially smoothed across estimates.

struct OnsetEvent {
  double time = 0.0;      // seconds
  double strength = 0.0;  // flux magnitude at emission, >= threshold
};

struct DensityEstimate {
  double value = 0.0;   // onsets per second over the trailing window
  double window = 0.0;  // seconds
  double time = 0.0;    // seconds
};

struct TempoEstimate {
  double bpm = 0.0;
  double beat_phase = 0.0;  // time of the most recent detected beat
  double confidence = 0.0;  // histogram peak sharpness, in [0, 1]
  bool stable = false;
};

// ---------------------------------------------------------------------------
// Onset detection

struct OnsetDetectorConfig {
  double sample_rate = kDefaultSampleRate;
  int window = 1024;
  int hop = 256;
  double median_window_s = 1.0;   // trailing flux window for the threshold
  double threshold_offset = 0.05;
  double min_gap_s = 0.05;
  double log_gain = 100.0;  // L[k] = log1p(log_gain * |X[k]|)
};

class OnsetDetector {
 public:
  explicit OnsetDetector(OnsetDetectorConfig cfg = {}) : cfg_(cfg) {
    hann_.resize(cfg_.window);
    for (int i = 0; i < cfg_.window; ++i)
      hann_[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / cfg_.window);
    window_buf_.assign(cfg_.window, 0.0);
    n_bins_ = cfg_.window / 2 + 1;
    prev_mags_.assign(n_bins_, 0.0);
    median_len_ = std::max<size_t>(
        3, static_cast<size_t>(
               std::lround(cfg_.median_window_s * cfg_.sample_rate / cfg_.hop)));
  }

  void push(const AudioFrame& frame) {
    if (frame.samples.empty())
      throw std::invalid_argument("OnsetDetector: empty frame");
    if (frame.sample_rate != cfg_.sample_rate)
      throw ConfigError("OnsetDetector: sample rate changed mid-stream");
    push_samples(frame.samples);
  }

  void push_samples(std::span<const double> samples) {
    pending_.insert(pending_.end(), samples.begin(), samples.end());
    size_t off = 0;
    while (pending_.size() - off >= static_cast<size_t>(cfg_.hop)) {
      process_hop({pending_.data() + off, static_cast<size_t>(cfg_.hop)});
      off += cfg_.hop;
    }
    pending_.erase(pending_.begin(), pending_.begin() + off);
  }

  std::vector<OnsetEvent> drain() { return std::exchange(out_, {}); }

  /// Re-prime the spectral state. Called when the volume gate re-opens so
  /// the jump from the gated-off region does not read as an onset.
  void reset_spectral_state() {
    warmup_ = true;
    flux_ring_.clear();
    f1_ = f2_ = 0.0;
    have_f1_ = have_f2_ = false;
  }

  /// Realigns the internal clock to an absolute stream position (samples).
  /// Needed when upstream gating withholds stretches of the stream.
  void seek(int64_t absolute_sample) { samples_seen_ = absolute_sample; }

  double hop_seconds() const { return cfg_.hop / cfg_.sample_rate; }
  const OnsetDetectorConfig& config() const { return cfg_; }

 private:
  void process_hop(std::span<const double> hop) {
    std::copy(window_buf_.begin() + cfg_.hop, window_buf_.end(),
              window_buf_.begin());
    std::copy(hop.begin(), hop.end(), window_buf_.end() - cfg_.hop);
    samples_seen_ += cfg_.hop;

    scratch_td_.resize(cfg_.window);
    for (int i = 0; i < cfg_.window; ++i)
      scratch_td_[i] = window_buf_[i] * hann_[i];
    fft_.fwd(scratch_fd_, scratch_td_);

    const double norm = 4.0 / cfg_.window;  // ~unit scale for a Hann window
    double flux = 0.0;
    for (int k = 0; k < n_bins_; ++k) {
      double mag = std::log1p(cfg_.log_gain * std::abs(scratch_fd_[k]) * norm);
      if (!warmup_) flux += std::max(0.0, mag - prev_mags_[k]);
      prev_mags_[k] = mag;
    }
    if (warmup_) {
      warmup_ = false;
      return;
    }
    flux /= n_bins_;

    flux_ring_.push_back(flux);
    if (flux_ring_.size() > median_len_) flux_ring_.pop_front();

    // Evaluate the previous hop as a peak candidate now that we can see
    // one hop of lookahead.
    if (have_f2_ && f1_ >= f2_ && f1_ > flux && f1_ >= f1_threshold_) {
      const double hop_dt = cfg_.hop / cfg_.sample_rate;
      double t_prev =
          (samples_seen_ - cfg_.hop - cfg_.hop / 2.0) / cfg_.sample_rate;
      double denom = f2_ - 2.0 * f1_ + flux;
      double delta =
          denom < -1e-12 ? std::clamp(0.5 * (f2_ - flux) / denom, -0.5, 0.5)
                         : 0.0;
      double t_onset = t_prev + delta * hop_dt;
      if (!last_onset_ || t_onset - *last_onset_ >= cfg_.min_gap_s) {
        out_.push_back({t_onset, f1_});
        last_onset_ = t_onset;
      }
    }

    f2_ = f1_;
    have_f2_ = have_f1_;
    f1_ = flux;
    f1_threshold_ = threshold();
    have_f1_ = true;
  }

  double threshold() const {
    scratch_med_.assign(flux_ring_.begin(), flux_ring_.end());
    auto mid = scratch_med_.begin() + (scratch_med_.size() - 1) / 2;
    std::nth_element(scratch_med_.begin(), mid, scratch_med_.end());
    return *mid + cfg_.threshold_offset;
  }

  OnsetDetectorConfig cfg_;
  std::vector<double> hann_;
  std::vector<double> window_buf_;
  std::vector<double> pending_;
  std::vector<double> prev_mags_;
  Eigen::FFT<double> fft_;
  std::vector<double> scratch_td_;
  std::vector<std::complex<double>> scratch_fd_;
  mutable std::vector<double> scratch_med_;
  std::deque<double> flux_ring_;
  std::vector<OnsetEvent> out_;
  std::optional<double> last_onset_;
  int n_bins_ = 0;
  size_t median_len_ = 0;
  int64_t samples_seen_ = 0;
  double f1_ = 0.0, f2_ = 0.0, f1_threshold_ = 0.0;
  bool have_f1_ = false, have_f2_ = false;
  bool warmup_ = true;
};

// ---------------------------------------------------------------------------
// Density

/// Exact trailing-window onset density: |{o : now - window <= o.time <= now}|
/// divided by the window length.
inline DensityEstimate compute_density(std::span<const OnsetEvent> onsets,
                                       double window, double now) {
  if (!(window > 0.0))
    throw std::invalid_argument("compute_density: non-positive window");
  size_t count = 0;
  for (const auto& o : onsets) {
    if (o.time > now)
      throw std::invalid_argument("compute_density: onset after now");
    if (o.time >= now - window) ++count;
  }
  return {static_cast<double>(count) / window, window, now};
}

// ---------------------------------------------------------------------------
// Tempo

struct TempoConfig {
  double bpm_min = 70.0;
  double bpm_max = 180.0;
  size_t min_onsets = 4;
  double history_s = 12.0;     // trailing onset window the tracker feeds from
  double smooth_alpha = 0.25;  // exponential smoothing of successive estimates
  double conf_min = 0.2;       // confidence floor for the stable flag
};

/// Folds a tempo into [lo, hi] by repeated doubling/halving. Returns
/// nothing when the range cannot hold any octave alias of the input.
inline std::optional<double> fold_bpm(double bpm, double lo, double hi) {
  if (!(bpm > 0.0) || !(lo > 0.0) || !(hi >= lo)) return std::nullopt;
  for (int i = 0; i < 64 && bpm < lo; ++i) bpm *= 2.0;
  for (int i = 0; i < 64 && bpm > hi; ++i) bpm /= 2.0;
  if (bpm < lo || bpm > hi) return std::nullopt;
  return bpm;
}

/// One-shot histogram estimate over the given onset history. Returns
/// nothing when there are fewer than cfg.min_onsets onsets or no IOI can
/// be folded into the range. The result is unsmoothed and carries
/// stable = false; smoothing and the stability verdict live upstream.
inline std::optional<TempoEstimate> estimate_tempo(
    std::span<const OnsetEvent> onsets, const TempoConfig& cfg = {}) {
  if (onsets.size() < cfg.min_onsets) return std::nullopt;

  const int n_bins = static_cast<int>(std::ceil(cfg.bpm_max - cfg.bpm_min)) + 1;
  std::vector<int> count(n_bins, 0);
  std::vector<double> sum(n_bins, 0.0);
  int total = 0;
  for (size_t i = 1; i < onsets.size(); ++i) {
    double gap = onsets[i].time - onsets[i - 1].time;
    if (gap <= 1e-6) continue;
    auto folded = fold_bpm(60.0 / gap, cfg.bpm_min, cfg.bpm_max);
    if (!folded) continue;
    int bin = std::min(n_bins - 1,
                       static_cast<int>(std::floor(*folded - cfg.bpm_min)));
    ++count[bin];
    sum[bin] += *folded;
    ++total;
  }
  if (total == 0) return std::nullopt;

  int winner = 0;
  for (int b = 1; b < n_bins; ++b)
    if (count[b] > count[winner]) winner = b;

  int cnt3 = 0;
  double sum3 = 0.0;
  for (int b = std::max(0, winner - 1); b <= std::min(n_bins - 1, winner + 1);
       ++b) {
    cnt3 += count[b];
    sum3 += sum[b];
  }

  TempoEstimate est;
  est.bpm = sum3 / cnt3;
  est.confidence = static_cast<double>(cnt3) / total;
  est.stable = false;

  // Beat phase: dominant onset phase modulo the beat interval, then the
  // most recent onset sitting in (or next to) that phase bin.
  const double interval = 60.0 / est.bpm;
  constexpr int kPhaseBins = 16;
  int phase_count[kPhaseBins] = {};
  auto phase_bin = [&](double t) {
    double ph = std::fmod(t, interval) / interval;
    if (ph < 0.0) ph += 1.0;
    return std::min(kPhaseBins - 1, static_cast<int>(ph * kPhaseBins));
  };
  for (const auto& o : onsets) ++phase_count[phase_bin(o.time)];
  int dom = 0;
  for (int b = 1; b < kPhaseBins; ++b)
    if (phase_count[b] > phase_count[dom]) dom = b;
  est.beat_phase = onsets.back().time;
  for (auto it = onsets.rbegin(); it != onsets.rend(); ++it) {
    int b = phase_bin(it->time);
    int d = std::abs(b - dom);
    if (std::min(d, kPhaseBins - d) <= 1) {
      est.beat_phase = it->time;
      break;
    }
  }
  return est;
}

/// Stateful wrapper: windows the onset history and smooths successive raw
/// histogram estimates.
class TempoTracker {
 public:
  explicit TempoTracker(TempoConfig cfg = {}) : cfg_(cfg) {}

  std::optional<TempoEstimate> update(std::span<const OnsetEvent> history) {
    if (history.empty()) return std::nullopt;
    double t_last = history.back().time;
    size_t first = 0;
    while (first < history.size() &&
           history[first].time < t_last - cfg_.history_s)
      ++first;
    auto raw = estimate_tempo(history.subspan(first), cfg_);
    if (!raw) return std::nullopt;
    smoothed_ = smoothed_ ? cfg_.smooth_alpha * raw->bpm +
                                (1.0 - cfg_.smooth_alpha) * *smoothed_
                          : raw->bpm;
    TempoEstimate est = *raw;
    est.bpm = *smoothed_;
    return est;
  }

  void reset() { smoothed_.reset(); }
  const TempoConfig& config() const { return cfg_; }

 private:
  TempoConfig cfg_;
  std::optional<double> smoothed_;
};

// ---------------------------------------------------------------------------
// Stability

struct StabilityConfig {
  size_t n_stab = 8;     // estimates considered
  double cv_max = 0.04;  // coefficient-of-variation ceiling
  double dev_max = 6.0;  // max pairwise BPM deviation
};

/// Stable iff the last n_stab estimates vary little: CV of bpm <= cv_max
/// and max pairwise deviation <= dev_max. Fewer estimates than n_stab is
/// unstable by definition.
inline bool assess_stability(std::span<const TempoEstimate> recent,
                             const StabilityConfig& cfg = {}) {
  if (recent.size() < cfg.n_stab) return false;
  auto tail = recent.subspan(recent.size() - cfg.n_stab);
  double mean = 0.0, lo = tail.front().bpm, hi = tail.front().bpm;
  for (const auto& e : tail) {
    mean += e.bpm;
    lo = std::min(lo, e.bpm);
    hi = std::max(hi, e.bpm);
  }
  mean /= static_cast<double>(tail.size());
  if (!(mean > 0.0)) return false;
  double var = 0.0;
  for (const auto& e : tail) var += (e.bpm - mean) * (e.bpm - mean);
  var /= static_cast<double>(tail.size());
  double cv = std::sqrt(var) / mean;
  return cv <= cfg.cv_max && (hi - lo) <= cfg.dev_max;
}

// ---------------------------------------------------------------------------
// Pipeline

struct GateChange {
  bool active = false;
};

struct FeatureRecord {
  double time = 0.0;
  std::variant<GateChange, OnsetEvent, DensityEstimate, TempoEstimate> payload;
};

struct AnalysisConfig {
  double sample_rate = kDefaultSampleRate;
  double volume_threshold = 0.02;  // RMS
  double gate_window_s = 1.0;      // trailing RMS window for the gate
  OnsetDetectorConfig onset;
  TempoConfig tempo;
  StabilityConfig stability;
  double density_window_s = 4.0;
  double density_period_s = 0.25;
  size_t queue_capacity = 8192;  // bounded output queue, oldest dropped
};

/// Single-threaded per stream. Emits immutable timestamped records into a
/// bounded queue; when the consumer lags, the oldest records are dropped
/// and counted rather than blocking the stream.
class AnalysisPipeline {
 public:
  explicit AnalysisPipeline(AnalysisConfig cfg = {})
      : cfg_(cfg), detector_(cfg.onset) {
    if (cfg_.onset.sample_rate != cfg_.sample_rate)
      throw ConfigError("AnalysisPipeline: onset detector rate mismatch");
    gate_ring_.assign(
        static_cast<size_t>(std::lround(cfg_.gate_window_s * cfg_.sample_rate)),
        0.0);
  }

  void push(const AudioFrame& frame) {
    if (frame.sample_rate != cfg_.sample_rate)
      throw ConfigError("AnalysisPipeline: sample rate changed mid-stream");
    push_samples(frame.samples);
  }

  void push_samples(std::span<const double> samples) {
    pending_.insert(pending_.end(), samples.begin(), samples.end());
    size_t off = 0;
    const auto hop = static_cast<size_t>(cfg_.onset.hop);
    while (pending_.size() - off >= hop) {
      process_hop({pending_.data() + off, hop});
      off += hop;
    }
    pending_.erase(pending_.begin(), pending_.begin() + off);
  }

  std::vector<FeatureRecord> drain() {
    std::vector<FeatureRecord> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
  }

  size_t dropped_records() const { return dropped_; }
  bool gate_active() const { return gate_active_; }
  double now() const { return samples_seen_ / cfg_.sample_rate; }
  const AnalysisConfig& config() const { return cfg_; }

 private:
  void process_hop(std::span<const double> hop) {
    for (double s : hop) {
      double sq = s * s;
      gate_sumsq_ += sq - gate_ring_[gate_pos_];
      gate_ring_[gate_pos_] = sq;
      gate_pos_ = (gate_pos_ + 1) % gate_ring_.size();
    }
    samples_seen_ += static_cast<int64_t>(hop.size());
    const double t = now();

    const auto filled =
        std::min<int64_t>(samples_seen_, static_cast<int64_t>(gate_ring_.size()));
    double level =
        std::sqrt(std::max(0.0, gate_sumsq_) / static_cast<double>(filled));
    bool active = level >= cfg_.volume_threshold;

    if (active != gate_active_) {
      gate_active_ = active;
      emit({t, GateChange{active}});
      if (active) {
        detector_.reset_spectral_state();
        detector_.seek(samples_seen_ - static_cast<int64_t>(hop.size()));
      }
    }
    if (!active) return;

    detector_.push_samples(hop);
    for (const auto& onset : detector_.drain()) {
      emit({onset.time, onset});
      onsets_.push_back(onset);
      trim_onsets();
      if (auto est = tracker_.update({onsets_.data(), onsets_.size()})) {
        recent_.push_back(*est);
        if (recent_.size() > cfg_.stability.n_stab) recent_.pop_front();
        std::vector<TempoEstimate> tail(recent_.begin(), recent_.end());
        est->stable = assess_stability(tail, cfg_.stability) &&
                      est->confidence >= cfg_.tempo.conf_min;
        emit({onset.time, *est});
      }
    }

    if (t >= next_density_t_) {
      emit({t, compute_density({onsets_.data(), onsets_.size()},
                               cfg_.density_window_s, t)});
      next_density_t_ += cfg_.density_period_s;
      // catch up rather than burst after long gated gaps
      if (next_density_t_ < t) next_density_t_ = t + cfg_.density_period_s;
    }
  }

  void trim_onsets() {
    double keep = std::max(cfg_.tempo.history_s, cfg_.density_window_s) + 2.0;
    double cutoff = onsets_.back().time - keep;
    size_t first = 0;
    while (first < onsets_.size() && onsets_[first].time < cutoff) ++first;
    if (first > 0) onsets_.erase(onsets_.begin(), onsets_.begin() + first);
  }

  void emit(FeatureRecord rec) {
    if (queue_.size() >= cfg_.queue_capacity) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(std::move(rec));
  }

  AnalysisConfig cfg_;
  OnsetDetector detector_;
  TempoTracker tracker_{cfg_.tempo};
  std::vector<double> pending_;
  std::vector<double> gate_ring_;
  size_t gate_pos_ = 0;
  double gate_sumsq_ = 0.0;
  bool gate_active_ = false;
  int64_t samples_seen_ = 0;
  std::vector<OnsetEvent> onsets_;
  std::deque<TempoEstimate> recent_;
  std::deque<FeatureRecord> queue_;
  size_t dropped_ = 0;
  double next_density_t_ = 0.0;
};

}  // namespace robodrum
