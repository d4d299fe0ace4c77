#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "robodrum/errors.hpp"

namespace robodrum {

inline constexpr double kDefaultSampleRate = 44100.0;

/// One block of mono audio. Blocks fed to the analysis chain are
/// contiguous and non-overlapping in hop order.
struct AudioFrame {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  double sample_rate = kDefaultSampleRate;
  double start_time = 0.0;  // seconds since stream start
};

inline double rms(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("rms: empty sample block");
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

/// Volume gate: true iff the frame's RMS reaches the threshold.
/// While this is false the rest of the analysis chain stays silent.
inline bool gate_volume(const AudioFrame& frame, double threshold) {
  if (frame.samples.empty())
    throw std::invalid_argument("gate_volume: empty frame");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("gate_volume: threshold outside (0, 1)");
  return rms(frame.samples) >= threshold;
}

struct WavData {
  std::vector<double> samples;  // mono, [-1, 1]
  double sample_rate = 0.0;
};

namespace detail {

inline uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

inline uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

}  // namespace detail

/// Reads a RIFF/WAVE file: PCM 16-bit or IEEE float 32-bit, any channel
/// count (channels are averaged to mono). Throws InputError on anything
/// it cannot parse.
inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InputError(path + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    uint32_t chunk_len = detail::read_u32(hdr + 4);
    const unsigned char* body = hdr + 8;
    if (pos + 8 + chunk_len > bytes.size())
      chunk_len = static_cast<uint32_t>(bytes.size() - pos - 8);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw InputError(path + ": truncated fmt chunk");
      format = detail::read_u16(body);
      channels = detail::read_u16(body + 2);
      rate = detail::read_u32(body + 4);
      bits = detail::read_u16(body + 14);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!data || channels == 0 || rate == 0)
    throw InputError(path + ": missing fmt or data chunk");

  WavData out;
  out.sample_rate = static_cast<double>(rate);
  if (format == 1 && bits == 16) {
    size_t n = data_len / (2 * channels);
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (uint16_t c = 0; c < channels; ++c) {
        auto u = detail::read_u16(data + 2 * (i * channels + c));
        acc += static_cast<int16_t>(u) / 32768.0;
      }
      out.samples[i] = acc / channels;
    }
  } else if (format == 3 && bits == 32) {
    size_t n = data_len / (4 * channels);
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (uint16_t c = 0; c < channels; ++c) {
        uint32_t u = detail::read_u32(data + 4 * (i * channels + c));
        float f;
        std::memcpy(&f, &u, 4);
        acc += f;
      }
      out.samples[i] = acc / channels;
    }
  } else {
    throw InputError(path + ": unsupported encoding (want PCM16 or float32)");
  }
  return out;
}

/// Writes mono PCM 16-bit. Amplitudes are clamped to [-1, 1].
inline void write_wav_pcm16(const std::string& path,
                            std::span<const double> samples,
                            double sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);

  auto put_u32 = [&](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8 & 0xff),
                          static_cast<unsigned char>(v >> 16 & 0xff),
                          static_cast<unsigned char>(v >> 24 & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8 & 0xff)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  const uint32_t rate = static_cast<uint32_t>(std::lround(sample_rate));
  const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_len);
  for (double s : samples) {
    double c = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<int16_t>(std::lround(c * 32767.0));
    put_u16(static_cast<uint16_t>(v));
  }
}

/// Linear-interpolation resampler. Adequate for the feature chain; not
/// meant as a mastering-grade SRC.
inline std::vector<double> resample_linear(std::span<const double> in,
                                           double from_rate, double to_rate) {
  if (from_rate <= 0.0 || to_rate <= 0.0)
    throw std::invalid_argument("resample_linear: non-positive rate");
  if (from_rate == to_rate) return {in.begin(), in.end()};
  if (in.empty()) return {};
  const double step = from_rate / to_rate;
  const auto n_out =
      static_cast<size_t>(std::floor((in.size() - 1) / step)) + 1;
  std::vector<double> out(n_out);
  for (size_t i = 0; i < n_out; ++i) {
    double x = i * step;
    auto i0 = static_cast<size_t>(x);
    size_t i1 = std::min(i0 + 1, in.size() - 1);
    double frac = x - static_cast<double>(i0);
    out[i] = in[i0] * (1.0 - frac) + in[i1] * frac;
  }
  return out;
}

}  // namespace robodrum
