#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace audiomorph::dsp {

inline constexpr int kDefaultSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;
};

/// Analysis parameters. Durations are converted to samples with the
/// waveform's sample rate.
struct StftConfig {
  double window_ms = 50.0;
  double hop_ms = 12.5;
  std::size_t fft_size = 2048;
  double preemphasis = 0.97;
  int sample_rate_hz = kDefaultSampleRate;

  std::size_t window_length() const;
  std::size_t hop_length() const;
  std::size_t bins() const { return fft_size / 2 + 1; }

  /// Throws InvalidInput when the configuration is inconsistent.
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

enum class Scale : std::uint8_t {
  linear_magnitude = 0,
  log_mel = 1,
  // Not a spectrogram; used when attention matrices are exported.
  attention = 2,
};

/// Time-major real matrix (frame t occupies values[t*bins .. (t+1)*bins)).
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  Scale scale = Scale::linear_magnitude;
  StftConfig config;
  std::vector<float> values;

  Spectrogram() = default;
  Spectrogram(std::size_t frames, std::size_t bins, Scale scale, StftConfig config = {})
      : frames(frames), bins(bins), scale(scale), config(config), values(frames * bins, 0.0f) {}

  std::span<float> frame(std::size_t t) { return {values.data() + t * bins, bins}; }
  std::span<const float> frame(std::size_t t) const { return {values.data() + t * bins, bins}; }
  float& at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
  float at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
};

}  // namespace audiomorph::dsp
