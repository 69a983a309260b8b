#pragma once

#include <cstddef>
#include <vector>

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

inline constexpr double kDefaultLogFloor = 1e-5;

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;
  std::vector<double> weights;  // n_mels x n_bins, row-major

  double weight(std::size_t m, std::size_t k) const { return weights[m * n_bins + k]; }
};

/// Unity-peak triangular filters with centers uniformly spaced in mel.
MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t fft_size, int sample_rate_hz,
                             double f_min_hz, double f_max_hz);

/// out[t] = log(max(fb * s[t], floor)).
Spectrogram to_log_mel(const Spectrogram& s, const MelFilterbank& fb,
                       double floor = kDefaultLogFloor);

/// exp, then the least-squares pseudo-inverse of fb, clipped at zero.
Spectrogram mel_pseudo_inverse(const Spectrogram& s, const MelFilterbank& fb);

/// Full feature path for one clip: peak-normalize, pre-emphasize, STFT, log-mel.
struct FeatureConfig {
  StftConfig stft;
  std::size_t n_mels = 80;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;  // 0 selects Nyquist
  double log_floor = kDefaultLogFloor;

  double resolved_f_max() const {
    return f_max_hz > 0.0 ? f_max_hz : stft.sample_rate_hz / 2.0;
  }
  MelFilterbank filterbank() const;
  bool operator==(const FeatureConfig&) const = default;
};

Spectrogram log_mel_features(const Waveform& w, const FeatureConfig& cfg);

}  // namespace audiomorph::dsp
