#pragma once

#include <vector>

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

/// y[0] = x[0], y[n] = x[n] - coeff * x[n-1].
Waveform preemphasize(const Waveform& w, double coeff);

/// Inverse of preemphasize: y[n] = x[n] + coeff * y[n-1].
Waveform deemphasize(const Waveform& w, double coeff);

/// Scales to peak |sample| == 1. Silent input is returned unchanged.
Waveform normalize_peak(const Waveform& w);

/// Periodic Hann window, w[n] = 0.5 (1 - cos(2 pi n / N)).
std::vector<double> hann_window(std::size_t n);

/// 1 + floor((length - window) / hop); zero when length < window.
std::size_t frame_count(std::size_t length, std::size_t window, std::size_t hop);

/// Magnitude STFT without center padding; every frame lies inside the signal.
/// The waveform is analysed as given (no pre-emphasis here).
Spectrogram stft_magnitude(const Waveform& w, const StftConfig& cfg);

}  // namespace audiomorph::dsp
