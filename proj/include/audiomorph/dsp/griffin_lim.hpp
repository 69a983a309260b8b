#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

struct GriffinLimResult {
  Waveform waveform;
  /// objective[k] = || |STFT(x_k)| - target || over the full Hermitian
  /// spectrum; k = 0 is the random-phase starting point, so the vector
  /// has n_iters + 1 entries.
  std::vector<double> objective;
};

/// Least-squares inverse STFT (weighted overlap-add divided by the summed
/// squared window) of half spectra laid out frame-major.
std::vector<double> istft_least_squares(const std::vector<std::complex<double>>& spectra,
                                        std::size_t frames, const StftConfig& cfg);

/// Iterative phase reconstruction from a linear-magnitude spectrogram. The
/// target's StftConfig drives the analysis/synthesis and its pre-emphasis
/// coefficient is undone on the returned waveform.
GriffinLimResult griffin_lim_trace(const Spectrogram& target_mag, int n_iters, std::uint64_t seed);

Waveform griffin_lim(const Spectrogram& target_mag, int n_iters, std::uint64_t seed);

}  // namespace audiomorph::dsp
