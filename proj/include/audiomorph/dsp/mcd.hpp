#pragma once

#include "audiomorph/dsp/types.hpp"

namespace audiomorph::dsp {

enum class McdMode {
  /// (10 / ln 10) * sqrt(2 * sum_t ||y_t - yhat_t||^2) over the whole clip.
  paper,
  /// Mean over frames of (10 / ln 10) * sqrt(2 * ||y_t - yhat_t||^2).
  per_frame,
};

double mcd(const Spectrogram& y, const Spectrogram& y_hat, McdMode mode);

}  // namespace audiomorph::dsp
