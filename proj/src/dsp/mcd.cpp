#include "audiomorph/dsp/mcd.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

double mcd(const Spectrogram& y, const Spectrogram& y_hat, McdMode mode) {
  if (y.frames != y_hat.frames || y.bins != y_hat.bins)
    throw ShapeError("mcd: shape mismatch (" + std::to_string(y.frames) + "x" + std::to_string(y.bins) + " vs " +
                     std::to_string(y_hat.frames) + "x" + std::to_string(y_hat.bins) + ")");
  if (y.scale != y_hat.scale) throw InvalidInput("mcd: inputs have different scales");
  if (y.frames == 0) throw InvalidInput("mcd: zero frames");

  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (std::size_t t = 0; t < y.frames; ++t) {
    auto a = y.frame(t);
    auto b = y_hat.frame(t);
    double sq = 0.0;
    for (std::size_t d = 0; d < y.bins; ++d) {
      const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
      sq += diff * diff;
    }
    total += mode == McdMode::paper ? sq : k * std::sqrt(2.0 * sq);
  }
  if (mode == McdMode::paper) return k * std::sqrt(2.0 * total);
  return total / static_cast<double>(y.frames);
}

}  // namespace audiomorph::dsp
