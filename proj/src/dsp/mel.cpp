#include "audiomorph/dsp/mel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "audiomorph/dsp/stft.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t fft_size, int sample_rate_hz,
                             double f_min_hz, double f_max_hz) {
  if (n_mels < 1) throw InvalidInput("mel: n_mels must be >= 1");
  if (sample_rate_hz <= 0) throw InvalidInput("mel: sample rate must be positive");
  if (fft_size < 2) throw InvalidInput("mel: fft_size too small");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(f_min_hz >= 0.0 && f_min_hz < f_max_hz))
    throw InvalidInput("mel: need 0 <= f_min < f_max");
  if (f_max_hz > nyquist)
    throw InvalidInput("mel: f_max " + std::to_string(f_max_hz) + " Hz exceeds Nyquist " +
                       std::to_string(nyquist) + " Hz");

  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = fft_size / 2 + 1;
  fb.f_min_hz = f_min_hz;
  fb.f_max_hz = f_max_hz;
  fb.weights.assign(n_mels * fb.n_bins, 0.0);

  // n_mels + 2 edge points; filter m rises over [p_m, p_{m+1}] and falls over [p_{m+1}, p_{m+2}].
  const double mel_lo = hz_to_mel(f_min_hz);
  const double mel_hi = hz_to_mel(f_max_hz);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fft_size);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    std::size_t nearest = 0;
    double nearest_dist = 1e300;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= center)
        w = (f - lo) / (center - lo);
      else if (f > center && f < hi)
        w = (hi - f) / (hi - center);
      fb.weights[m * fb.n_bins + k] = w;
      if (std::abs(f - center) < nearest_dist) {
        nearest_dist = std::abs(f - center);
        nearest = k;
      }
    }
    // Filters narrower than a bin would otherwise be empty.
    bool any = false;
    for (std::size_t k = 0; k < fb.n_bins && !any; ++k) any = fb.weights[m * fb.n_bins + k] > 0.0;
    if (!any) fb.weights[m * fb.n_bins + nearest] = 1.0;
  }
  return fb;
}

Spectrogram to_log_mel(const Spectrogram& s, const MelFilterbank& fb, double floor) {
  if (s.scale != Scale::linear_magnitude) throw InvalidInput("to_log_mel: expected a linear-magnitude spectrogram");
  if (!(floor > 0.0)) throw InvalidInput("to_log_mel: floor must be positive");
  if (s.bins != fb.n_bins)
    throw ShapeError("to_log_mel: spectrogram has " + std::to_string(s.bins) + " bins, filterbank expects " +
                     std::to_string(fb.n_bins));
  Spectrogram out(s.frames, fb.n_mels, Scale::log_mel, s.config);
  for (std::size_t t = 0; t < s.frames; ++t) {
    auto in = s.frame(t);
    auto row = out.frame(t);
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
      double acc = 0.0;
      const double* w = fb.weights.data() + m * fb.n_bins;
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += w[k] * in[k];
      row[m] = static_cast<float>(std::log(std::max(acc, floor)));
    }
  }
  return out;
}

Spectrogram mel_pseudo_inverse(const Spectrogram& s, const MelFilterbank& fb) {
  if (s.scale != Scale::log_mel) throw InvalidInput("mel_pseudo_inverse: expected a log-mel spectrogram");
  if (s.bins != fb.n_mels)
    throw ShapeError("mel_pseudo_inverse: spectrogram has " + std::to_string(s.bins) +
                     " channels, filterbank has " + std::to_string(fb.n_mels));
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> w(fb.weights.data(), static_cast<Eigen::Index>(fb.n_mels),
                                static_cast<Eigen::Index>(fb.n_bins));
  const RowMatrix pinv = Eigen::CompleteOrthogonalDecomposition<RowMatrix>(w).pseudoInverse();

  Spectrogram out(s.frames, fb.n_bins, Scale::linear_magnitude, s.config);
  Eigen::VectorXd mel(static_cast<Eigen::Index>(fb.n_mels));
  for (std::size_t t = 0; t < s.frames; ++t) {
    auto in = s.frame(t);
    for (std::size_t m = 0; m < fb.n_mels; ++m) mel[static_cast<Eigen::Index>(m)] = std::exp(static_cast<double>(in[m]));
    const Eigen::VectorXd lin = pinv * mel;
    auto row = out.frame(t);
    for (std::size_t k = 0; k < fb.n_bins; ++k)
      row[k] = static_cast<float>(std::max(0.0, lin[static_cast<Eigen::Index>(k)]));
  }
  return out;
}

MelFilterbank FeatureConfig::filterbank() const {
  return mel_filterbank(n_mels, stft.fft_size, stft.sample_rate_hz, f_min_hz, resolved_f_max());
}

Spectrogram log_mel_features(const Waveform& w, const FeatureConfig& cfg) {
  const Waveform emphasized = preemphasize(normalize_peak(w), cfg.stft.preemphasis);
  return to_log_mel(stft_magnitude(emphasized, cfg.stft), cfg.filterbank(), cfg.log_floor);
}

}  // namespace audiomorph::dsp
