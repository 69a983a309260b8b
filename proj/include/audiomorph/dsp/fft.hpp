#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace audiomorph::dsp {

/// Real-input FFT of a fixed power-of-two size. Forward produces bins
/// 0..n/2; inverse takes the same half spectrum and is unnormalized
/// (inverse(forward(x)) == n * x). Instances are not shareable across
/// threads; create one per worker.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// `in` may be shorter than size(); the remainder is zero-padded.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace audiomorph::dsp
