#include "audiomorph/dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "audiomorph/error.hpp"

namespace audiomorph::dsp {

namespace {
// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(time);
    fftw_free(freq);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2 || (n & (n - 1)) != 0) throw InvalidInput("fft size must be a power of two >= 2");
  std::lock_guard lock(planner_mutex());
  impl_->time = fftw_alloc_real(n);
  impl_->freq = fftw_alloc_complex(n / 2 + 1);
  const int ni = static_cast<int>(n);
  impl_->fwd = fftw_plan_dft_r2c_1d(ni, impl_->time, impl_->freq, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(ni, impl_->freq, impl_->time, FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() > n_ || out.size() != bins()) throw ShapeError("fft: buffer size mismatch");
  std::copy(in.begin(), in.end(), impl_->time);
  std::fill(impl_->time + in.size(), impl_->time + n_, 0.0);
  fftw_execute(impl_->fwd);
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {impl_->freq[k][0], impl_->freq[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != bins() || out.size() != n_) throw ShapeError("fft: buffer size mismatch");
  for (std::size_t k = 0; k < bins(); ++k) {
    impl_->freq[k][0] = in[k].real();
    impl_->freq[k][1] = in[k].imag();
  }
  // c2r destroys its input; it is rewritten on every call.
  fftw_execute(impl_->inv);
  std::copy(impl_->time, impl_->time + n_, out.begin());
}

}  // namespace audiomorph::dsp
