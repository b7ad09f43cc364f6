#include "fft.hpp"

#include <algorithm>
#include <mutex>

namespace ddavs::audio::detail {

namespace {
// FFTW planning is not thread safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n_);
  spec_ = fftw_alloc_complex(bins());
  fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, spec_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t m = std::min(in.size(), n_);
  std::copy_n(in.begin(), m, real_);
  std::fill(real_ + m, real_ + n_, 0.0);
  fftw_execute(fwd_);
  for (std::size_t k = 0; k < bins() && k < out.size(); ++k) {
    out[k] = {spec_[k][0], spec_[k][1]};
  }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  for (std::size_t k = 0; k < bins(); ++k) {
    spec_[k][0] = k < in.size() ? in[k].real() : 0.0;
    spec_[k][1] = k < in.size() ? in[k].imag() : 0.0;
  }
  fftw_execute(inv_);
  std::copy_n(real_, std::min(out.size(), n_), out.begin());
}

}  // namespace ddavs::audio::detail
