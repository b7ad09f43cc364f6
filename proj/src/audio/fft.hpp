#pragma once

#include <fftw3.h>

#include <complex>
#include <span>

namespace ddavs::audio::detail {

/// Real <-> half-complex transform of fixed length n backed by FFTW.
/// The inverse is unnormalised (scaled by n), as in FFTW.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// `in` is zero padded (or truncated) to n samples.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace ddavs::audio::detail
