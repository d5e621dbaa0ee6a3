#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rfdfin {

using cplx = std::complex<double>;

// Unnormalized 1D DFT of a fixed length. Powers of two use an iterative
// radix-2 transform; every other length goes through Bluestein's chirp-z
// identity on a padded power-of-two transform.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // X[k] = sum_n x[n] exp(-2 pi i k n / N)
  void forward(std::span<cplx> data) const;
  // x[n] = (1/N) sum_k X[k] exp(+2 pi i k n / N)
  void inverse(std::span<cplx> data) const;

 private:
  void radix2(std::span<cplx> data, bool inverse) const;
  void bluestein(std::span<cplx> data, bool inverse) const;

  std::size_t n_;
  bool pow2_;
  std::vector<cplx> twiddles_;   // radix-2 table of length n/2 (or m/2 for Bluestein)
  std::vector<std::size_t> bitrev_;
  // Bluestein state
  std::size_t m_ = 0;
  std::vector<cplx> chirp_;      // exp(-i pi k^2 / n)
  std::vector<cplx> chirp_fft_;  // FFT of the conjugate chirp, length m
};

std::vector<cplx> dft(std::span<const double> signal);

}  // namespace rfdfin
