#include "rfdfin/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace {

std::vector<std::size_t> bit_reversal(std::size_t n) {
  std::vector<std::size_t> rev(n, 0);
  const int bits = std::countr_zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    rev[i] = r;
  }
  return rev;
}

std::vector<cplx> half_twiddles(std::size_t n) {
  std::vector<cplx> tw(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(a), std::sin(a)};
  }
  return tw;
}

void radix2_core(std::span<cplx> a, const std::vector<cplx>& tw, const std::vector<std::size_t>& rev, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i)
    if (i < rev[i]) std::swap(a[i], a[rev[i]]);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx w = inverse ? std::conj(tw[k * step]) : tw[k * step];
        const cplx u = a[start + k];
        const cplx v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(std::has_single_bit(n)) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "FFT length must be positive");
  if (pow2_) {
    twiddles_ = half_twiddles(n);
    bitrev_ = bit_reversal(n);
    return;
  }
  m_ = std::bit_ceil(2 * n - 1);
  twiddles_ = half_twiddles(m_);
  bitrev_ = bit_reversal(m_);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for large k.
    const auto k2 = static_cast<double>((k * k) % (2 * n));
    const double a = -std::numbers::pi * k2 / static_cast<double>(n);
    chirp_[k] = {std::cos(a), std::sin(a)};
  }
  chirp_fft_.assign(m_, cplx{});
  chirp_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_fft_[k] = std::conj(chirp_[k]);
    chirp_fft_[m_ - k] = std::conj(chirp_[k]);
  }
  radix2_core(chirp_fft_, twiddles_, bitrev_, false);
}

void FftPlan::forward(std::span<cplx> data) const {
  if (data.size() != n_) throw Error(ErrorCode::DimMismatch, "FFT input length does not match plan");
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

void FftPlan::inverse(std::span<cplx> data) const {
  if (data.size() != n_) throw Error(ErrorCode::DimMismatch, "FFT input length does not match plan");
  if (pow2_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

void FftPlan::radix2(std::span<cplx> data, bool inverse) const { radix2_core(data, twiddles_, bitrev_, inverse); }

void FftPlan::bluestein(std::span<cplx> data, bool inverse) const {
  // The inverse transform is conj(FFT(conj(x))).
  std::vector<cplx> work(m_, cplx{});
  for (std::size_t k = 0; k < n_; ++k) {
    const cplx x = inverse ? std::conj(data[k]) : data[k];
    work[k] = x * chirp_[k];
  }
  radix2_core(work, twiddles_, bitrev_, false);
  for (std::size_t k = 0; k < m_; ++k) work[k] *= chirp_fft_[k];
  radix2_core(work, twiddles_, bitrev_, true);
  const double scale = 1.0 / static_cast<double>(m_);
  for (std::size_t k = 0; k < n_; ++k) {
    const cplx y = work[k] * scale * chirp_[k];
    data[k] = inverse ? std::conj(y) : y;
  }
}

std::vector<cplx> dft(std::span<const double> signal) {
  std::vector<cplx> data(signal.begin(), signal.end());
  FftPlan(data.size()).forward(data);
  return data;
}

}  // namespace rfdfin
