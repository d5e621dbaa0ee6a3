#pragma once

#include <complex>
#include <span>
#include <vector>

#include "rfdfin/fft.hpp"
#include "rfdfin/imgproc.hpp"

namespace rfdfin {

enum class SpectrumKind { FftComplex, FftLogMag, DctLogMag };

// Frequency plane of an image. Bin (u, v) lives at index v * width + u, where
// u indexes horizontal frequency and v vertical frequency; DC is at (0, 0).
// Complex planes use `bins`, real planes use `values`; the other is empty.
struct Spectrum2D {
  int width = 0;
  int height = 0;
  SpectrumKind kind = SpectrumKind::FftLogMag;
  std::vector<double> values;
  std::vector<cplx> bins;

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
  }
  double value(int u, int v) const { return values[index(u, v)]; }
  cplx bin(int u, int v) const { return bins[index(u, v)]; }
};

inline constexpr double kLogEpsilon = 1e-18;

Spectrum2D fft2(const FloatImage& img);
Spectrum2D fft2(const GrayImage& img);

// Real part of the inverse transform of a complex plane.
FloatImage ifft2_real(const Spectrum2D& spec);

// ln(|X| + epsilon) per bin.
Spectrum2D log_magnitude(const Spectrum2D& spec, double epsilon = kLogEpsilon);

// Artifact-stream input: log_magnitude(fft2(img)).
Spectrum2D fft_log_spectrum(const GrayImage& img, double epsilon = kLogEpsilon);

// Orthonormal type-II DCT followed by ln(|.| + epsilon).
Spectrum2D dct2_log(const FloatImage& img, double epsilon = kLogEpsilon);

// Raw orthonormal DCT-II coefficients (row-major, same layout as the image).
std::vector<double> dct2(const FloatImage& img);

// Magnitude-only spectrum of the horizontally mirrored image: for real input
// |F_flip(u, v)| = |F((W - u) mod W, v)|, so a log-magnitude plane can be
// flipped without recomputing the transform.
Spectrum2D mirror_log_spectrum(const Spectrum2D& logmag);

// Streaming element-wise mean of per-image log spectra (log, then average).
// Accumulators built over shards may be merged before taking the mean.
class SpectrumAccumulator {
 public:
  explicit SpectrumAccumulator(SpectrumKind kind = SpectrumKind::FftLogMag, double epsilon = kLogEpsilon);

  void add(const GrayImage& img);
  void add_spectrum(const Spectrum2D& spec);
  void merge(const SpectrumAccumulator& other);

  std::size_t count() const noexcept { return count_; }
  Spectrum2D mean() const;

 private:
  SpectrumKind kind_;
  double epsilon_;
  int width_ = 0;
  int height_ = 0;
  std::size_t count_ = 0;
  std::vector<double> sum_;
};

Spectrum2D mean_spectrum(std::span<const GrayImage> images, SpectrumKind kind = SpectrumKind::FftLogMag);

struct SpectrumDiff {
  Spectrum2D diff;
  double l2 = 0.0;
  double max_abs = 0.0;
  double mean = 0.0;
};

// a - b, element-wise, with summary statistics.
SpectrumDiff spectrum_diff(const Spectrum2D& a, const Spectrum2D& b);

// Normalized radial frequency of bin (u, v): 0 at DC, 1 at the Nyquist edge
// along either axis.
double radial_frequency(int u, int v, int width, int height);

// Mean over bins whose normalized radial frequency exceeds `cutoff` (FFT
// layout); used for high-frequency energy comparisons.
double high_frequency_mean(const Spectrum2D& spec, double cutoff = 0.25);

struct Heatmap {
  GrayImage image;
  double min = 0.0;
  double max = 0.0;
};

// Min-max normalizes a real plane to 8 bits. With center_dc the FFT plane is
// circularly shifted so DC sits in the middle (display only).
Heatmap to_heatmap(const Spectrum2D& spec, bool center_dc);

}  // namespace rfdfin
