#pragma once

#include <span>
#include <vector>

#include "rfdfin/imgproc.hpp"
#include "rfdfin/spectrum.hpp"
#include "rfdfin/tensor_file.hpp"

namespace rfdfin {

// Spectrum difference normalization: the mean real-minus-fake gap of the
// log-magnitude spectra, applied to a fake as a per-bin magnitude gain.
struct SdnCorrection {
  Spectrum2D delta;  // FftLogMag layout
};

SdnCorrection fit_sdn(std::span<const GrayImage> real, std::span<const GrayImage> fake);
SdnCorrection sdn_from_means(const Spectrum2D& mean_real, const Spectrum2D& mean_fake);

// |X| <- |X| * exp(delta), phase kept, inverse FFT, round and clamp.
GrayImage apply_sdn(const GrayImage& img, const SdnCorrection& correction);

// Power distribution correction against radial power profiles of real images.
struct SpectrumDictionary {
  int radius_bins = 0;
  std::vector<std::vector<double>> entries;
};

inline constexpr int kDefaultRadiusBins = 32;

// Mean |X|^2 per radius bin; the radius is the distance from DC after
// centering, scaled so the farthest corner falls in the last bin.
std::vector<double> radial_power_profile(const Spectrum2D& complex_spectrum, int radius_bins);
std::vector<double> radial_power_profile(const GrayImage& img, int radius_bins);
int radius_bin(int u, int v, int width, int height, int radius_bins);

SpectrumDictionary fit_power_dictionary(std::span<const GrayImage> real, int radius_bins = kDefaultRadiusBins);

// Index of the dictionary entry closest to `profile` (L2 over log10 power).
std::size_t nearest_entry(const SpectrumDictionary& dict, const std::vector<double>& profile);

// Scales each bin by sqrt(target/current) of its radius bin, clamped to [0.1, 10].
GrayImage apply_pdc(const GrayImage& img, const SpectrumDictionary& dict);

// apply_sdn followed by apply_pdc.
GrayImage sdn_plus_plus(const GrayImage& img, const SdnCorrection& correction, const SpectrumDictionary& dict);

// Container round-trip ("sdn.delta" [H, W], "pdc.dictionary" [K, bins]).
void store(TensorFile& file, const SdnCorrection& correction);
void store(TensorFile& file, const SpectrumDictionary& dict);
SdnCorrection load_sdn(const TensorFile& file);
SpectrumDictionary load_dictionary(const TensorFile& file);

}  // namespace rfdfin
