#include "rfdfin/antiforensic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace {

constexpr double kMinGain = 0.1;
constexpr double kMaxGain = 10.0;

void require_same_dims(const GrayImage& img, int width, int height, const char* what) {
  if (img.width() != width || img.height() != height) throw Error(ErrorCode::DimMismatch, what);
}

}  // namespace

SdnCorrection sdn_from_means(const Spectrum2D& mean_real, const Spectrum2D& mean_fake) {
  if (mean_real.kind != SpectrumKind::FftLogMag) throw Error(ErrorCode::InvalidArgument, "SDN works on FFT log-magnitude means");
  SdnCorrection corr{spectrum_diff(mean_real, mean_fake).diff};
  // Real inputs have |X(u,v)| = |X(-u,-v)|; enforce it so the corrected
  // spectrum stays Hermitian and its inverse stays real.
  Spectrum2D& d = corr.delta;
  const Spectrum2D src = d;
  for (int v = 0; v < d.height; ++v)
    for (int u = 0; u < d.width; ++u) {
      const int mu = (d.width - u) % d.width, mv = (d.height - v) % d.height;
      d.values[d.index(u, v)] = 0.5 * (src.value(u, v) + src.value(mu, mv));
    }
  return corr;
}

SdnCorrection fit_sdn(std::span<const GrayImage> real, std::span<const GrayImage> fake) {
  if (real.empty() || fake.empty()) throw Error(ErrorCode::EmptyCorpus, "SDN needs real and fake images");
  return sdn_from_means(mean_spectrum(real), mean_spectrum(fake));
}

GrayImage apply_sdn(const GrayImage& img, const SdnCorrection& correction) {
  const auto& delta = correction.delta;
  require_same_dims(img, delta.width, delta.height, "SDN correction was fitted on a different image size");
  Spectrum2D spec = fft2(img);
  for (std::size_t i = 0; i < spec.bins.size(); ++i) spec.bins[i] *= std::exp(delta.values[i]);
  return to_gray(ifft2_real(spec));
}

int radius_bin(int u, int v, int width, int height, int radius_bins) {
  const double fu = std::min(u, width - u);
  const double fv = std::min(v, height - v);
  const double rmax = std::hypot(width / 2.0, height / 2.0);
  const int bin = static_cast<int>(std::hypot(fu, fv) / rmax * radius_bins);
  return std::clamp(bin, 0, radius_bins - 1);
}

std::vector<double> radial_power_profile(const Spectrum2D& spec, int radius_bins) {
  if (spec.kind != SpectrumKind::FftComplex) throw Error(ErrorCode::InvalidArgument, "radial profile needs a complex spectrum");
  if (radius_bins < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 radius bins");
  std::vector<double> power(static_cast<std::size_t>(radius_bins), 0.0);
  std::vector<std::size_t> count(power.size(), 0);
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      const auto b = static_cast<std::size_t>(radius_bin(u, v, spec.width, spec.height, radius_bins));
      power[b] += std::norm(spec.bin(u, v));
      ++count[b];
    }
  for (std::size_t b = 0; b < power.size(); ++b)
    if (count[b] > 0) power[b] /= static_cast<double>(count[b]);
  return power;
}

std::vector<double> radial_power_profile(const GrayImage& img, int radius_bins) {
  return radial_power_profile(fft2(img), radius_bins);
}

SpectrumDictionary fit_power_dictionary(std::span<const GrayImage> real, int radius_bins) {
  if (real.empty()) throw Error(ErrorCode::EmptyCorpus, "power dictionary needs real images");
  if (radius_bins < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 radius bins");
  SpectrumDictionary dict;
  dict.radius_bins = radius_bins;
  for (const auto& img : real) dict.entries.push_back(radial_power_profile(img, radius_bins));
  return dict;
}

std::size_t nearest_entry(const SpectrumDictionary& dict, const std::vector<double>& profile) {
  if (dict.entries.empty()) throw Error(ErrorCode::EmptyDictionary, "power dictionary is empty");
  auto logp = [](double p) { return std::log10(p + 1e-12); };
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dict.entries.size(); ++i) {
    const auto& e = dict.entries[i];
    if (e.size() != profile.size()) throw Error(ErrorCode::DimMismatch, "dictionary profile length mismatch");
    double d = 0.0;
    for (std::size_t b = 0; b < e.size(); ++b) d += (logp(e[b]) - logp(profile[b])) * (logp(e[b]) - logp(profile[b]));
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

GrayImage apply_pdc(const GrayImage& img, const SpectrumDictionary& dict) {
  if (dict.entries.empty()) throw Error(ErrorCode::EmptyDictionary, "power dictionary is empty");
  Spectrum2D spec = fft2(img);
  const auto current = radial_power_profile(spec, dict.radius_bins);
  const auto& target = dict.entries[nearest_entry(dict, current)];
  std::vector<double> gain(current.size(), 1.0);
  for (std::size_t b = 0; b < gain.size(); ++b) {
    if (current[b] <= 0.0) continue;  // nothing to scale in an empty bin
    gain[b] = std::clamp(std::sqrt(target[b] / current[b]), kMinGain, kMaxGain);
  }
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u)
      spec.bins[spec.index(u, v)] *= gain[static_cast<std::size_t>(radius_bin(u, v, spec.width, spec.height, dict.radius_bins))];
  return to_gray(ifft2_real(spec));
}

GrayImage sdn_plus_plus(const GrayImage& img, const SdnCorrection& correction, const SpectrumDictionary& dict) {
  return apply_pdc(apply_sdn(img, correction), dict);
}

void store(TensorFile& file, const SdnCorrection& correction) {
  const auto& d = correction.delta;
  file.put({"sdn.delta",
            {static_cast<std::uint64_t>(d.height), static_cast<std::uint64_t>(d.width)},
            std::vector<float>(d.values.begin(), d.values.end())});
}

void store(TensorFile& file, const SpectrumDictionary& dict) {
  std::vector<float> flat;
  for (const auto& e : dict.entries) flat.insert(flat.end(), e.begin(), e.end());
  file.put({"pdc.dictionary",
            {static_cast<std::uint64_t>(dict.entries.size()), static_cast<std::uint64_t>(dict.radius_bins)},
            std::move(flat)});
}

SdnCorrection load_sdn(const TensorFile& file) {
  const auto& t = file.at("sdn.delta");
  if (t.dims.size() != 2) throw Error(ErrorCode::Corrupt, "sdn.delta must be rank 2");
  SdnCorrection corr;
  corr.delta.height = static_cast<int>(t.dims[0]);
  corr.delta.width = static_cast<int>(t.dims[1]);
  corr.delta.kind = SpectrumKind::FftLogMag;
  corr.delta.values.assign(t.data.begin(), t.data.end());
  return corr;
}

SpectrumDictionary load_dictionary(const TensorFile& file) {
  const auto& t = file.at("pdc.dictionary");
  if (t.dims.size() != 2) throw Error(ErrorCode::Corrupt, "pdc.dictionary must be rank 2");
  SpectrumDictionary dict;
  dict.radius_bins = static_cast<int>(t.dims[1]);
  for (std::uint64_t k = 0; k < t.dims[0]; ++k) {
    const auto* row = t.data.data() + k * t.dims[1];
    dict.entries.emplace_back(row, row + t.dims[1]);
  }
  return dict;
}

}  // namespace rfdfin
