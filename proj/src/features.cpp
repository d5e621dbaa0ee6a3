#include "rfdfin/features.hpp"

#include "rfdfin/error.hpp"
#include "rfdfin/parallel.hpp"
#include "rfdfin/spectrum.hpp"

namespace rfdfin {

std::optional<RawRidgeFeature> ridge_feature(const GrayImage& img, const FeatureConfig& config) {
  const auto skeleton = ridge_preprocess(img, config.ridge);
  const auto curves = trace_all_ridges(skeleton);
  const auto segments = segment_curves(curves, config.segment_length);
  if (segments.empty()) return std::nullopt;
  return raw_ridge_feature(img, segments, config.smoothing_sigma);
}

nn::FeatureSample extract_features(const GrayImage& input, int label, const FeatureConfig& config, bool with_ridge,
                                   bool with_spectrum) {
  const GrayImage img = center_crop_or_pad(input, config.crop_width, config.crop_height, 255);
  nn::FeatureSample s;
  s.label = label;
  if (with_ridge) {
    if (auto f = ridge_feature(img, config)) {
      s.has_ridge = true;
      s.ridge.assign(f->values.begin(), f->values.end());
      // A mirror that loses every segment falls back to the unflipped feature.
      const auto mirrored = ridge_feature(flip_horizontal(img), config);
      const auto& src = mirrored ? mirrored->values : f->values;
      s.ridge_flipped.assign(src.begin(), src.end());
    }
  }
  if (with_spectrum) {
    const auto spec = fft_log_spectrum(img);
    s.spec_width = spec.width;
    s.spec_height = spec.height;
    s.spectrum.assign(spec.values.begin(), spec.values.end());
  }
  return s;
}

std::vector<nn::FeatureSample> extract_all(const std::vector<GrayImage>& images, const std::vector<int>& labels,
                                           const FeatureConfig& config, unsigned jobs) {
  if (images.size() != labels.size()) throw Error(ErrorCode::DimMismatch, "one label per image required");
  std::vector<nn::FeatureSample> out(images.size());
  parallel_for(images.size(), jobs, [&](std::size_t i) { out[i] = extract_features(images[i], labels[i], config); });
  return out;
}

}  // namespace rfdfin
