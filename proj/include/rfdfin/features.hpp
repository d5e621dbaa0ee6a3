#pragma once

#include <optional>
#include <vector>

#include "rfdfin/enhance.hpp"
#include "rfdfin/nn/train.hpp"
#include "rfdfin/ridge.hpp"

namespace rfdfin {

struct FeatureConfig {
  RidgeParams ridge{};
  int segment_length = kSegmentLength;
  double smoothing_sigma = kRidgeSmoothingSigma;
  int crop_width = 256;
  int crop_height = 256;
};

// f_raw of one image, or nullopt when no ridge is long enough (NoRidges).
std::optional<RawRidgeFeature> ridge_feature(const GrayImage& img, const FeatureConfig& config);

// Crops/pads to the working size, then computes f_raw for the image and its
// mirror plus the FFT log-magnitude spectrum.
nn::FeatureSample extract_features(const GrayImage& img, int label, const FeatureConfig& config,
                                   bool with_ridge = true, bool with_spectrum = true);

std::vector<nn::FeatureSample> extract_all(const std::vector<GrayImage>& images, const std::vector<int>& labels,
                                           const FeatureConfig& config, unsigned jobs = 1);

}  // namespace rfdfin
