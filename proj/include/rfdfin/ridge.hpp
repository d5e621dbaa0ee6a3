#pragma once

#include <span>
#include <vector>

#include "rfdfin/imgproc.hpp"

namespace rfdfin {

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

// Ordered pixel path; consecutive points are 8-adjacent, no point repeats.
using RidgeCurve = std::vector<Point>;

// Exactly `length` points cut from a RidgeCurve.
struct RidgeSegment {
  std::vector<Point> points;
};

inline constexpr int kSegmentLength = 128;
inline constexpr double kRidgeSmoothingSigma = 2.0;

// Traces every black pixel of a junction-free skeleton into curves. Seeds are
// taken in row-major order; a seed with two neighbour groups is grown in both
// directions and joined as reverse(first) + seed + second. Throws BranchPoint
// if any pixel has three or more neighbour groups.
std::vector<RidgeCurve> trace_all_ridges(const GrayImage& skeleton);

// Traces the curve through `seed`, erasing visited pixels from `work`.
RidgeCurve trace_from(GrayImage& work, Point seed);

std::vector<RidgeSegment> segment_curves(std::span<const RidgeCurve> curves, int length = kSegmentLength);

// Grayscale values of `original` along the segment, in order.
std::vector<double> sample_signal(const GrayImage& original, const RidgeSegment& segment);

struct RawRidgeFeature {
  std::vector<double> values;  // mean DFT magnitude per frequency index
  std::size_t segment_count = 0;
};

// Mean over segments of |DFT(smooth(sample))|. sigma <= 0 disables smoothing.
RawRidgeFeature raw_ridge_feature(const GrayImage& original, std::span<const RidgeSegment> segments,
                                  double sigma = kRidgeSmoothingSigma);

}  // namespace rfdfin
