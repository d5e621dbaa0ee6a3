#include "rfdfin/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfdfin/enhance.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/fft.hpp"

namespace rfdfin {

namespace {

bool black(const GrayImage& img, Point p) { return img.contains(p.x, p.y) && img.at(p.x, p.y) == 0; }

// Black 8-neighbours of p split into 8-connected groups; each group's first
// entry is a 4-adjacent member when one exists.
std::vector<std::vector<Point>> neighbour_groups_of(const GrayImage& img, Point p) {
  std::vector<Point> ring;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const Point q{p.x + dx, p.y + dy};
      if ((dx != 0 || dy != 0) && black(img, q)) ring.push_back(q);
    }
  std::vector<std::vector<Point>> groups;
  std::vector<bool> used(ring.size(), false);
  for (std::size_t s = 0; s < ring.size(); ++s) {
    if (used[s]) continue;
    std::vector<Point> group{ring[s]};
    used[s] = true;
    for (std::size_t head = 0; head < group.size(); ++head)
      for (std::size_t j = 0; j < ring.size(); ++j)
        if (!used[j] && std::abs(ring[j].x - group[head].x) <= 1 && std::abs(ring[j].y - group[head].y) <= 1) {
          used[j] = true;
          group.push_back(ring[j]);
        }
    auto four = std::find_if(group.begin(), group.end(),
                             [p](Point q) { return std::abs(q.x - p.x) + std::abs(q.y - p.y) == 1; });
    if (four != group.end()) std::iter_swap(group.begin(), four);
    groups.push_back(std::move(group));
  }
  return groups;
}

// Walks from `start` while the path stays unambiguous (one neighbour group).
RidgeCurve follow(GrayImage& work, Point start) {
  RidgeCurve curve;
  Point cur = start;
  while (true) {
    curve.push_back(cur);
    work.at(cur.x, cur.y) = 255;
    const auto groups = neighbour_groups_of(work, cur);
    if (groups.size() != 1) break;
    cur = groups.front().front();
  }
  return curve;
}

}  // namespace

RidgeCurve trace_from(GrayImage& work, Point seed) {
  if (!black(work, seed)) throw Error(ErrorCode::InvalidArgument, "seed is not a ridge pixel");
  work.at(seed.x, seed.y) = 255;
  const auto groups = neighbour_groups_of(work, seed);
  if (groups.size() > 2) throw Error(ErrorCode::BranchPoint, "seed is a branch point");

  RidgeCurve curve;
  if (groups.empty()) return {seed};
  RidgeCurve first = follow(work, groups[0].front());
  RidgeCurve second;
  if (groups.size() == 2 && black(work, groups[1].front())) second = follow(work, groups[1].front());
  if (groups.size() == 1) {
    curve.push_back(seed);
    curve.insert(curve.end(), first.begin(), first.end());
    return curve;
  }
  curve.assign(first.rbegin(), first.rend());
  curve.push_back(seed);
  curve.insert(curve.end(), second.begin(), second.end());
  return curve;
}

std::vector<RidgeCurve> trace_all_ridges(const GrayImage& skeleton) {
  if (!is_binary(skeleton)) throw Error(ErrorCode::NotBinary, "tracing expects a {0,255} skeleton");
  for (int y = 0; y < skeleton.height(); ++y)
    for (int x = 0; x < skeleton.width(); ++x)
      if (skeleton.at(x, y) == 0 && neighbor_groups(skeleton, x, y) >= 3) {
        throw Error(ErrorCode::BranchPoint,
                    "branch point at (" + std::to_string(x) + ", " + std::to_string(y) + "); remove Y-junctions first");
      }

  GrayImage work = skeleton;
  std::vector<RidgeCurve> curves;
  for (int y = 0; y < work.height(); ++y)
    for (int x = 0; x < work.width(); ++x)
      if (work.at(x, y) == 0) curves.push_back(trace_from(work, {x, y}));
  return curves;
}

std::vector<RidgeSegment> segment_curves(std::span<const RidgeCurve> curves, int length) {
  if (length < 2) throw Error(ErrorCode::InvalidArgument, "segment length must be >= 2");
  const auto n = static_cast<std::size_t>(length);
  std::vector<RidgeSegment> segments;
  for (const auto& curve : curves)
    for (std::size_t start = 0; start + n <= curve.size(); start += n)
      segments.push_back({std::vector<Point>(curve.begin() + static_cast<std::ptrdiff_t>(start),
                                             curve.begin() + static_cast<std::ptrdiff_t>(start + n))});
  return segments;
}

std::vector<double> sample_signal(const GrayImage& original, const RidgeSegment& segment) {
  std::vector<double> signal;
  signal.reserve(segment.points.size());
  for (const auto& p : segment.points) {
    if (!original.contains(p.x, p.y)) {
      throw Error(ErrorCode::OutOfBounds, "segment point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside image");
    }
    signal.push_back(original.at(p.x, p.y));
  }
  return signal;
}

RawRidgeFeature raw_ridge_feature(const GrayImage& original, std::span<const RidgeSegment> segments, double sigma) {
  if (segments.empty()) throw Error(ErrorCode::NoRidges, "no ridge segment long enough to form a feature");
  const std::size_t n = segments.front().points.size();
  RawRidgeFeature feature;
  feature.values.assign(n, 0.0);
  feature.segment_count = segments.size();
  const FftPlan plan(n);
  std::vector<cplx> buf(n);
  for (const auto& seg : segments) {
    if (seg.points.size() != n) throw Error(ErrorCode::DimMismatch, "segments differ in length");
    auto signal = sample_signal(original, seg);
    if (sigma > 0.0) signal = gaussian_smooth_1d(signal, sigma);
    std::copy(signal.begin(), signal.end(), buf.begin());
    plan.forward(buf);
    for (std::size_t k = 0; k < n; ++k) feature.values[k] += std::abs(buf[k]);
  }
  const double inv = 1.0 / static_cast<double>(segments.size());
  for (auto& v : feature.values) v *= inv;
  return feature;
}

}  // namespace rfdfin
