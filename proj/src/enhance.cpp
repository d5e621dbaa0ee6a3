#include "rfdfin/enhance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace {

// Ring order: E, NE, N, NW, W, SW, S, SE (y grows downwards).
constexpr std::array<int, 8> kRingDx = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kRingDy = {0, -1, -1, -1, 0, 1, 1, 1};

void require_binary(const GrayImage& img, const char* op) {
  if (!is_binary(img)) throw Error(ErrorCode::NotBinary, std::string(op) + " expects a {0,255} image");
}

bool black(const GrayImage& img, int x, int y) { return img.contains(x, y) && img.at(x, y) == 0; }

unsigned ring_mask(const GrayImage& img, int x, int y) {
  unsigned mask = 0;
  for (int k = 0; k < 8; ++k)
    if (black(img, x + kRingDx[static_cast<std::size_t>(k)], y + kRingDy[static_cast<std::size_t>(k)])) mask |= 1u << k;
  return mask;
}

// Number of 8-connected groups formed by the set ring positions of `mask`.
std::array<std::uint8_t, 256> make_group_table() {
  std::array<std::uint8_t, 256> table{};
  for (unsigned mask = 0; mask < 256; ++mask) {
    std::array<int, 8> label{};
    label.fill(-1);
    int groups = 0;
    for (int s = 0; s < 8; ++s) {
      if (!(mask & (1u << s)) || label[static_cast<std::size_t>(s)] >= 0) continue;
      std::array<int, 8> stack{};
      int top = 0;
      stack[static_cast<std::size_t>(top++)] = s;
      label[static_cast<std::size_t>(s)] = groups;
      while (top > 0) {
        const int a = stack[static_cast<std::size_t>(--top)];
        for (int b = 0; b < 8; ++b) {
          if (!(mask & (1u << b)) || label[static_cast<std::size_t>(b)] >= 0) continue;
          const int dx = std::abs(kRingDx[static_cast<std::size_t>(a)] - kRingDx[static_cast<std::size_t>(b)]);
          const int dy = std::abs(kRingDy[static_cast<std::size_t>(a)] - kRingDy[static_cast<std::size_t>(b)]);
          if (dx <= 1 && dy <= 1) {
            label[static_cast<std::size_t>(b)] = groups;
            stack[static_cast<std::size_t>(top++)] = b;
          }
        }
      }
      ++groups;
    }
    table[mask] = static_cast<std::uint8_t>(groups);
  }
  return table;
}

const std::array<std::uint8_t, 256>& group_table() {
  static const auto table = make_group_table();
  return table;
}

// Yokoi connectivity number for 8-connected foreground: 1 iff removing the
// pixel leaves the local topology unchanged.
int yokoi8(unsigned mask) {
  auto bg = [mask](int k) { return (mask & (1u << (k % 8))) ? 0 : 1; };
  int n = 0;
  for (int k = 0; k < 8; k += 2) n += bg(k) - bg(k) * bg(k + 1) * bg(k + 2);
  return n;
}

std::vector<double> make_gabor_kernel(double angle, const GaborParams& p, int half) {
  const int side = 2 * half + 1;
  std::vector<double> k(static_cast<std::size_t>(side * side));
  const double s = std::sin(angle), c = std::cos(angle);
  double mean = 0.0;
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) {
      const double across = -dx * s + dy * c;
      const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
      const double v = env * std::cos(2.0 * std::numbers::pi * p.ridge_freq * across);
      k[static_cast<std::size_t>((dy + half) * side + dx + half)] = v;
      mean += v;
    }
  mean /= static_cast<double>(k.size());
  for (auto& v : k) v -= mean;
  return k;
}

}  // namespace

OrientationField estimate_orientation(const GrayImage& img, int block_size) {
  if (block_size < 4) throw Error(ErrorCode::InvalidArgument, "block size must be >= 4");
  OrientationField field;
  field.block_size = block_size;
  field.blocks_x = (img.width() + block_size - 1) / block_size;
  field.blocks_y = (img.height() + block_size - 1) / block_size;
  const auto nblocks = static_cast<std::size_t>(field.blocks_x * field.blocks_y);
  std::vector<double> vxy(nblocks, 0.0), vdiff(nblocks, 0.0), energy(nblocks, 0.0);

  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double gx = 0.5 * (img.clamped(x + 1, y) - img.clamped(x - 1, y));
      const double gy = 0.5 * (img.clamped(x, y + 1) - img.clamped(x, y - 1));
      const auto b = static_cast<std::size_t>((y / block_size) * field.blocks_x + x / block_size);
      vxy[b] += 2.0 * gx * gy;
      vdiff[b] += gx * gx - gy * gy;
      energy[b] += gx * gx + gy * gy;
    }

  field.angles.resize(nblocks);
  field.coherence.resize(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    if (energy[b] <= 1e-12) {
      field.angles[b] = 0.0;
      field.coherence[b] = 0.0;
      continue;
    }
    // Dominant gradient direction; ridges run perpendicular to it.
    const double grad = 0.5 * std::atan2(vxy[b], vdiff[b]);
    double ridge = grad + std::numbers::pi / 2.0;
    ridge = std::fmod(ridge, std::numbers::pi);
    if (ridge < 0.0) ridge += std::numbers::pi;
    if (ridge >= std::numbers::pi) ridge -= std::numbers::pi;
    field.angles[b] = ridge;
    field.coherence[b] = std::clamp(std::hypot(vxy[b], vdiff[b]) / energy[b], 0.0, 1.0);
  }
  return field;
}

GrayImage gabor_enhance(const GrayImage& img, const OrientationField& field, const GaborParams& params) {
  if (!(params.ridge_freq > 0.0 && params.ridge_freq < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "ridge frequency must lie in (0, 0.5)");
  }
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gabor sigma must be positive");
  const int bs = field.block_size;
  if (field.blocks_x != (img.width() + bs - 1) / bs || field.blocks_y != (img.height() + bs - 1) / bs) {
    throw Error(ErrorCode::DimMismatch, "orientation field does not cover the image");
  }

  constexpr int kOrientations = 36;
  const int half = static_cast<int>(std::ceil(2.0 * params.sigma));
  const int side = 2 * half + 1;
  std::vector<std::vector<double>> bank;
  bank.reserve(kOrientations);
  for (int i = 0; i < kOrientations; ++i) bank.push_back(make_gabor_kernel(std::numbers::pi * i / kOrientations, params, half));

  const int w = img.width(), h = img.height();
  // Edge-replicated copy so the inner loop runs without bounds checks.
  const int pw = w + 2 * half;
  std::vector<double> padded(static_cast<std::size_t>(pw * (h + 2 * half)));
  for (int y = -half; y < h + half; ++y)
    for (int x = -half; x < w + half; ++x)
      padded[static_cast<std::size_t>((y + half) * pw + x + half)] = img.clamped(x, y);

  std::vector<double> response(static_cast<std::size_t>(w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double angle = field.angle_at(x / bs, y / bs);
      const int q = static_cast<int>(std::lround(angle / std::numbers::pi * kOrientations)) % kOrientations;
      const auto& kern = bank[static_cast<std::size_t>(q)];
      double acc = 0.0;
      for (int dy = 0; dy < side; ++dy) {
        const double* row = &padded[static_cast<std::size_t>((y + dy) * pw + x)];
        const double* krow = &kern[static_cast<std::size_t>(dy * side)];
        for (int dx = 0; dx < side; ++dx) acc += krow[dx] * row[dx];
      }
      response[static_cast<std::size_t>(y * w + x)] = acc;
    }

  const auto [lo, hi] = std::minmax_element(response.begin(), response.end());
  const double range = *hi - *lo;
  if (range < 1e-6) return img;  // no structure to enhance
  FloatImage out(w, h);
  for (std::size_t i = 0; i < response.size(); ++i) out.values()[i] = 255.0 * (response[i] - *lo) / range;
  return to_gray(out);
}

GrayImage fill_pores(const GrayImage& binary) {
  require_binary(binary, "fill_pores");
  GrayImage out = binary;
  for (int y = 0; y < binary.height(); ++y)
    for (int x = 0; x < binary.width(); ++x) {
      if (binary.at(x, y) != 255) continue;
      int count = 0;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if ((dx != 0 || dy != 0) && black(binary, x + dx, y + dy)) ++count;
      if (count > 15) out.at(x, y) = 0;
    }
  return out;
}

GrayImage thin(const GrayImage& binary) {
  require_binary(binary, "thin");
  GrayImage img = binary;
  // Border directions N, S, E, W as (dx, dy) of the white 4-neighbour.
  constexpr std::array<std::array<int, 2>, 4> kSides = {{{0, -1}, {0, 1}, {1, 0}, {-1, 0}}};
  std::vector<std::pair<int, int>> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& side : kSides) {
      candidates.clear();
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
          if (img.at(x, y) == 0 && !black(img, x + side[0], y + side[1])) candidates.emplace_back(x, y);
      for (const auto& [x, y] : candidates) {
        const unsigned mask = ring_mask(img, x, y);
        if (std::popcount(mask) < 2) continue;  // endpoint or isolated pixel
        if (yokoi8(mask) != 1) continue;
        img.at(x, y) = 255;
        changed = true;
      }
    }
  }
  return img;
}

int neighbor_groups(const GrayImage& img, int x, int y) { return group_table()[ring_mask(img, x, y)]; }

GrayImage remove_y_junctions(const GrayImage& skeleton) {
  require_binary(skeleton, "remove_y_junctions");
  GrayImage img = skeleton;
  std::vector<std::pair<int, int>> branch;
  do {
    branch.clear();
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (img.at(x, y) == 0 && neighbor_groups(img, x, y) >= 3) branch.emplace_back(x, y);
    for (const auto& [x, y] : branch) img.at(x, y) = 255;
  } while (!branch.empty());
  return img;
}

RidgeStages ridge_preprocess_stages(const GrayImage& img, const RidgeParams& params) {
  auto median1 = median_filter(img, params.median_radius);
  const auto field = estimate_orientation(median1, params.block_size);
  auto enhanced = gabor_enhance(median1, field, params.gabor);
  auto median2 = median_filter(enhanced, params.median_radius);
  auto binary = threshold_binarize(median2, params.threshold);
  auto filled = fill_pores(binary);
  auto thinned = thin(filled);
  auto skeleton = remove_y_junctions(thinned);
  return {std::move(median1), std::move(enhanced), std::move(median2), std::move(binary),
          std::move(filled),  std::move(thinned),  std::move(skeleton)};
}

GrayImage ridge_preprocess(const GrayImage& img, const RidgeParams& params) {
  return ridge_preprocess_stages(img, params).skeleton;
}

}  // namespace rfdfin
