#include "rfdfin/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
  }
}

std::size_t area(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(area(width, height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != area(width, height)) {
    throw Error(ErrorCode::DimMismatch, "pixel buffer does not match image dimensions");
  }
}

std::uint8_t GrayImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return data_[index(x, y)];
}

FloatImage::FloatImage(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(area(width, height), fill);
}

FloatImage::FloatImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != area(width, height)) {
    throw Error(ErrorCode::DimMismatch, "value buffer does not match image dimensions");
  }
}

FloatImage to_float(const GrayImage& img) {
  const auto px = img.pixels();
  return FloatImage(img.width(), img.height(), std::vector<double>(px.begin(), px.end()));
}

GrayImage to_gray(const FloatImage& img) {
  std::vector<std::uint8_t> out(img.size());
  const auto v = img.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = v[i];
    out[i] = std::isfinite(x) ? static_cast<std::uint8_t>(std::clamp(std::round(x), 0.0, 255.0)) : 0;
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage median_filter(const GrayImage& img, int radius) {
  if (radius < 1) throw Error(ErrorCode::InvalidArgument, "median radius must be >= 1");
  GrayImage out(img.width(), img.height());
  const int side = 2 * radius + 1;
  const std::size_t mid = static_cast<std::size_t>(side * side) / 2;
  std::vector<std::uint8_t> window(static_cast<std::size_t>(side * side));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::size_t k = 0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) window[k++] = img.clamped(x + dx, y + dy);
      std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid), window.end());
      out.at(x, y) = window[mid];
    }
  }
  return out;
}

std::vector<double> gaussian_smooth_1d(std::span<const double> signal, double sigma) {
  if (signal.empty()) throw Error(ErrorCode::EmptySignal, "cannot smooth an empty signal");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");

  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double w = std::exp(-(k * k) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(k + half)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  const int n = static_cast<int>(signal.size());
  std::vector<double> out(signal.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      const int j = std::clamp(i + k, 0, n - 1);
      acc += kernel[static_cast<std::size_t>(k + half)] * signal[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  // A convex combination can drift one ulp past the input range; pin it.
  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  for (auto& v : out) v = std::clamp(v, *lo, *hi);
  return out;
}

GrayImage threshold_binarize(const GrayImage& img, std::uint8_t threshold) {
  GrayImage out(img.width(), img.height());
  auto dst = out.pixels();
  const auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] < threshold ? 0 : 255;
  return out;
}

GrayImage center_crop_or_pad(const GrayImage& img, int out_width, int out_height, std::uint8_t fill) {
  GrayImage out(out_width, out_height, fill);
  const int src_x = std::max(0, (img.width() - out_width) / 2);
  const int src_y = std::max(0, (img.height() - out_height) / 2);
  const int dst_x = std::max(0, (out_width - img.width()) / 2);
  const int dst_y = std::max(0, (out_height - img.height()) / 2);
  const int copy_w = std::min(img.width(), out_width);
  const int copy_h = std::min(img.height(), out_height);
  for (int y = 0; y < copy_h; ++y)
    for (int x = 0; x < copy_w; ++x) out.at(dst_x + x, dst_y + y) = img.at(src_x + x, src_y + y);
  return out;
}

GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(img.width() - 1 - x, y) = img.at(x, y);
  return out;
}

bool is_binary(const GrayImage& img) {
  return std::all_of(img.pixels().begin(), img.pixels().end(), [](std::uint8_t v) { return v == 0 || v == 255; });
}

}  // namespace rfdfin
