#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rfdfin {

// 8-bit single-channel raster. 0 is black (ridge), 255 is white (background).
class GrayImage {
 public:
  GrayImage(int width, int height, std::uint8_t fill = 255);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

  // Edge-replicated read; x and y may lie outside the raster.
  std::uint8_t clamped(int x, int y) const;

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

class FloatImage {
 public:
  FloatImage(int width, int height, double fill = 0.0);
  FloatImage(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double at(int x, int y) const { return data_[index(x, y)]; }
  double& at(int x, int y) { return data_[index(x, y)]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> data_;
};

FloatImage to_float(const GrayImage& img);

// Rounds half away from zero and clamps to [0, 255]. Non-finite values map to 0.
GrayImage to_gray(const FloatImage& img);

GrayImage median_filter(const GrayImage& img, int radius = 1);

// Gaussian kernel truncated at +-3 sigma (at least one tap each side) and
// renormalized to unit sum; borders are edge-replicated.
std::vector<double> gaussian_smooth_1d(std::span<const double> signal, double sigma);

// pixel < threshold -> 0 (ridge), otherwise 255.
GrayImage threshold_binarize(const GrayImage& img, std::uint8_t threshold);

GrayImage center_crop_or_pad(const GrayImage& img, int out_width, int out_height, std::uint8_t fill = 255);

GrayImage flip_horizontal(const GrayImage& img);

bool is_binary(const GrayImage& img);

}  // namespace rfdfin
