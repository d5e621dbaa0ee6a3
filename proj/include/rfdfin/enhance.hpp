#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rfdfin/imgproc.hpp"

namespace rfdfin {

// Per-block ridge direction (radians in [0, pi), measured from +x towards +y
// in image coordinates) and gradient coherence in [0, 1].
struct OrientationField {
  int block_size = 16;
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<double> angles;
  std::vector<double> coherence;

  double angle_at(int bx, int by) const { return angles[static_cast<std::size_t>(by * blocks_x + bx)]; }
  double coherence_at(int bx, int by) const { return coherence[static_cast<std::size_t>(by * blocks_x + bx)]; }
};

OrientationField estimate_orientation(const GrayImage& img, int block_size = 16);

struct GaborParams {
  double ridge_freq = 0.1;  // cycles per pixel
  double sigma = 4.0;       // isotropic envelope, pixels
};

// Even-symmetric, zero-mean Gabor filtering along each block's ridge
// direction; the response is min-max stretched to [0, 255].
GrayImage gabor_enhance(const GrayImage& img, const OrientationField& field, const GaborParams& params = {});

// White pixels with more than 15 black pixels among their (up to) 24
// neighbours in the 5x5 window turn black. Decisions read the input only.
GrayImage fill_pores(const GrayImage& binary);

// Topology-preserving thinning to 8-connected single-pixel curves.
GrayImage thin(const GrayImage& binary);

// Black neighbours of (x, y) grouped by 8-adjacency inside the 3x3 ring.
int neighbor_groups(const GrayImage& img, int x, int y);

// Deletes branch points (>= 3 neighbour groups) until none remain.
GrayImage remove_y_junctions(const GrayImage& skeleton);

struct RidgeParams {
  std::uint8_t threshold = 100;
  int median_radius = 1;
  int block_size = 16;
  GaborParams gabor{};
};

struct RidgeStages {
  GrayImage median1;
  GrayImage enhanced;
  GrayImage median2;
  GrayImage binary;
  GrayImage filled;
  GrayImage thinned;
  GrayImage skeleton;
};

// median -> gabor -> median -> binarize -> fill_pores -> thin -> remove_y_junctions
GrayImage ridge_preprocess(const GrayImage& img, const RidgeParams& params = {});
RidgeStages ridge_preprocess_stages(const GrayImage& img, const RidgeParams& params = {});

}  // namespace rfdfin
