#pragma once

#include <filesystem>

#include "rfdfin/imgproc.hpp"

namespace rfdfin {

// Reads binary/ascii PGM (P5/P2) or PNG, chosen by file signature. Colour PNGs
// are reduced to gray with integer luma (299 R + 587 G + 114 B) / 1000.
GrayImage read_image(const std::filesystem::path& path);

void write_pgm(const GrayImage& img, const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);

// Dispatches on extension: ".png" writes PNG, anything else PGM.
void write_image(const GrayImage& img, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

}  // namespace rfdfin
