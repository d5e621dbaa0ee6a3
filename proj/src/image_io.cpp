#include "rfdfin/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Whitespace/comment-aware token reader for the PNM header.
class PnmHeader {
 public:
  explicit PnmHeader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  int next_int(const fs::path& path) {
    skip();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw Error(ErrorCode::Corrupt, "bad PGM header in " + path.string());
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1 << 24)) throw Error(ErrorCode::Corrupt, "PGM value out of range in " + path.string());
    }
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 2;
};

GrayImage decode_pgm(const std::vector<unsigned char>& bytes, const fs::path& path) {
  const bool binary = bytes[1] == '5';
  PnmHeader header(bytes);
  const int width = header.next_int(path);
  const int height = header.next_int(path);
  const int maxval = header.next_int(path);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) throw Error(ErrorCode::Corrupt, "bad PGM header in " + path.string());

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> px(count);
  auto rescale = [maxval](long v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  if (binary) {
    header.advance();  // single whitespace byte after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (bytes.size() < header.pos() + count * bpp) throw Error(ErrorCode::Corrupt, "truncated PGM " + path.string());
    const unsigned char* p = bytes.data() + header.pos();
    for (std::size_t i = 0; i < count; ++i) {
      const long v = bpp == 1 ? p[i] : (static_cast<long>(p[2 * i]) << 8) | p[2 * i + 1];
      px[i] = rescale(std::min<long>(v, maxval));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) px[i] = rescale(std::min(header.next_int(path), maxval));
  }
  return GrayImage(width, height, std::move(px));
}

GrayImage decode_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::Corrupt, "cannot decode PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::Corrupt, "cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < px.size(); ++i) {
    const unsigned r = rgba[4 * i], g = rgba[4 * i + 1], b = rgba[4 * i + 2];
    px[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
  }
  return GrayImage(width, height, std::move(px));
}

}  // namespace

GrayImage read_image(const fs::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) return decode_pgm(bytes, path);
  throw Error(ErrorCode::Corrupt, "unrecognized image format: " + path.string());
}

void write_pgm(const GrayImage& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

void write_png(const GrayImage& img, const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

void write_image(const GrayImage& img, const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    write_png(img, path);
  } else {
    write_pgm(img, path);
  }
}

bool is_image_file(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

}  // namespace rfdfin
