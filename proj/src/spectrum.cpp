#include "rfdfin/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rfdfin/error.hpp"

namespace rfdfin {

namespace {

void require_kind(const Spectrum2D& spec, SpectrumKind kind, const char* what) {
  if (spec.kind != kind) throw Error(ErrorCode::InvalidArgument, what);
}

void transform_2d(std::vector<cplx>& plane, int width, int height, bool inverse) {
  const FftPlan row_plan(static_cast<std::size_t>(width));
  const FftPlan col_plan(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    std::span<cplx> row(plane.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width),
                        static_cast<std::size_t>(width));
    inverse ? row_plan.inverse(row) : row_plan.forward(row);
  }
  std::vector<cplx> column(static_cast<std::size_t>(height));
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) column[static_cast<std::size_t>(y)] = plane[static_cast<std::size_t>(y * width + x)];
    inverse ? col_plan.inverse(column) : col_plan.forward(column);
    for (int y = 0; y < height; ++y) plane[static_cast<std::size_t>(y * width + x)] = column[static_cast<std::size_t>(y)];
  }
}

// Orthonormal DCT-II basis: C[k][n] = s_k cos(pi (2n + 1) k / 2N).
std::vector<double> dct_basis(int n) {
  std::vector<double> c(static_cast<std::size_t>(n * n));
  for (int k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      c[static_cast<std::size_t>(k * n + i)] = s * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
  }
  return c;
}

}  // namespace

Spectrum2D fft2(const FloatImage& img) {
  Spectrum2D out;
  out.width = img.width();
  out.height = img.height();
  out.kind = SpectrumKind::FftComplex;
  out.bins.assign(img.values().begin(), img.values().end());
  transform_2d(out.bins, out.width, out.height, false);
  return out;
}

Spectrum2D fft2(const GrayImage& img) { return fft2(to_float(img)); }

FloatImage ifft2_real(const Spectrum2D& spec) {
  require_kind(spec, SpectrumKind::FftComplex, "inverse FFT needs a complex plane");
  std::vector<cplx> plane = spec.bins;
  transform_2d(plane, spec.width, spec.height, true);
  std::vector<double> re(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) re[i] = plane[i].real();
  return FloatImage(spec.width, spec.height, std::move(re));
}

Spectrum2D log_magnitude(const Spectrum2D& spec, double epsilon) {
  require_kind(spec, SpectrumKind::FftComplex, "log magnitude needs a complex plane");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  Spectrum2D out;
  out.width = spec.width;
  out.height = spec.height;
  out.kind = SpectrumKind::FftLogMag;
  out.values.resize(spec.bins.size());
  for (std::size_t i = 0; i < spec.bins.size(); ++i) out.values[i] = std::log(std::abs(spec.bins[i]) + epsilon);
  return out;
}

Spectrum2D fft_log_spectrum(const GrayImage& img, double epsilon) { return log_magnitude(fft2(img), epsilon); }

std::vector<double> dct2(const FloatImage& img) {
  const int w = img.width();
  const int h = img.height();
  const auto cw = dct_basis(w);
  const auto ch = dct_basis(h);
  const auto src = img.values();
  // rows first, then columns
  std::vector<double> tmp(src.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int k = 0; k < w; ++k) {
      double acc = 0.0;
      for (int x = 0; x < w; ++x) acc += cw[static_cast<std::size_t>(k * w + x)] * src[static_cast<std::size_t>(y * w + x)];
      tmp[static_cast<std::size_t>(y * w + k)] = acc;
    }
  std::vector<double> out(src.size(), 0.0);
  for (int k = 0; k < h; ++k)
    for (int y = 0; y < h; ++y) {
      const double c = ch[static_cast<std::size_t>(k * h + y)];
      for (int u = 0; u < w; ++u) out[static_cast<std::size_t>(k * w + u)] += c * tmp[static_cast<std::size_t>(y * w + u)];
    }
  return out;
}

Spectrum2D dct2_log(const FloatImage& img, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  Spectrum2D out;
  out.width = img.width();
  out.height = img.height();
  out.kind = SpectrumKind::DctLogMag;
  out.values = dct2(img);
  for (auto& v : out.values) v = std::log(std::abs(v) + epsilon);
  return out;
}

Spectrum2D mirror_log_spectrum(const Spectrum2D& logmag) {
  require_kind(logmag, SpectrumKind::FftLogMag, "mirroring needs an FFT log-magnitude plane");
  Spectrum2D out = logmag;
  const int w = logmag.width;
  for (int v = 0; v < logmag.height; ++v)
    for (int u = 0; u < w; ++u) out.values[out.index(u, v)] = logmag.value((w - u) % w, v);
  return out;
}

SpectrumAccumulator::SpectrumAccumulator(SpectrumKind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {
  if (kind == SpectrumKind::FftComplex) throw Error(ErrorCode::InvalidArgument, "accumulator averages real log spectra");
}

void SpectrumAccumulator::add(const GrayImage& img) {
  add_spectrum(kind_ == SpectrumKind::FftLogMag ? fft_log_spectrum(img, epsilon_) : dct2_log(to_float(img), epsilon_));
}

void SpectrumAccumulator::add_spectrum(const Spectrum2D& spec) {
  if (spec.kind != kind_) throw Error(ErrorCode::InvalidArgument, "spectrum kind does not match accumulator");
  if (count_ == 0) {
    width_ = spec.width;
    height_ = spec.height;
    sum_.assign(spec.values.size(), 0.0);
  } else if (spec.width != width_ || spec.height != height_) {
    throw Error(ErrorCode::DimMismatch, "all corpus images must share dimensions");
  }
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += spec.values[i];
  ++count_;
}

void SpectrumAccumulator::merge(const SpectrumAccumulator& other) {
  if (other.count_ == 0) return;
  if (other.kind_ != kind_) throw Error(ErrorCode::InvalidArgument, "cannot merge accumulators of different kinds");
  if (count_ == 0) {
    *this = other;
    return;
  }
  if (other.width_ != width_ || other.height_ != height_) throw Error(ErrorCode::DimMismatch, "shard dimensions differ");
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += other.sum_[i];
  count_ += other.count_;
}

Spectrum2D SpectrumAccumulator::mean() const {
  if (count_ == 0) throw Error(ErrorCode::EmptyCorpus, "no images accumulated");
  Spectrum2D out;
  out.width = width_;
  out.height = height_;
  out.kind = kind_;
  out.values = sum_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (auto& v : out.values) v *= inv;
  return out;
}

Spectrum2D mean_spectrum(std::span<const GrayImage> images, SpectrumKind kind) {
  SpectrumAccumulator acc(kind);
  for (const auto& img : images) acc.add(img);
  return acc.mean();
}

SpectrumDiff spectrum_diff(const Spectrum2D& a, const Spectrum2D& b) {
  if (a.width != b.width || a.height != b.height) throw Error(ErrorCode::DimMismatch, "spectra differ in size");
  if (a.kind != b.kind || a.kind == SpectrumKind::FftComplex) {
    throw Error(ErrorCode::InvalidArgument, "difference needs two real spectra of the same kind");
  }
  SpectrumDiff out;
  out.diff = a;
  double sq = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    out.diff.values[i] = d;
    sq += d * d;
    sum += d;
    out.max_abs = std::max(out.max_abs, std::abs(d));
  }
  out.l2 = std::sqrt(sq);
  out.mean = sum / static_cast<double>(a.values.size());
  return out;
}

double radial_frequency(int u, int v, int width, int height) {
  const double fu = std::min(u, width - u) / (width / 2.0);
  const double fv = std::min(v, height - v) / (height / 2.0);
  return std::sqrt(fu * fu + fv * fv);
}

double high_frequency_mean(const Spectrum2D& spec, double cutoff) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u)
      if (radial_frequency(u, v, spec.width, spec.height) > cutoff) {
        sum += spec.value(u, v);
        ++n;
      }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Heatmap to_heatmap(const Spectrum2D& spec, bool center_dc) {
  if (spec.kind == SpectrumKind::FftComplex) throw Error(ErrorCode::InvalidArgument, "heatmap needs a real plane");
  const auto [lo, hi] = std::minmax_element(spec.values.begin(), spec.values.end());
  Heatmap out{GrayImage(spec.width, spec.height, 0), *lo, *hi};
  const double range = *hi - *lo;
  const bool shift = center_dc && spec.kind == SpectrumKind::FftLogMag;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      const double t = range > 0.0 ? (spec.value(u, v) - *lo) / range : 0.0;
      const int x = shift ? (u + spec.width / 2) % spec.width : u;
      const int y = shift ? (v + spec.height / 2) % spec.height : v;
      out.image.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  return out;
}

}  // namespace rfdfin
