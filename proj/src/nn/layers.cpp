#include "rfdfin/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "rfdfin/error.hpp"

namespace rfdfin::nn {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
  if (x.rank() != rank) {
    throw Error(ErrorCode::DimMismatch, std::string(layer) + " expects rank " + std::to_string(rank) + ", got " + shape_string(x.shape));
  }
}

void require_same_shape(const Tensor& grad, const Shape& shape, const char* layer) {
  if (grad.shape != shape) {
    throw Error(ErrorCode::DimMismatch, std::string(layer) + " gradient shape " + shape_string(grad.shape) + " != " + shape_string(shape));
  }
}

void xavier_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

// Eight-lane dot product; fixed association order keeps results reproducible.
float dot(const float* a, const float* b, std::size_t n) {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) acc[l] += a[i + static_cast<std::size_t>(l)] * b[i + static_cast<std::size_t>(l)];
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<float> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != numel(shape)) throw Error(ErrorCode::DimMismatch, "tensor data does not match shape " + shape_string(shape));
}

void Layer::consume_tape(const char* layer) const {
  if (!taped_) throw Error(ErrorCode::NoTape, std::string(layer) + ": backward called without a recorded forward pass");
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_{name + ".weight", Tensor({out, in})}, bias_{name + ".bias", Tensor({out})} {}

void Linear::init(Rng& rng) {
  xavier_uniform(weight_.value, in_, out_, rng);
  std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0f);
}

Tensor Linear::forward(const Tensor& x, Mode) {
  require_rank(x, 2, "Linear");
  if (x.dim(1) != in_) throw Error(ErrorCode::DimMismatch, "Linear expects " + std::to_string(in_) + " features, got " + shape_string(x.shape));
  const std::size_t batch = x.dim(0);
  Tensor y({batch, out_});
  const float* w = weight_.value.data.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xb = &x.data[b * in_];
    for (std::size_t o = 0; o < out_; ++o) y.data[b * out_ + o] = bias_.value.data[o] + dot(w + o * in_, xb, in_);
  }
  input_ = x;
  record();
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  consume_tape("Linear");
  const std::size_t batch = input_.dim(0);
  require_same_shape(grad_out, {batch, out_}, "Linear");
  if (weight_.value.grad.empty()) weight_.value.zero_grad();
  if (bias_.value.grad.empty()) bias_.value.zero_grad();
  Tensor dx({batch, in_});
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xb = &input_.data[b * in_];
    for (std::size_t o = 0; o < out_; ++o) {
      const float g = grad_out.data[b * out_ + o];
      bias_.value.grad[o] += g;
      axpy(g, xb, &weight_.value.grad[o * in_], in_);
      axpy(g, &weight_.value.data[o * in_], &dx.data[b * in_], in_);
    }
  }
  release();
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t channels, float momentum, float eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_{name + ".gamma", Tensor({channels}, 1.0f)},
      beta_{name + ".beta", Tensor({channels}, 0.0f)},
      running_mean_(channels, 0.0f),
      running_var_(channels, 1.0f),
      name_(std::move(name)) {}

std::vector<Buffer> BatchNorm::buffers() {
  return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  if (x.rank() != 2 && x.rank() != 4) throw Error(ErrorCode::DimMismatch, "BatchNorm expects [B,C] or [B,C,H,W]");
  if (x.dim(1) != channels_) throw Error(ErrorCode::DimMismatch, "BatchNorm channel mismatch: " + shape_string(x.shape));
  const std::size_t batch = x.dim(0);
  const std::size_t spatial = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const double n = static_cast<double>(batch * spatial);

  Tensor y(x.shape);
  xhat_.resize(x.size());
  inv_std_.assign(channels_, 0.0);
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const float* p = &x.data[(b * channels_ + c) * spatial];
        for (std::size_t s = 0; s < spatial; ++s) sum += p[s];
      }
      mean = sum / n;
      double sq = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const float* p = &x.data[(b * channels_ + c) * spatial];
        for (std::size_t s = 0; s < spatial; ++s) sq += (p[s] - mean) * (p[s] - mean);
      }
      var = sq / n;
      const double unbiased = n > 1.0 ? sq / (n - 1.0) : var;
      running_mean_[c] = static_cast<float>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
      running_var_[c] = static_cast<float>((1.0 - momentum_) * running_var_[c] + momentum_ * unbiased);
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv_std;
    const float g = gamma_.value.data[c], bta = beta_.value.data[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const auto xh = static_cast<float>((x.data[off + s] - mean) * inv_std);
        xhat_[off + s] = xh;
        y.data[off + s] = g * xh + bta;
      }
    }
  }
  mode_ = mode;
  shape_ = x.shape;
  record();
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  consume_tape("BatchNorm");
  require_same_shape(grad_out, shape_, "BatchNorm");
  if (gamma_.value.grad.empty()) gamma_.value.zero_grad();
  if (beta_.value.grad.empty()) beta_.value.zero_grad();
  const std::size_t batch = shape_[0];
  const std::size_t spatial = shape_.size() == 4 ? shape_[2] * shape_[3] : 1;
  const double n = static_cast<double>(batch * spatial);
  Tensor dx(shape_);
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        sum_dy += grad_out.data[off + s];
        sum_dy_xhat += static_cast<double>(grad_out.data[off + s]) * xhat_[off + s];
      }
    }
    gamma_.value.grad[c] += static_cast<float>(sum_dy_xhat);
    beta_.value.grad[c] += static_cast<float>(sum_dy);
    const double scale = gamma_.value.data[c] * inv_std_[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        const double dy = grad_out.data[off + s];
        dx.data[off + s] = mode_ == Mode::Train
                               ? static_cast<float>(scale * (dy - sum_dy / n - xhat_[off + s] * sum_dy_xhat / n))
                               : static_cast<float>(scale * dy);
      }
    }
  }
  release();
  return dx;
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x, Mode) {
  Tensor y = x;
  for (auto& v : y.data) v = v < 0.0f ? 0.0f : v;  // NaN passes through so divergence stays visible
  input_ = x;
  record();
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  consume_tape("ReLU");
  require_same_shape(grad_out, input_.shape, "ReLU");
  Tensor dx(input_.shape);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] = input_.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
  release();
  return dx;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(float p, std::uint64_t seed) : p_(p), rng_(seed) {
  if (p < 0.0f || p >= 1.0f) throw Error(ErrorCode::InvalidArgument, "dropout probability must lie in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::Eval || p_ == 0.0f) {
    mask_.assign(x.size(), 1.0f);
  } else if (fixed_mask_) {
    if (fixed_mask_->size() != x.size()) throw Error(ErrorCode::DimMismatch, "fixed dropout mask size mismatch");
    mask_ = *fixed_mask_;
  } else {
    const float keep = 1.0f / (1.0f - p_);
    mask_.resize(x.size());
    for (auto& m : mask_) m = rng_.uniform() < p_ ? 0.0f : keep;
  }
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= mask_[i];
  record();
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  consume_tape("Dropout");
  if (grad_out.size() != mask_.size()) throw Error(ErrorCode::DimMismatch, "Dropout gradient size mismatch");
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask_[i];
  release();
  return dx;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t pad)
    : cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      pad_(pad),
      weight_{name + ".weight", Tensor({out_channels, in_channels, kernel, kernel})},
      bias_{name + ".bias", Tensor({out_channels})} {}

void Conv2d::init(Rng& rng) {
  xavier_uniform(weight_.value, cin_ * k_ * k_, cout_ * k_ * k_, rng);
  std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0f);
}

namespace {

// Output rows are processed in blocks so the touched input rows, output rows
// and gradients stay cache resident.
constexpr std::size_t kConvRowBlock = 8;

// Output columns [lo, hi) for which tap kx reads an in-image input column.
std::pair<std::size_t, std::size_t> tap_columns(std::size_t kx, std::size_t pad, std::size_t w, std::size_t ow) {
  const auto shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(ow), static_cast<std::ptrdiff_t>(w) - shift);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, Mode) {
  require_rank(x, 4, "Conv2d");
  if (x.dim(1) != cin_) throw Error(ErrorCode::DimMismatch, "Conv2d channel mismatch: " + shape_string(x.shape));
  const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  if (h + 2 * pad_ < k_ || w + 2 * pad_ < k_) throw Error(ErrorCode::TooSmall, "Conv2d input smaller than kernel");
  const std::size_t oh = h + 2 * pad_ - k_ + 1, ow = w + 2 * pad_ - k_ + 1, plane = oh * ow;
  Tensor y({batch, cout_, oh, ow});
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xb = &x.data[b * cin_ * h * w];
    float* yb = &y.data[b * cout_ * plane];
    for (std::size_t oy0 = 0; oy0 < oh; oy0 += kConvRowBlock) {
      const std::size_t oy1 = std::min(oh, oy0 + kConvRowBlock);
      for (std::size_t o = 0; o < cout_; ++o) {
        float* out = yb + o * plane;
        std::fill(out + oy0 * ow, out + oy1 * ow, bias_.value.data[o]);
        for (std::size_t c = 0; c < cin_; ++c)
          for (std::size_t ky = 0; ky < k_; ++ky)
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const auto [lo, hi] = tap_columns(kx, pad_, w, ow);
              if (lo == hi) continue;
              const float wv = weight_.value.data[((o * cin_ + c) * k_ + ky) * k_ + kx];
              for (std::size_t oy = oy0; oy < oy1; ++oy) {
                const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad_);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                axpy(wv, xb + (c * h + static_cast<std::size_t>(iy)) * w + lo + kx - pad_, out + oy * ow + lo, hi - lo);
              }
            }
      }
    }
  }
  input_ = x;
  record();
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  consume_tape("Conv2d");
  const std::size_t batch = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const std::size_t oh = h + 2 * pad_ - k_ + 1, ow = w + 2 * pad_ - k_ + 1, plane = oh * ow;
  require_same_shape(grad_out, {batch, cout_, oh, ow}, "Conv2d");
  if (weight_.value.grad.empty()) weight_.value.zero_grad();
  if (bias_.value.grad.empty()) bias_.value.zero_grad();

  Tensor dx;
  if (input_grad_) dx = Tensor(input_.shape);
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xb = &input_.data[b * cin_ * h * w];
    const float* gb = &grad_out.data[b * cout_ * plane];
    float* dxb = input_grad_ ? &dx.data[b * cin_ * h * w] : nullptr;
    for (std::size_t o = 0; o < cout_; ++o) {
      float gsum = 0.0f;
      for (std::size_t i = 0; i < plane; ++i) gsum += gb[o * plane + i];
      bias_.value.grad[o] += gsum;
    }
    for (std::size_t oy0 = 0; oy0 < oh; oy0 += kConvRowBlock) {
      const std::size_t oy1 = std::min(oh, oy0 + kConvRowBlock);
      for (std::size_t o = 0; o < cout_; ++o) {
        const float* g = gb + o * plane;
        for (std::size_t c = 0; c < cin_; ++c)
          for (std::size_t ky = 0; ky < k_; ++ky)
            for (std::size_t kx = 0; kx < k_; ++kx) {
              const auto [lo, hi] = tap_columns(kx, pad_, w, ow);
              if (lo == hi) continue;
              const std::size_t widx = ((o * cin_ + c) * k_ + ky) * k_ + kx;
              const float wv = weight_.value.data[widx];
              float acc = 0.0f;
              for (std::size_t oy = oy0; oy < oy1; ++oy) {
                const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad_);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                const std::size_t in_off = (c * h + static_cast<std::size_t>(iy)) * w + lo + kx - pad_;
                acc += dot(g + oy * ow + lo, xb + in_off, hi - lo);
                if (dxb) axpy(wv, g + oy * ow + lo, dxb + in_off, hi - lo);
              }
              weight_.value.grad[widx] += acc;
            }
      }
    }
  }
  release();
  if (!input_grad_) return Tensor(input_.shape);
  return dx;
}

// ---------------------------------------------------------------- pooling

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  require_rank(x, 4, "MaxPool2d");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / size_, ow = w / size_;
  if (oh == 0 || ow == 0) throw Error(ErrorCode::TooSmall, "MaxPool2d input smaller than window");
  Tensor y({batch, ch, oh, ow});
  argmax_.resize(y.size());
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const float* src = &x.data[bc * h * w];
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * size_) * w + ox * size_;
        for (std::size_t dy = 0; dy < size_; ++dy)
          for (std::size_t dx = 0; dx < size_; ++dx) {
            const std::size_t idx = (oy * size_ + dy) * w + ox * size_ + dx;
            if (src[idx] > src[best]) best = idx;
          }
        const std::size_t o = bc * oh * ow + oy * ow + ox;
        y.data[o] = src[best];
        argmax_[o] = bc * h * w + best;
      }
  }
  in_shape_ = x.shape;
  record();
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  consume_tape("MaxPool2d");
  if (grad_out.size() != argmax_.size()) throw Error(ErrorCode::DimMismatch, "MaxPool2d gradient size mismatch");
  Tensor dx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += grad_out.data[i];
  release();
  return dx;
}

Tensor AdaptiveMaxPool2d::forward(const Tensor& x, Mode) {
  require_rank(x, 4, "AdaptiveMaxPool2d");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({batch, ch, out_h_, out_w_});
  argmax_.resize(y.size());
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const float* src = &x.data[bc * h * w];
    for (std::size_t oy = 0; oy < out_h_; ++oy) {
      const std::size_t y0 = oy * h / out_h_, y1 = ((oy + 1) * h + out_h_ - 1) / out_h_;
      for (std::size_t ox = 0; ox < out_w_; ++ox) {
        const std::size_t x0 = ox * w / out_w_, x1 = ((ox + 1) * w + out_w_ - 1) / out_w_;
        std::size_t best = y0 * w + x0;
        for (std::size_t yy = y0; yy < y1; ++yy)
          for (std::size_t xx = x0; xx < x1; ++xx)
            if (src[yy * w + xx] > src[best]) best = yy * w + xx;
        const std::size_t o = bc * out_h_ * out_w_ + oy * out_w_ + ox;
        y.data[o] = src[best];
        argmax_[o] = bc * h * w + best;
      }
    }
  }
  in_shape_ = x.shape;
  record();
  return y;
}

Tensor AdaptiveMaxPool2d::backward(const Tensor& grad_out) {
  consume_tape("AdaptiveMaxPool2d");
  if (grad_out.size() != argmax_.size()) throw Error(ErrorCode::DimMismatch, "AdaptiveMaxPool2d gradient size mismatch");
  Tensor dx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += grad_out.data[i];
  release();
  return dx;
}

Tensor Flatten::forward(const Tensor& x, Mode) {
  if (x.rank() < 2) throw Error(ErrorCode::DimMismatch, "Flatten expects a batch axis");
  in_shape_ = x.shape;
  record();
  return Tensor({x.dim(0), x.size() / x.dim(0)}, x.data);
}

Tensor Flatten::backward(const Tensor& grad_out) {
  consume_tape("Flatten");
  release();
  return Tensor(in_shape_, grad_out.data);
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, mode);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Sequential::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (auto* p : l->parameters()) out.push_back(p);
  return out;
}

std::vector<Buffer> Sequential::buffers() {
  std::vector<Buffer> out;
  for (auto& l : layers_)
    for (auto& b : l->buffers()) out.push_back(b);
  return out;
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

// ---------------------------------------------------------------- loss

LossResult cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  if (batch == 0 || labels.empty()) throw Error(ErrorCode::EmptyBatch, "cross entropy over an empty batch");
  if (labels.size() != batch) throw Error(ErrorCode::DimMismatch, "label count does not match batch");
  LossResult out{0.0, Tensor(logits.shape)};
  for (std::size_t b = 0; b < batch; ++b) {
    const auto label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw Error(ErrorCode::InvalidArgument, "label out of range");
    const float* z = &logits.data[b * k];
    const double zmax = *std::max_element(z, z + k);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(z[j] - zmax);
    const double log_denom = std::log(denom) + zmax;
    out.loss += log_denom - z[static_cast<std::size_t>(label)];
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(z[j] - log_denom);
      out.grad.data[b * k + j] = static_cast<float>((p - (j == static_cast<std::size_t>(label) ? 1.0 : 0.0)) / batch);
    }
  }
  out.loss /= static_cast<double>(batch);
  return out;
}

}  // namespace rfdfin::nn
