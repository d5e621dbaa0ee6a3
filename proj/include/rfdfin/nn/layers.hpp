#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rfdfin/nn/tensor.hpp"
#include "rfdfin/random.hpp"

namespace rfdfin::nn {

// A layer caches what it needs during forward(); backward() consumes that
// tape, accumulates parameter gradients and returns the input gradient.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<Buffer> buffers() { return {}; }
  virtual void init(Rng& /*rng*/) {}

 protected:
  void record() { taped_ = true; }
  void consume_tape(const char* layer) const;
  void release() { taped_ = false; }

 private:
  bool taped_ = false;
};

class Linear : public Layer {
 public:
  Linear(std::string name, std::size_t in, std::size_t out);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void init(Rng& rng) override;  // Xavier-uniform weights, zero bias

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter weight_;  // [out, in]
  Parameter bias_;    // [out]
  Tensor input_;
};

// Normalizes channel axis 1 of [B, C] or [B, C, H, W] inputs.
class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, std::size_t channels, float momentum = 0.1f, float eps = 1e-5f);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<Buffer> buffers() override;

  std::vector<float>& running_mean() { return running_mean_; }
  std::vector<float>& running_var() { return running_var_; }
  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }

 private:
  std::size_t channels_;
  float momentum_, eps_;
  Parameter gamma_, beta_;
  std::vector<float> running_mean_, running_var_;
  std::string name_;
  // tape
  Mode mode_ = Mode::Eval;
  Shape shape_;
  std::vector<float> xhat_;
  std::vector<double> inv_std_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

// Inverted dropout. A fixed mask may be installed for reproducible checks.
class Dropout : public Layer {
 public:
  Dropout(float p, std::uint64_t seed);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  void set_fixed_mask(std::optional<std::vector<float>> mask) { fixed_mask_ = std::move(mask); }

 private:
  float p_;
  Rng rng_;
  std::optional<std::vector<float>> fixed_mask_;
  std::vector<float> mask_;
};

// Square kernel, stride 1, symmetric zero padding; input [B, Cin, H, W].
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel = 3, std::size_t pad = 1);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void init(Rng& rng) override;

  // The first layer of a network never needs dL/dx.
  void set_input_grad(bool enabled) { input_grad_ = enabled; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  std::size_t cin_, cout_, k_, pad_;
  bool input_grad_ = true;
  Parameter weight_;  // [Cout, Cin, k, k]
  Parameter bias_;    // [Cout]
  Tensor input_;
};

// Non-overlapping 2x2 max pooling (floor on odd sizes).
class MaxPool2d : public Layer {
 public:
  explicit MaxPool2d(std::size_t size = 2) : size_(size) {}

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::size_t size_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

// Window i spans [floor(i*H/out), ceil((i+1)*H/out)) on each axis.
class AdaptiveMaxPool2d : public Layer {
 public:
  AdaptiveMaxPool2d(std::size_t out_h, std::size_t out_w) : out_h_(out_h), out_w_(out_w) {}

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::size_t out_h_, out_w_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape in_shape_;
};

class Sequential : public Layer {
 public:
  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  std::vector<Buffer> buffers() override;
  void init(Rng& rng) override;

  std::size_t size() const { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // dL/dlogits, same shape as logits
};

// Mean over the batch of -log softmax(logits)[label]; logits [B, K].
LossResult cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace rfdfin::nn
