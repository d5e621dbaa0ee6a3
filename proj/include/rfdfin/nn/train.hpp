#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfdfin/nn/model.hpp"

namespace rfdfin::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled: p -= lr * wd * p
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(const std::vector<Parameter*>& params, double lr);
  std::uint64_t steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// lr(epoch) = min + (base - min) * (1 + cos(pi * epoch / t_max)) / 2
double cosine_lr(double base, double min, int epoch, int t_max);

// One sample's precomputed stream inputs. The ridge feature is extracted from
// both the image and its mirror; the spectrum mirror is derived on the fly.
struct FeatureSample {
  int label = 0;  // 0 real, 1 fake
  bool has_ridge = false;
  std::vector<float> ridge;
  std::vector<float> ridge_flipped;
  int spec_width = 0;
  int spec_height = 0;
  std::vector<float> spectrum;  // FFT log-magnitude, row-major
};

struct TrainConfig {
  double lr = 1e-3;
  double lr_min = 0.0;
  int t_max = 50;
  int max_epochs = 50;
  int batch_size = 32;
  int patience = 5;
  bool flip = true;
  std::uint64_t seed = 0;
  AdamConfig adam{};
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  TensorFile best_state;
  std::size_t skipped_no_ridge = 0;
};

// Fills the stream tensors for a batch; flip flags are per sample and per
// stream (empty vectors mean no flipping).
DetectorInput make_batch(const std::vector<const FeatureSample*>& samples, const std::vector<bool>& ridge_flips,
                         const std::vector<bool>& spectrum_flips, StreamMode mode, Tensor& ridge, Tensor& spectrum);

// Predicted class per sample (eval mode); samples without ridges under a
// ridge-consuming mode are reported as fake (1).
std::vector<int> predict(Detector& model, const std::vector<FeatureSample>& samples, int batch_size = 32);

double accuracy(Detector& model, const std::vector<FeatureSample>& samples);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam + cosine annealing + early stopping on strictly improving validation
// accuracy. Throws Divergence on a non-finite loss. The model is left holding
// the best-validation weights.
TrainResult train(Detector& model, const std::vector<FeatureSample>& train_set,
                  const std::vector<FeatureSample>& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace rfdfin::nn
