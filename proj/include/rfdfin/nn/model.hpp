#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfdfin/nn/layers.hpp"
#include "rfdfin/tensor_file.hpp"

namespace rfdfin::nn {

enum class StreamMode { Fused = 0, ArtifactOnly = 1, RidgeOnly = 2 };

std::string to_string(StreamMode mode);
StreamMode stream_mode_from_string(const std::string& s);

struct ArchConfig {
  StreamMode mode = StreamMode::Fused;
  std::size_t ridge_len = 128;     // length of f_raw
  std::size_t feature_dim = 128;   // C, shared by both streams
  std::size_t ridge_hidden = 256;
  std::size_t conv1 = 8;
  std::size_t conv2 = 16;
  std::size_t pool = 4;            // adaptive max-pool output side
  std::size_t fusion_hidden = 64;
  float dropout = 0.3f;
};

// BatchNorm(f_raw) followed by two FC + BN + ReLU + Dropout blocks.
class RidgeNet {
 public:
  RidgeNet(const ArchConfig& arch, std::uint64_t seed);
  Tensor forward(const Tensor& f_raw, Mode mode);  // [B, ridge_len] -> [B, C]
  Tensor backward(const Tensor& grad);
  Sequential& net() { return net_; }

 private:
  std::size_t ridge_len_;
  Sequential net_;
};

// Two conv/BN/ReLU/maxpool blocks, adaptive max-pool, FC to C.
class ArtifactNet {
 public:
  ArtifactNet(const ArchConfig& arch);
  Tensor forward(const Tensor& spectrum, Mode mode);  // [B, 1, H, W] -> [B, C]
  Tensor backward(const Tensor& grad);
  Sequential& net() { return net_; }

 private:
  Sequential net_;
};

// C -> hidden -> 2 logits (real, fake).
class FusionHead {
 public:
  FusionHead(const ArchConfig& arch);
  Tensor forward(const Tensor& feature, Mode mode);
  Tensor backward(const Tensor& grad);
  Sequential& net() { return net_; }

 private:
  Sequential net_;
};

struct DetectorInput {
  const Tensor* ridge = nullptr;     // [B, ridge_len]
  const Tensor* spectrum = nullptr;  // [B, 1, H, W]
};

class Detector {
 public:
  explicit Detector(const ArchConfig& arch = {}, std::uint64_t seed = 0);
  Detector(const Detector&) = delete;
  Detector& operator=(const Detector&) = delete;
  Detector(Detector&&) = default;
  Detector& operator=(Detector&&) = default;

  const ArchConfig& arch() const noexcept { return arch_; }

  // Logits [B, 2]. Streams not used by the configured mode may be null.
  Tensor forward(const DetectorInput& input, Mode mode);
  // Back-propagates dL/dlogits through every active stream.
  void backward(const Tensor& grad_logits);

  Tensor forward_ridge(const Tensor& f_raw, Mode mode) { return ridge_.forward(f_raw, mode); }
  Tensor forward_artifact(const Tensor& spectrum, Mode mode) { return artifact_.forward(spectrum, mode); }
  // Pred = head(f_ridge + f_artifact)
  Tensor forward_fused(const Tensor& f_ridge, const Tensor& f_artifact, Mode mode);

  std::vector<Parameter*> parameters();
  std::vector<Buffer> buffers();
  void zero_grad();
  void reseed_dropout(std::uint64_t seed);

  std::size_t param_count();

  // Named weights and running statistics, plus "meta.arch".
  TensorFile state();
  void load_state(const TensorFile& file);
  static Detector from_state(const TensorFile& file);

  RidgeNet& ridge() { return ridge_; }
  ArtifactNet& artifact() { return artifact_; }
  FusionHead& head() { return head_; }

 private:
  bool uses_ridge() const { return arch_.mode != StreamMode::ArtifactOnly; }
  bool uses_artifact() const { return arch_.mode != StreamMode::RidgeOnly; }

  ArchConfig arch_;
  RidgeNet ridge_;
  ArtifactNet artifact_;
  FusionHead head_;
};

// Counts every trainable scalar in a parameter list.
std::size_t param_count(const std::vector<Parameter*>& params);

}  // namespace rfdfin::nn
