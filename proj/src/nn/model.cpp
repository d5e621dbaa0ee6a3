#include "rfdfin/nn/model.hpp"

#include <algorithm>
#include <cstring>

#include "rfdfin/error.hpp"

namespace rfdfin::nn {

std::string to_string(StreamMode mode) {
  switch (mode) {
    case StreamMode::Fused: return "fused";
    case StreamMode::ArtifactOnly: return "artifact";
    case StreamMode::RidgeOnly: return "ridge";
  }
  return "fused";
}

StreamMode stream_mode_from_string(const std::string& s) {
  if (s == "fused") return StreamMode::Fused;
  if (s == "artifact") return StreamMode::ArtifactOnly;
  if (s == "ridge") return StreamMode::RidgeOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown stream mode '" + s + "' (expected fused|artifact|ridge)");
}

RidgeNet::RidgeNet(const ArchConfig& arch, std::uint64_t seed) : ridge_len_(arch.ridge_len) {
  net_.add<BatchNorm>("ridge.bn_in", arch.ridge_len);
  net_.add<Linear>("ridge.fc1", arch.ridge_len, arch.ridge_hidden);
  net_.add<BatchNorm>("ridge.bn1", arch.ridge_hidden);
  net_.add<ReLU>();
  net_.add<Dropout>(arch.dropout, mix_seed(seed, 101));
  net_.add<Linear>("ridge.fc2", arch.ridge_hidden, arch.feature_dim);
  net_.add<BatchNorm>("ridge.bn2", arch.feature_dim);
  net_.add<ReLU>();
  net_.add<Dropout>(arch.dropout, mix_seed(seed, 102));
}

Tensor RidgeNet::forward(const Tensor& f_raw, Mode mode) {
  if (f_raw.rank() != 2 || f_raw.dim(1) != ridge_len_) {
    throw Error(ErrorCode::DimMismatch, "ridge stream expects [B," + std::to_string(ridge_len_) + "], got " + shape_string(f_raw.shape));
  }
  return net_.forward(f_raw, mode);
}

Tensor RidgeNet::backward(const Tensor& grad) { return net_.backward(grad); }

ArtifactNet::ArtifactNet(const ArchConfig& arch) {
  net_.add<Conv2d>("artifact.conv1", 1, arch.conv1).set_input_grad(false);
  net_.add<BatchNorm>("artifact.bn1", arch.conv1);
  net_.add<ReLU>();
  net_.add<MaxPool2d>(2);
  net_.add<Conv2d>("artifact.conv2", arch.conv1, arch.conv2);
  net_.add<BatchNorm>("artifact.bn2", arch.conv2);
  net_.add<ReLU>();
  net_.add<MaxPool2d>(2);
  net_.add<AdaptiveMaxPool2d>(arch.pool, arch.pool);
  net_.add<Flatten>();
  net_.add<Linear>("artifact.fc", arch.conv2 * arch.pool * arch.pool, arch.feature_dim);
}

Tensor ArtifactNet::forward(const Tensor& spectrum, Mode mode) {
  if (spectrum.rank() != 4 || spectrum.dim(1) != 1) {
    throw Error(ErrorCode::DimMismatch, "artifact stream expects [B,1,H,W], got " + shape_string(spectrum.shape));
  }
  if (spectrum.dim(2) < 8 || spectrum.dim(3) < 8) throw Error(ErrorCode::TooSmall, "artifact stream needs at least 8x8 input");
  return net_.forward(spectrum, mode);
}

Tensor ArtifactNet::backward(const Tensor& grad) { return net_.backward(grad); }

FusionHead::FusionHead(const ArchConfig& arch) {
  net_.add<Linear>("head.fc1", arch.feature_dim, arch.fusion_hidden);
  net_.add<ReLU>();
  net_.add<Linear>("head.fc2", arch.fusion_hidden, 2);
}

Tensor FusionHead::forward(const Tensor& feature, Mode mode) { return net_.forward(feature, mode); }
Tensor FusionHead::backward(const Tensor& grad) { return net_.backward(grad); }

Detector::Detector(const ArchConfig& arch, std::uint64_t seed)
    : arch_(arch), ridge_(arch, seed), artifact_(arch), head_(arch) {
  Rng rng(mix_seed(seed, 1));
  ridge_.net().init(rng);
  artifact_.net().init(rng);
  head_.net().init(rng);
}

Tensor Detector::forward_fused(const Tensor& f_ridge, const Tensor& f_artifact, Mode mode) {
  if (f_ridge.shape != f_artifact.shape) {
    throw Error(ErrorCode::DimMismatch, "stream features differ: " + shape_string(f_ridge.shape) + " vs " + shape_string(f_artifact.shape));
  }
  Tensor sum = f_ridge;
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += f_artifact.data[i];
  return head_.forward(sum, mode);
}

Tensor Detector::forward(const DetectorInput& input, Mode mode) {
  switch (arch_.mode) {
    case StreamMode::Fused:
      if (!input.ridge || !input.spectrum) throw Error(ErrorCode::InvalidArgument, "fused model needs both stream inputs");
      return forward_fused(ridge_.forward(*input.ridge, mode), artifact_.forward(*input.spectrum, mode), mode);
    case StreamMode::ArtifactOnly:
      if (!input.spectrum) throw Error(ErrorCode::InvalidArgument, "artifact model needs a spectrum input");
      return head_.forward(artifact_.forward(*input.spectrum, mode), mode);
    case StreamMode::RidgeOnly:
      if (!input.ridge) throw Error(ErrorCode::InvalidArgument, "ridge model needs a ridge input");
      return head_.forward(ridge_.forward(*input.ridge, mode), mode);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stream mode");
}

void Detector::backward(const Tensor& grad_logits) {
  // The sum node hands the same gradient to both streams.
  const Tensor g = head_.backward(grad_logits);
  if (uses_ridge()) ridge_.backward(g);
  if (uses_artifact()) artifact_.backward(g);
}

std::vector<Parameter*> Detector::parameters() {
  std::vector<Parameter*> out;
  if (uses_ridge())
    for (auto* p : ridge_.net().parameters()) out.push_back(p);
  if (uses_artifact())
    for (auto* p : artifact_.net().parameters()) out.push_back(p);
  for (auto* p : head_.net().parameters()) out.push_back(p);
  return out;
}

std::vector<Buffer> Detector::buffers() {
  std::vector<Buffer> out;
  if (uses_ridge())
    for (auto& b : ridge_.net().buffers()) out.push_back(b);
  if (uses_artifact())
    for (auto& b : artifact_.net().buffers()) out.push_back(b);
  return out;
}

void Detector::zero_grad() {
  for (auto* p : parameters()) p->value.zero_grad();
}

void Detector::reseed_dropout(std::uint64_t seed) {
  auto& net = ridge_.net();
  std::uint64_t stream = 0;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (auto* d = dynamic_cast<Dropout*>(&net[i])) d->reseed(mix_seed(seed, 200 + stream++));
}

std::size_t param_count(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

std::size_t Detector::param_count() { return nn::param_count(parameters()); }

TensorFile Detector::state() {
  TensorFile file;
  const ArchConfig& a = arch_;
  file.put({"meta.arch",
            {9},
            {static_cast<float>(a.mode), static_cast<float>(a.ridge_len), static_cast<float>(a.feature_dim),
             static_cast<float>(a.ridge_hidden), static_cast<float>(a.conv1), static_cast<float>(a.conv2),
             static_cast<float>(a.pool), static_cast<float>(a.fusion_hidden), a.dropout}});
  for (auto* p : parameters()) {
    file.put({p->name, {p->value.shape.begin(), p->value.shape.end()}, p->value.data});
  }
  for (auto& b : buffers()) file.put({b.name, {b.data->size()}, *b.data});
  return file;
}

void Detector::load_state(const TensorFile& file) {
  for (auto* p : parameters()) {
    const auto& t = file.at(p->name);
    if (!std::equal(t.dims.begin(), t.dims.end(), p->value.shape.begin(), p->value.shape.end())) {
      throw Error(ErrorCode::Corrupt, "shape mismatch for '" + p->name + "'");
    }
    p->value.data = t.data;
  }
  for (auto& b : buffers()) {
    const auto& t = file.at(b.name);
    if (t.data.size() != b.data->size()) throw Error(ErrorCode::Corrupt, "size mismatch for '" + b.name + "'");
    *b.data = t.data;
  }
}

Detector Detector::from_state(const TensorFile& file) {
  const auto& meta = file.at("meta.arch").data;
  if (meta.size() != 9) throw Error(ErrorCode::Corrupt, "bad meta.arch record");
  ArchConfig a;
  const int mode = static_cast<int>(meta[0]);
  if (mode < 0 || mode > 2) throw Error(ErrorCode::Corrupt, "bad stream mode in checkpoint");
  a.mode = static_cast<StreamMode>(mode);
  a.ridge_len = static_cast<std::size_t>(meta[1]);
  a.feature_dim = static_cast<std::size_t>(meta[2]);
  a.ridge_hidden = static_cast<std::size_t>(meta[3]);
  a.conv1 = static_cast<std::size_t>(meta[4]);
  a.conv2 = static_cast<std::size_t>(meta[5]);
  a.pool = static_cast<std::size_t>(meta[6]);
  a.fusion_hidden = static_cast<std::size_t>(meta[7]);
  a.dropout = meta[8];
  Detector det(a, 0);
  det.load_state(file);
  return det;
}

}  // namespace rfdfin::nn
