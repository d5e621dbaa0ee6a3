#include "rfdfin/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rfdfin/error.hpp"

namespace rfdfin::nn {

void Adam::step(const std::vector<Parameter*>& params, double lr) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw Error(ErrorCode::DimMismatch, "optimizer parameter list changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    if (value.grad.empty()) continue;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = value.grad[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const double update = (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config_.eps);
      double p = value.data[j];
      p -= lr * config_.weight_decay * p;
      p -= lr * update;
      value.data[j] = static_cast<float>(p);
    }
  }
}

double cosine_lr(double base, double min, int epoch, int t_max) {
  if (t_max <= 0) return base;
  return min + (base - min) * (1.0 + std::cos(std::numbers::pi * epoch / t_max)) / 2.0;
}

DetectorInput make_batch(const std::vector<const FeatureSample*>& samples, const std::vector<bool>& ridge_flips,
                         const std::vector<bool>& spectrum_flips, StreamMode mode, Tensor& ridge, Tensor& spectrum) {
  if (samples.empty()) throw Error(ErrorCode::EmptyBatch, "empty batch");
  const std::size_t batch = samples.size();
  DetectorInput input;
  if (mode != StreamMode::ArtifactOnly) {
    const std::size_t len = samples.front()->ridge.size();
    ridge = Tensor({batch, len});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto* s = samples[b];
      if (!s->has_ridge) throw Error(ErrorCode::NoRidges, "sample without ridge feature in a ridge batch");
      const auto& src = (!ridge_flips.empty() && ridge_flips[b]) ? s->ridge_flipped : s->ridge;
      if (src.size() != len) throw Error(ErrorCode::DimMismatch, "ridge features differ in length");
      std::copy(src.begin(), src.end(), ridge.data.begin() + static_cast<std::ptrdiff_t>(b * len));
    }
    input.ridge = &ridge;
  }
  if (mode != StreamMode::RidgeOnly) {
    const auto w = static_cast<std::size_t>(samples.front()->spec_width);
    const auto h = static_cast<std::size_t>(samples.front()->spec_height);
    spectrum = Tensor({batch, 1, h, w});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto* s = samples[b];
      if (static_cast<std::size_t>(s->spec_width) != w || static_cast<std::size_t>(s->spec_height) != h ||
          s->spectrum.size() != w * h) {
        throw Error(ErrorCode::DimMismatch, "spectra differ in size within a batch");
      }
      float* dst = &spectrum.data[b * w * h];
      const bool flip = !spectrum_flips.empty() && spectrum_flips[b];
      for (std::size_t v = 0; v < h; ++v)
        for (std::size_t u = 0; u < w; ++u) {
          // |F| of the mirrored image is |F| at (-u mod W, v).
          const std::size_t su = flip ? (w - u) % w : u;
          dst[v * w + u] = s->spectrum[v * w + su];
        }
    }
    input.spectrum = &spectrum;
  }
  return input;
}

std::vector<int> predict(Detector& model, const std::vector<FeatureSample>& samples, int batch_size) {
  const StreamMode mode = model.arch().mode;
  const bool needs_ridge = mode != StreamMode::ArtifactOnly;
  std::vector<int> out(samples.size(), 1);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!needs_ridge || samples[i].has_ridge) usable.push_back(i);
  Tensor ridge, spectrum;
  for (std::size_t start = 0; start < usable.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(usable.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const FeatureSample*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[usable[i]]);
    const auto input = make_batch(batch, {}, {}, mode, ridge, spectrum);
    const Tensor logits = model.forward(input, Mode::Eval);
    for (std::size_t b = 0; b < batch.size(); ++b)
      out[usable[start + b]] = logits.data[b * 2 + 1] > logits.data[b * 2] ? 1 : 0;
  }
  return out;
}

double accuracy(Detector& model, const std::vector<FeatureSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyCorpus, "accuracy over an empty set");
  const auto pred = predict(model, samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) correct += pred[i] == samples[i].label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainResult train(Detector& model, const std::vector<FeatureSample>& train_set, const std::vector<FeatureSample>& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw Error(ErrorCode::EmptyCorpus, "training split is empty");
  if (val_set.empty()) throw Error(ErrorCode::EmptyCorpus, "validation split is empty");
  if (config.batch_size < 2) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 2 for batch statistics");

  const StreamMode mode = model.arch().mode;
  const bool needs_ridge = mode != StreamMode::ArtifactOnly;
  TrainResult result;
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (needs_ridge && !train_set[i].has_ridge) {
      ++result.skipped_no_ridge;
      continue;
    }
    usable.push_back(i);
  }
  if (usable.size() < 2) throw Error(ErrorCode::EmptyCorpus, "fewer than two usable training samples");

  model.reseed_dropout(mix_seed(config.seed, 0xD0));
  Adam optimizer(config.adam);
  const auto params = model.parameters();
  result.best_val_accuracy = -1.0;
  int since_best = 0;
  Tensor ridge, spectrum;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = cosine_lr(config.lr, config.lr_min, epoch, config.t_max);
    std::vector<std::size_t> order = usable;
    Rng(mix_seed(config.seed, 0x5000 + static_cast<std::uint64_t>(epoch))).shuffle(order.begin(), order.end());
    const std::uint64_t epoch_seed = mix_seed(config.seed, 0x9000 + static_cast<std::uint64_t>(epoch));

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      if (end - start < 2) break;  // batch statistics need two samples
      std::vector<const FeatureSample*> batch;
      std::vector<bool> ridge_flips, spec_flips;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set[order[i]]);
        labels.push_back(train_set[order[i]].label);
        Rng flip_rng(mix_seed(epoch_seed, order[i]));
        const bool fr = flip_rng.coin();
        const bool fs = flip_rng.coin();
        ridge_flips.push_back(config.flip && fr);
        spec_flips.push_back(config.flip && fs);
      }
      const auto input = make_batch(batch, ridge_flips, spec_flips, mode, ridge, spectrum);
      model.zero_grad();
      const Tensor logits = model.forward(input, Mode::Train);
      const auto loss = cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch starting at " << start << " (lr " << lr << ")";
        throw Error(ErrorCode::Divergence, os.str());
      }
      model.backward(loss.grad);
      optimizer.step(params, lr);
      loss_sum += loss.loss * static_cast<double>(labels.size());
      loss_count += labels.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    rec.val_accuracy = accuracy(model, val_set);
    rec.lr = lr;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = epoch;
      result.best_state = model.state();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.load_state(result.best_state);
  return result;
}

}  // namespace rfdfin::nn
