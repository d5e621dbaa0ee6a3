#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/nn/model.hpp"
#include "rfdfin/nn/train.hpp"
#include "rfdfin/spectrum.hpp"
#include "rfdfin/tensor_file.hpp"

using namespace rfdfin;
using namespace rfdfin::nn;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// Distinct values at least `gap` apart, so small perturbations never change an argmax.
Tensor spaced_tensor(Rng& rng, Shape shape, float gap = 0.01f) {
  Tensor t(std::move(shape));
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) t.data[order[i]] = gap * (static_cast<float>(i) - 0.5f * static_cast<float>(order.size()));
  return t;
}

// Values bounded away from zero for ReLU.
Tensor off_kink_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>((rng.coin() ? 1.0 : -1.0) * rng.uniform(0.05, 1.0));
  return t;
}

template <class E>
ErrorCode code_of(E&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

ArchConfig small_arch(StreamMode mode = StreamMode::Fused) {
  ArchConfig a;
  a.mode = mode;
  a.ridge_len = 16;
  a.feature_dim = 8;
  a.ridge_hidden = 12;
  a.conv1 = 2;
  a.conv2 = 3;
  a.pool = 2;
  a.fusion_hidden = 6;
  return a;
}

std::vector<FeatureSample> toy_samples(Rng& rng, int n, std::size_t len, int spec) {
  std::vector<FeatureSample> out;
  for (int i = 0; i < n; ++i) {
    FeatureSample s;
    s.label = i % 2;
    s.has_ridge = true;
    const float shift = s.label ? 1.0f : -1.0f;
    for (std::size_t k = 0; k < len; ++k) s.ridge.push_back(shift * (k < 2 ? 1.0f : 0.0f) + static_cast<float>(rng.uniform(-0.3, 0.3)));
    s.ridge_flipped = s.ridge;
    s.spec_width = s.spec_height = spec;
    for (int k = 0; k < spec * spec; ++k) s.spectrum.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)) + 0.5f * shift);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("parameter counts") {
  Linear fc("fc", 128, 64);
  CHECK(param_count(fc.parameters()) == 8256);
  Sequential empty;
  CHECK(param_count(empty.parameters()) == 0);
  Detector model;
  const auto n = model.param_count();
  MESSAGE("default detector parameters: " << n);
  CHECK(n >= 50000);
  CHECK(n <= 200000);
}

TEST_CASE("cross entropy values") {
  Tensor equal({1, 2}, std::vector<float>{0.3f, 0.3f});
  CHECK(cross_entropy(equal, {1}).loss == doctest::Approx(std::log(2.0)));
  CHECK(cross_entropy(equal, {0}).loss == doctest::Approx(0.6931).epsilon(1e-4));
  Tensor gap({1, 2}, std::vector<float>{20.0f, 0.0f});
  CHECK(cross_entropy(gap, {0}).loss < 1e-8);
  Tensor two({2, 2}, std::vector<float>{1.0f, 0.0f, 0.0f, 2.0f});
  const double l0 = std::log(1.0 + std::exp(-1.0));
  const double l1 = std::log(1.0 + std::exp(2.0));
  const auto r = cross_entropy(two, {0, 0});
  CHECK(r.loss == doctest::Approx((l0 + l1) / 2.0));
  // dL/dz = (softmax - onehot) / B
  const double p = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(r.grad.data[0] == doctest::Approx((p - 1.0) / 2.0));
  CHECK(code_of([] { cross_entropy(Tensor({0, 2}), {}); }) == ErrorCode::EmptyBatch);
}

TEST_CASE("cross entropy gradient") {
  Rng rng(41);
  auto logits = random_tensor(rng, {4, 2}, -2.0, 2.0);
  const std::vector<int> labels{0, 1, 1, 0};
  const auto r = cross_entropy(logits, labels);
  const std::vector<double> ana(r.grad.data.begin(), r.grad.data.end());
  const auto num = oracle::numeric_gradient([&](const oracle::Vec& z) { return oracle::ref_cross_entropy(z, 2, labels); },
                                            oracle::Vec(logits.data.begin(), logits.data.end()), 1e-3);
  CHECK(oracle::rel_error(ana, num) <= 1e-3);
}

TEST_CASE("layer gradients") {
  Rng rng(42);
  SUBCASE("linear") {
    Linear fc("fc", 5, 3);
    fc.init(rng);
    const auto e = oracle::check_layer(fc, random_tensor(rng, {4, 5}), rng, oracle::ref_linear(4, 5, 3));
    CHECK(e.input <= 1e-3);
    CHECK(e.params <= 1e-3);
    CHECK(e.forward <= 1e-5);
  }
  SUBCASE("batchnorm 2d and 4d") {
    BatchNorm bn("bn", 3);
    for (auto& g : bn.gamma().value.data) g = static_cast<float>(rng.uniform(0.5, 1.5));
    for (auto& b : bn.beta().value.data) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    auto e = oracle::check_layer(bn, random_tensor(rng, {6, 3}), rng, oracle::ref_batchnorm(6, 3, 1));
    CHECK(e.input <= 1e-3);
    CHECK(e.params <= 1e-3);
    CHECK(e.forward <= 1e-5);
    e = oracle::check_layer(bn, random_tensor(rng, {2, 3, 3, 4}), rng, oracle::ref_batchnorm(2, 3, 12));
    CHECK(e.input <= 1e-3);
    CHECK(e.params <= 1e-3);
    CHECK(e.forward <= 1e-5);
  }
  SUBCASE("relu") {
    ReLU relu;
    CHECK(oracle::check_layer(relu, off_kink_tensor(rng, {3, 7}), rng, oracle::ref_relu()).input <= 1e-3);
  }
  SUBCASE("dropout with a fixed mask") {
    Dropout d(0.5f, 1);
    std::vector<float> mask(12);
    for (auto& m : mask) m = rng.coin() ? 0.0f : 2.0f;
    d.set_fixed_mask(mask);
    CHECK(oracle::check_layer(d, random_tensor(rng, {3, 4}), rng, oracle::ref_scale({mask.begin(), mask.end()})).input <= 1e-3);
  }
  SUBCASE("conv") {
    Conv2d conv("conv", 2, 3, 3, 1);
    conv.init(rng);
    const auto e = oracle::check_layer(conv, random_tensor(rng, {2, 2, 5, 6}), rng, oracle::ref_conv(2, 2, 3, 5, 6, 3, 1));
    CHECK(e.input <= 1e-3);
    CHECK(e.params <= 1e-3);
    CHECK(e.forward <= 1e-5);
  }
  SUBCASE("max pools") {
    MaxPool2d pool(2);
    CHECK(oracle::check_layer(pool, spaced_tensor(rng, {2, 2, 5, 6}), rng, oracle::ref_maxpool(4, 5, 6, 2)).input <= 1e-3);
    AdaptiveMaxPool2d apool(3, 2);
    CHECK(oracle::check_layer(apool, spaced_tensor(rng, {2, 2, 7, 5}), rng, oracle::ref_adaptive_maxpool(4, 7, 5, 3, 2)).input <= 1e-3);
  }
}

TEST_CASE("backward without forward") {
  Linear fc("fc", 2, 2);
  CHECK(code_of([&] { fc.backward(Tensor({1, 2})); }) == ErrorCode::NoTape);
  ReLU relu;
  relu.forward(Tensor({1, 2}), Mode::Train);
  relu.backward(Tensor({1, 2}));
  CHECK(code_of([&] { relu.backward(Tensor({1, 2})); }) == ErrorCode::NoTape);
}

TEST_CASE("zero loss gives zero gradients") {
  Linear fc("fc", 3, 2);
  Rng rng(43);
  fc.init(rng);
  fc.weight().value.zero_grad();
  fc.bias().value.zero_grad();
  fc.forward(random_tensor(rng, {2, 3}), Mode::Train);
  const auto dx = fc.backward(Tensor({2, 2}, 0.0f));
  for (float g : fc.weight().value.grad) CHECK(g == 0.0f);
  for (float g : dx.data) CHECK(g == 0.0f);
}

TEST_CASE("convolution matches nested loops") {
  Rng rng(44);
  Conv2d conv("conv", 1, 4, 3, 1);
  conv.init(rng);
  for (auto& b : conv.bias().value.data) b = static_cast<float>(rng.uniform(-0.2, 0.2));
  const auto x = random_tensor(rng, {1, 1, 16, 16});
  const auto y = conv.forward(x, Mode::Eval);
  const auto& w = conv.weight().value.data;
  for (int o = 0; o < 4; ++o)
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        double acc = conv.bias().value.data[static_cast<std::size_t>(o)];
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= 16 || jj >= 16) continue;
            acc += static_cast<double>(w[static_cast<std::size_t>(o * 9 + (di + 1) * 3 + (dj + 1))]) *
                   x.data[static_cast<std::size_t>(ii * 16 + jj)];
          }
        CHECK(std::abs(y.data[static_cast<std::size_t>((o * 16 + i) * 16 + j)] - acc) <= 1e-5);
      }
}

TEST_CASE("max pool of a constant plane") {
  MaxPool2d pool(2);
  const auto y = pool.forward(Tensor({1, 2, 6, 6}, 3.5f), Mode::Eval);
  CHECK(y.shape == Shape{1, 2, 3, 3});
  for (float v : y.data) CHECK(v == 3.5f);
  AdaptiveMaxPool2d apool(4, 4);
  for (float v : apool.forward(Tensor({1, 1, 9, 7}, -1.0f), Mode::Eval).data) CHECK(v == -1.0f);
}

TEST_CASE("adaptive max pool output size is independent of the input size") {
  AdaptiveMaxPool2d pool(8, 8);
  CHECK(pool.forward(Tensor({1, 2, 64, 64}), Mode::Eval).shape == Shape{1, 2, 8, 8});
  CHECK(pool.forward(Tensor({1, 2, 32, 32}), Mode::Eval).shape == Shape{1, 2, 8, 8});
  CHECK(pool.forward(Tensor({1, 2, 13, 9}), Mode::Eval).shape == Shape{1, 2, 8, 8});
}

TEST_CASE("batch norm statistics") {
  Rng rng(45);
  BatchNorm bn("bn", 5);
  const auto x = random_tensor(rng, {32, 5}, -3.0, 7.0);
  const auto y = bn.forward(x, Mode::Train);
  for (std::size_t c = 0; c < 5; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < 32; ++b) m += y.data[b * 5 + c];
    m /= 32.0;
    for (std::size_t b = 0; b < 32; ++b) v += (y.data[b * 5 + c] - m) * (y.data[b * 5 + c] - m);
    v /= 32.0;
    CHECK(std::abs(m) <= 1e-4);
    CHECK(std::abs(v - 1.0) <= 1e-3);  // eps = 1e-5 shrinks the variance by ~1e-5 relative
  }
  // Freeze running statistics at the exact batch statistics.
  for (std::size_t c = 0; c < 5; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t b = 0; b < 32; ++b) m += x.data[b * 5 + c];
    m /= 32.0;
    for (std::size_t b = 0; b < 32; ++b) v += (x.data[b * 5 + c] - m) * (x.data[b * 5 + c] - m);
    bn.running_mean()[c] = static_cast<float>(m);
    bn.running_var()[c] = static_cast<float>(v / 32.0);
  }
  const auto ye = bn.forward(x, Mode::Eval);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ye.data[i] - y.data[i]) <= 1e-5);
}

TEST_CASE("ridge stream behaviour") {
  Rng rng(46);
  auto arch = small_arch(StreamMode::RidgeOnly);
  Detector model(arch, 3);
  const auto x = random_tensor(rng, {4, 16});
  const auto a = model.forward_ridge(x, Mode::Eval);
  const auto b = model.forward_ridge(x, Mode::Eval);
  CHECK(a.shape == Shape{4, 8});
  CHECK(a.data == b.data);
  for (auto* p : model.ridge().net().parameters())
    if (p->name.find(".fc") != std::string::npos) std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);
  for (float v : model.forward_ridge(x, Mode::Eval).data) CHECK(v == 0.0f);
}

TEST_CASE("artifact stream size checks") {
  Detector model(small_arch(StreamMode::ArtifactOnly), 1);
  CHECK(model.forward_artifact(Tensor({1, 1, 8, 8}), Mode::Eval).shape == Shape{1, 8});
  CHECK(model.forward_artifact(Tensor({2, 1, 37, 21}), Mode::Eval).shape == Shape{2, 8});
  CHECK(code_of([&] { model.forward_artifact(Tensor({1, 1, 7, 16}), Mode::Eval); }) == ErrorCode::TooSmall);
}

TEST_CASE("sum fusion") {
  Rng rng(47);
  Detector model(small_arch(), 2);
  const auto a = random_tensor(rng, {3, 8}), b = random_tensor(rng, {3, 8});
  CHECK(model.forward_fused(a, b, Mode::Eval).data == model.forward_fused(b, a, Mode::Eval).data);
  CHECK(model.forward_fused(Tensor({3, 8}), b, Mode::Eval).data == model.head().forward(b, Mode::Eval).data);
}

TEST_CASE("fusion head by hand") {
  ArchConfig arch;
  arch.feature_dim = 4;
  arch.fusion_hidden = 4;
  Detector model(arch, 0);
  auto params = model.head().net().parameters();
  // fc1 = identity, fc2 rows (1, -1, 2, 0) and (0, 1, 0, -1) with biases 0.5 and -0.5.
  std::fill(params[0]->value.data.begin(), params[0]->value.data.end(), 0.0f);
  for (int i = 0; i < 4; ++i) params[0]->value.data[static_cast<std::size_t>(i * 4 + i)] = 1.0f;
  std::fill(params[1]->value.data.begin(), params[1]->value.data.end(), 0.0f);
  params[2]->value.data = {1, -1, 2, 0, 0, 1, 0, -1};
  params[3]->value.data = {0.5f, -0.5f};
  const Tensor r({1, 4}, std::vector<float>{1.0f, 2.0f, -3.0f, 4.0f});
  const Tensor f({1, 4}, std::vector<float>{0.5f, 0.0f, 4.0f, -1.0f});
  // sum = (1.5, 2, 1, 3); relu unchanged; logits = (1.5 - 2 + 2 + 0.5, 2 - 3 - 0.5)
  const auto y = model.forward_fused(r, f, Mode::Eval);
  CHECK(y.data[0] == doctest::Approx(2.0));
  CHECK(y.data[1] == doctest::Approx(-1.5));
}

TEST_CASE("fused backward hands the same gradient to both streams") {
  Rng rng(48);
  Detector model(small_arch(), 4);
  Tensor ridge = random_tensor(rng, {4, 16});
  Tensor spec = random_tensor(rng, {4, 1, 12, 12});
  const Tensor logits = model.forward({&ridge, &spec}, Mode::Eval);
  const auto loss = cross_entropy(logits, {0, 1, 0, 1});
  model.zero_grad();
  model.backward(loss.grad);
  auto snapshot = [](std::vector<Parameter*> ps) {
    std::vector<std::vector<float>> g;
    for (auto* p : ps) g.push_back(p->value.grad);
    return g;
  };
  const auto ridge_grads = snapshot(model.ridge().net().parameters());
  const auto art_grads = snapshot(model.artifact().net().parameters());

  // Replay: dL/dsum from the head alone, pushed through each stream separately.
  const auto fr = model.forward_ridge(ridge, Mode::Eval);
  const auto fa = model.forward_artifact(spec, Mode::Eval);
  model.zero_grad();
  model.forward_fused(fr, fa, Mode::Eval);
  const auto g = model.head().backward(loss.grad);
  model.zero_grad();
  model.forward_ridge(ridge, Mode::Eval);
  model.ridge().backward(g);
  model.forward_artifact(spec, Mode::Eval);
  model.artifact().backward(g);
  CHECK(snapshot(model.ridge().net().parameters()) == ridge_grads);
  CHECK(snapshot(model.artifact().net().parameters()) == art_grads);
}

TEST_CASE("adam on a quadratic bowl") {
  Parameter p{"p", Tensor({4}, std::vector<float>{1.0f, -2.0f, 0.5f, 3.0f})};
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  Adam opt(cfg);
  auto loss = [&] {
    double s = 0.0;
    for (float v : p.value.data) s += static_cast<double>(v) * v;
    return s;
  };
  double prev = loss();
  for (int step = 0; step < 50; ++step) {
    p.value.grad.resize(4);
    for (std::size_t i = 0; i < 4; ++i) p.value.grad[i] = 2.0f * p.value.data[i];
    opt.step({&p}, 1e-2);
    const double now = loss();
    CHECK(now < prev);
    prev = now;
  }
  CHECK(opt.steps() == 50);
}

TEST_CASE("decoupled weight decay shrinks parameters with zero gradient") {
  Parameter p{"p", Tensor({2}, std::vector<float>{1.0f, -1.0f})};
  p.value.zero_grad();
  Adam opt;
  opt.step({&p}, 1e-3);
  CHECK(p.value.data[0] == doctest::Approx(1.0 - 1e-3 * 1e-4));
  CHECK(p.value.data[1] == doctest::Approx(-1.0 + 1e-3 * 1e-4));
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(1e-3, 0.0, 0, 50) == doctest::Approx(1e-3));
  CHECK(cosine_lr(1e-3, 0.0, 50, 50) == doctest::Approx(0.0));
  CHECK(cosine_lr(1e-3, 0.0, 25, 50) == doctest::Approx(5e-4));
  CHECK(cosine_lr(1e-3, 1e-5, 50, 50) == doctest::Approx(1e-5));
}

TEST_CASE("batches flip per stream") {
  Rng rng(49);
  auto samples = toy_samples(rng, 2, 16, 8);
  for (auto& v : samples[0].ridge_flipped) v += 10.0f;
  std::vector<const FeatureSample*> ptrs{&samples[0], &samples[1]};
  Tensor ridge, spec;
  make_batch(ptrs, {true, false}, {false, true}, StreamMode::Fused, ridge, spec);
  CHECK(ridge.shape == Shape{2, 16});
  CHECK(ridge.data[0] == samples[0].ridge_flipped[0]);
  CHECK(ridge.data[16] == samples[1].ridge[0]);
  CHECK(spec.shape == Shape{2, 1, 8, 8});
  CHECK(spec.data[0] == samples[0].spectrum[0]);
  Spectrum2D s;
  s.width = s.height = 8;
  s.values.assign(samples[1].spectrum.begin(), samples[1].spectrum.end());
  const auto mirrored = mirror_log_spectrum(s);
  for (std::size_t i = 0; i < 64; ++i) CHECK(spec.data[64 + i] == doctest::Approx(mirrored.values[i]));
}

TEST_CASE("toy training converges") {
  Rng rng(50);
  auto arch = small_arch(StreamMode::RidgeOnly);
  const auto train_set = toy_samples(rng, 128, 16, 8);
  const auto val_set = toy_samples(rng, 40, 16, 8);
  Detector model(arch, 7);
  TrainConfig cfg;
  cfg.max_epochs = 12;
  cfg.lr = 1e-2;
  cfg.batch_size = 16;
  cfg.seed = 7;
  const auto r = train(model, train_set, val_set, cfg);
  REQUIRE(r.history.size() >= 5);
  for (int e = 1; e < 5; ++e) CHECK(r.history[static_cast<std::size_t>(e)].train_loss < r.history[static_cast<std::size_t>(e - 1)].train_loss);
  CHECK(r.best_val_accuracy == 1.0);
  CHECK(accuracy(model, val_set) == 1.0);
}

TEST_CASE("training is deterministic and stops early") {
  Rng rng(51);
  const auto train_set = toy_samples(rng, 64, 16, 8);
  const auto val_set = toy_samples(rng, 20, 16, 8);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.seed = 3;
  Detector m1(small_arch(), 3), m2(small_arch(), 3);
  const auto a = train(m1, train_set, val_set, cfg);
  const auto b = train(m2, train_set, val_set, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_accuracy == b.history[i].val_accuracy);
  }
  CHECK(static_cast<int>(a.history.size()) <= a.best_epoch + 1 + cfg.patience);
  // Best epoch is the first one reaching the maximum.
  for (int e = 0; e < a.best_epoch; ++e) CHECK(a.history[static_cast<std::size_t>(e)].val_accuracy < a.best_val_accuracy);
}

TEST_CASE("non-finite loss aborts training") {
  Rng rng(52);
  auto train_set = toy_samples(rng, 16, 16, 8);
  for (auto& s : train_set) s.ridge[0] = std::numeric_limits<float>::quiet_NaN();
  const auto val_set = toy_samples(rng, 4, 16, 8);
  Detector model(small_arch(StreamMode::RidgeOnly), 1);
  TrainConfig cfg;
  cfg.flip = false;
  CHECK(code_of([&] { train(model, train_set, val_set, cfg); }) == ErrorCode::Divergence);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(53);
  Detector model(small_arch(), 9);
  Tensor ridge = random_tensor(rng, {3, 16});
  Tensor spec = random_tensor(rng, {3, 1, 10, 10});
  model.forward({&ridge, &spec}, Mode::Train);  // move the running statistics
  const auto before = model.forward({&ridge, &spec}, Mode::Eval);
  const auto bytes = model.state().serialize();
  Detector loaded = Detector::from_state(TensorFile::deserialize(bytes));
  CHECK(loaded.arch().feature_dim == 8);
  CHECK(loaded.forward({&ridge, &spec}, Mode::Eval).data == before.data);
  CHECK(loaded.state().serialize() == bytes);
}

TEST_CASE("tensor container validation") {
  TensorFile f;
  f.put({"a", {2, 2}, {1, 2, 3, 4}});
  f.put({"b.c", {3}, {5, 6, 7}});
  auto bytes = f.serialize();
  CHECK(bytes[0] == 'R');
  CHECK(bytes[3] == 'F');
  const auto g = TensorFile::deserialize(bytes);
  CHECK(g.at("a").data == std::vector<float>{1, 2, 3, 4});
  CHECK(g.at("b.c").dims == std::vector<std::uint64_t>{3});
  auto flipped = bytes;
  flipped[12] ^= 0x40;
  CHECK(code_of([&] { TensorFile::deserialize(flipped); }) == ErrorCode::Corrupt);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of([&] { TensorFile::deserialize(magic); }) == ErrorCode::Corrupt);
  auto cut = bytes;
  cut.resize(cut.size() - 7);
  CHECK(code_of([&] { TensorFile::deserialize(cut); }) == ErrorCode::Corrupt);
  CHECK(code_of([&] { f.at("missing"); }) == ErrorCode::Corrupt);
}

}
