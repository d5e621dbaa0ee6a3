#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "rfdfin/data.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/features.hpp"
#include "rfdfin/image_io.hpp"
#include "rfdfin/spectrum.hpp"

using namespace rfdfin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rfdfin_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void touch_image(const fs::path& p) {
  fs::create_directories(p.parent_path());
  write_png(GrayImage(8, 8, 128), p);
}

std::vector<Sample> fake_samples(int ids_per_class, int per_id) {
  std::vector<Sample> out;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < ids_per_class; ++i)
      for (int k = 0; k < per_id; ++k)
        out.push_back({fs::path(std::to_string(c) + "/" + std::to_string(i) + "/" + std::to_string(k)), static_cast<Label>(c),
                       (c ? "m" : "f") + std::to_string(i)});
  return out;
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

}  // namespace

TEST_SUITE("data") {

TEST_CASE("labels") {
  CHECK(to_string(Label::Real) == "real");
  CHECK(label_from_string("fake") == Label::Fake);
  CHECK(label_from_string("0") == Label::Real);
  CHECK(code_of([] { label_from_string("maybe"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("loading a directory tree") {
  TempDir dir("tree");
  touch_image(dir.path / "real/a/1.png");
  touch_image(dir.path / "real/a/2.png");
  touch_image(dir.path / "fake/b/1.png");
  touch_image(dir.path / "fake/b/2.png");
  const auto s = load_corpus(dir.path);
  REQUIRE(s.size() == 4);
  std::set<std::string> ids;
  for (const auto& x : s) ids.insert(x.identity);
  CHECK(ids.size() == 2);
  CHECK(std::is_sorted(s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.path < b.path; }));
  CHECK(s[0].label == Label::Fake);

  SUBCASE("manifest wins") {
    std::ofstream(dir.path / "m.csv") << "path,label,identity\nreal/a/1.png,fake,zz\nfake/b/1.png,real,yy\n";
    const auto m = load_corpus(dir.path, dir.path / "m.csv");
    REQUIRE(m.size() == 2);
    CHECK(m[0].label == Label::Real);
    CHECK(m[0].identity == "yy");
    CHECK(m[1].label == Label::Fake);
  }
  SUBCASE("manifest round trip") {
    write_manifest(s, dir.path, dir.path / "out.csv");
    const auto m = load_corpus(dir.path, dir.path / "out.csv");
    REQUIRE(m.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(m[i].identity == s[i].identity);
      CHECK(m[i].label == s[i].label);
    }
  }
  SUBCASE("unknown label directory") {
    touch_image(dir.path / "maybe/c/1.png");
    CHECK(code_of([&] { load_corpus(dir.path); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("empty root") {
  TempDir dir("empty");
  CHECK(code_of([&] { load_corpus(dir.path); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("identity split") {
  const auto samples = fake_samples(148, 2);
  const std::array<double, 3> fr{88.0 / 148, 30.0 / 148, 30.0 / 148};
  const auto a = split_by_identity(samples, fr, 11);
  for (auto label : {Label::Real, Label::Fake}) {
    CHECK(a.of(label, Split::Train).size() == 88);
    CHECK(a.of(label, Split::Val).size() == 30);
    CHECK(a.of(label, Split::Test).size() == 30);
  }
  const auto b = split_by_identity(samples, fr, 11);
  CHECK(a.identities == b.identities);
  const auto c = split_by_identity(samples, fr, 12);
  CHECK(a.identities != c.identities);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto sp = split_by_identity(samples, {0.6, 0.2, 0.2}, seed);
    for (auto label : {Label::Real, Label::Fake}) {
      std::set<std::string> all;
      std::size_t total = 0;
      for (auto s : {Split::Train, Split::Val, Split::Test}) {
        all.insert(sp.of(label, s).begin(), sp.of(label, s).end());
        total += sp.of(label, s).size();
      }
      CHECK(all.size() == total);
      CHECK(total == 148);
    }
  }
  // Every image of an identity lands in the same split.
  std::size_t selected = 0;
  for (auto s : {Split::Train, Split::Val, Split::Test}) {
    const auto part = select_split(samples, a, s);
    selected += part.size();
    for (const auto& x : part) {
      const auto& ids = a.of(x.label, s);
      CHECK(std::find(ids.begin(), ids.end(), x.identity) != ids.end());
    }
  }
  CHECK(selected == samples.size());
}

TEST_CASE("split errors") {
  CHECK(code_of([] { split_by_identity(fake_samples(2, 1), {0.6, 0.2, 0.2}, 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { split_by_identity(fake_samples(5, 1), {0.6, 0.2, 0.3}, 0); }) == ErrorCode::InvalidArgument);
  const auto small = split_by_identity(fake_samples(3, 1), {0.9, 0.05, 0.05}, 0);
  CHECK(small.of(Label::Real, Split::Val).size() == 1);
  CHECK(small.of(Label::Real, Split::Test).size() == 1);
}

TEST_CASE("generator is deterministic") {
  SynthOptions opt;
  opt.width = opt.height = 96;
  CHECK(synth_impression(5, 2, SynthClass::RealLike, opt) == synth_impression(5, 2, SynthClass::RealLike, opt));
  CHECK(synth_impression(5, 2, SynthClass::RealLike, opt) != synth_impression(5, 3, SynthClass::RealLike, opt));
  CHECK(synth_fingerprint(8, SynthClass::FakeLike, 64, 80).height() == 80);
  CHECK(code_of([] { synth_fingerprint(1, SynthClass::RealLike, 32, 64); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("generator class separation holds across seeds") {
  SynthOptions opt;
  opt.width = opt.height = 128;
  FeatureConfig cfg;
  cfg.crop_width = cfg.crop_height = 128;
  int hf_ok = 0, var_ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    double hf_real = 0.0, hf_fake = 0.0, v_real = 0.0, v_fake = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto seed = mix_seed(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k));
      const auto r = synth_impression(seed, 0, SynthClass::RealLike, opt);
      const auto f = synth_impression(seed ^ 0x5555, 0, SynthClass::FakeLike, opt);
      hf_real += high_frequency_mean(fft_log_spectrum(r), 0.25);
      hf_fake += high_frequency_mean(fft_log_spectrum(f), 0.25);
      // Along-ridge variation relative to the mean level of the signal.
      auto energy = [&](const GrayImage& img) {
        const auto feat = ridge_feature(img, cfg);
        if (!feat) return 0.0;
        double e = 0.0;
        for (std::size_t w = 1; w < feat->values.size(); ++w) e += feat->values[w] * feat->values[w];
        return std::sqrt(e) / feat->values[0];
      };
      v_real += energy(r);
      v_fake += energy(f);
    }
    hf_ok += hf_fake < hf_real;
    var_ok += v_fake < v_real;
  }
  MESSAGE("high-frequency deficit in " << hf_ok << "/100, lower ridge variation in " << var_ok << "/100");
  CHECK(hf_ok >= 95);
  CHECK(var_ok >= 95);
}

TEST_CASE("synthetic corpus layout") {
  TempDir dir("synth");
  SynthCorpusSpec spec;
  spec.identities_per_class = 2;
  spec.impressions = 2;
  spec.options.width = spec.options.height = 64;
  const auto written = write_synthetic_corpus(dir.path, spec);
  CHECK(written.size() == 8);
  CHECK(fs::exists(dir.path / "real/finger_0000/000.png"));
  CHECK(fs::exists(dir.path / "fake/master_0001/001.png"));
  const auto loaded = load_corpus(dir.path);
  CHECK(loaded.size() == 8);
  CHECK(read_image(dir.path / "real/finger_0001/000.png").width() == 64);
}

TEST_CASE("evaluation reports") {
  SUBCASE("all correct") {
    const auto r = report_from_predictions({0, 1, 1, 0}, {0, 1, 1, 0});
    CHECK(r.accuracy == 1.0);
    REQUIRE(r.recall.has_value());
    CHECK(*r.recall == 1.0);
  }
  SUBCASE("half the fakes detected") {
    std::vector<int> labels(20), pred(20);
    for (int i = 0; i < 20; ++i) {
      labels[static_cast<std::size_t>(i)] = i < 10 ? 1 : 0;
      pred[static_cast<std::size_t>(i)] = i < 5 ? 1 : 0;
    }
    const auto r = report_from_predictions(labels, pred);
    CHECK(*r.recall == doctest::Approx(0.5));
    CHECK(r.accuracy == doctest::Approx(15.0 / 20.0));
    CHECK(r.tp == 5);
    CHECK(r.fn == 5);
    CHECK(r.tn == 10);
    CHECK(r.fp == 0);
    std::vector<std::size_t> perm(20);
    for (std::size_t i = 0; i < 20; ++i) perm[i] = (i * 7) % 20;
    std::vector<int> l2, p2;
    for (auto i : perm) {
      l2.push_back(labels[i]);
      p2.push_back(pred[i]);
    }
    const auto r2 = report_from_predictions(l2, p2);
    CHECK(r2.to_json() == r.to_json());
  }
  SUBCASE("no fakes") {
    const auto r = report_from_predictions({0, 0}, {0, 1});
    CHECK_FALSE(r.recall.has_value());
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["recall"].is_null());
  }
  SUBCASE("json schema") {
    auto r = report_from_predictions({0, 1}, {0, 1});
    r.param_count = 123;
    const auto j = nlohmann::json::parse(r.to_json());
    for (const char* k : {"accuracy", "recall", "tp", "fp", "tn", "fn", "total", "no_ridge", "param_count"}) CHECK(j.contains(k));
    CHECK(j["total"] == 2);
    CHECK(j["param_count"] == 123);
    CHECK(r.to_table().find("accuracy") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK(code_of([] { report_from_predictions({}, {}); }) == ErrorCode::EmptyCorpus);
    CHECK(code_of([] { report_from_predictions({0}, {0, 1}); }) == ErrorCode::DimMismatch);
  }
}

}
