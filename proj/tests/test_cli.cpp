#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rfdfin/cli.hpp"
#include "rfdfin/config.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/image_io.hpp"
#include "rfdfin/tensor_file.hpp"

using namespace rfdfin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rfdfin_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

// Runs the tool with stdout and stderr captured.
struct Run {
  int code = -1;
  std::string out;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  Run r;
  r.code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str() + err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::string& text) {
  try {
    config_from_json(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Corrupt;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config round trip") {
  RunConfig c;
  c.seed = 77;
  c.train.lr = 5e-4;
  c.arch.mode = nn::StreamMode::RidgeOnly;
  c.features.ridge.threshold = 90;
  c.split = {0.5, 0.25, 0.25};
  c.data_dir = "corpus";
  const auto text = config_to_json(c);
  const auto back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.seed == 77);
  CHECK(back.train.seed == 77);
  CHECK(back.arch.mode == nn::StreamMode::RidgeOnly);
  CHECK(back.features.ridge.threshold == 90);
  CHECK(back.split[1] == 0.25);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK(code_of(R"({"sed": 1})") == ErrorCode::InvalidArgument);
  CHECK(code_of(R"({"train": {"learning_rate": 0.1}})") == ErrorCode::InvalidArgument);
  CHECK(code_of(R"({"train": {"lr": "fast"}})") == ErrorCode::InvalidArgument);
  CHECK(code_of(R"({"features": {"threshold": 300}})") == ErrorCode::InvalidArgument);
  CHECK(code_of(R"({"model": {"mode": "both"}})") == ErrorCode::InvalidArgument);
  CHECK(code_of("{not json") == ErrorCode::InvalidArgument);
  const auto partial = config_from_json(R"({"train": {"batch_size": 8}})");
  CHECK(partial.train.batch_size == 8);
  CHECK(partial.train.lr == 1e-3);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"train", "--bogus"}).code == kExitUsage);
}

TEST_CASE("train on a missing data directory") {
  TempDir dir("missing");
  const auto r = run({"train", "--data", dir / "nope", "--out", dir / "run"});
  CHECK(r.code == kExitUsage);
  CHECK(r.out.find("not found") != std::string::npos);
}

TEST_CASE("extract caches, resumes and logs") {
  TempDir dir("extract");
  CHECK(run({"synth", "--out", dir / "corpus", "--identities", "1", "--impressions", "2", "--size", "96"}).code == kExitOk);
  CHECK(fs::exists(dir.path / "corpus/manifest.csv"));
  const auto first = run({"extract", "--data", dir / "corpus", "--out", dir / "cache.rfdf", "--jobs", "1"});
  CHECK(first.code == kExitOk);
  CHECK(first.out.find("computed  4") != std::string::npos);
  CHECK(first.out.find("(4 entries)") != std::string::npos);
  const auto second = run({"extract", "--data", dir / "corpus", "--out", dir / "cache.rfdf"});
  CHECK(second.code == kExitOk);
  CHECK(second.out.find("computed  0") != std::string::npos);
  CHECK(second.out.find("reused    4") != std::string::npos);

  SUBCASE("blank image is logged as NoRidges") {
    fs::create_directories(dir.path / "corpus/real/blank");
    write_png(GrayImage(96, 96, 255), dir.path / "corpus/real/blank/000.png");
    const auto r = run({"extract", "--data", dir / "corpus", "--out", dir / "cache.rfdf", "--which", "ridge"});
    CHECK(r.code == kExitOk);
    CHECK(slurp(dir.path / "cache.rfdf.log").find("NoRidges") != std::string::npos);
  }
  SUBCASE("corrupt image under --strict") {
    std::ofstream(dir.path / "corpus/fake/master_0000/bad.png") << "not an image";
    CHECK(run({"extract", "--data", dir / "corpus", "--out", dir / "cache.rfdf"}).code == kExitOk);
    CHECK(run({"extract", "--data", dir / "corpus", "--out", dir / "cache.rfdf", "--strict"}).code == kExitStrict);
  }
  SUBCASE("stage dump") {
    const auto r = run({"extract", "--data", dir / "corpus", "--out", dir / "fresh.rfdf", "--dump-stages", dir / "stages"});
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir.path / "stages/finger_0000_000/7_skeleton.png"));
  }
}

TEST_CASE("train, eval and checkpoint corruption") {
  TempDir dir("train");
  REQUIRE(run({"synth", "--out", dir / "corpus", "--identities", "3", "--impressions", "2", "--size", "96", "--seed", "4"}).code ==
          kExitOk);
  const auto a = run({"train", "--data", dir / "corpus", "--out", dir / "run1", "--epochs", "2", "--seed", "9",
                      "--cache", dir / "cache.rfdf"});
  REQUIRE(a.code == kExitOk);
  const auto b = run({"train", "--data", dir / "corpus", "--out", dir / "run2", "--epochs", "2", "--seed", "9",
                      "--cache", dir / "cache.rfdf"});
  REQUIRE(b.code == kExitOk);
  for (const char* f : {"config.json", "split.json", "history.csv", "history.json", "best.rfdf", "manifest.json"})
    CHECK(fs::exists(dir.path / "run1" / f));
  CHECK(slurp(dir.path / "run1/history.csv") == slurp(dir.path / "run2/history.csv"));
  CHECK(slurp(dir.path / "run1/best.rfdf") == slurp(dir.path / "run2/best.rfdf"));
  CHECK(slurp(dir.path / "run1/history.csv").rfind("epoch,train_loss,val_accuracy,lr\n", 0) == 0);

  const auto ev = run({"eval", "--checkpoint", dir / "run1/best.rfdf", "--data", dir / "corpus", "--split", "test",
                       "--split-file", dir / "run1/split.json", "--out", dir / "report.json"});
  CHECK(ev.code == kExitOk);
  const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
  CHECK(report["total"] == 4);
  CHECK(report["param_count"].get<int>() > 0);

  auto bytes = slurp(dir.path / "run1/best.rfdf");
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x10);
  std::ofstream(dir.path / "bad.rfdf", std::ios::binary) << bytes;
  CHECK(run({"eval", "--checkpoint", dir / "bad.rfdf", "--data", dir / "corpus"}).code == kExitCorrupt);
}

TEST_CASE("seed falls back to the environment") {
  TempDir dir("envseed");
  setenv("RFDFIN_SEED", "123", 1);
  CHECK(run({"synth", "--out", dir / "a", "--identities", "1", "--impressions", "1", "--size", "64"}).code == kExitOk);
  CHECK(nlohmann::json::parse(slurp(dir.path / "a/config.json"))["seed"] == 123);
  CHECK(run({"synth", "--out", dir / "b", "--identities", "1", "--impressions", "1", "--size", "64", "--seed", "5"}).code == kExitOk);
  CHECK(nlohmann::json::parse(slurp(dir.path / "b/config.json"))["seed"] == 5);
  unsetenv("RFDFIN_SEED");
}

TEST_CASE("analyze and perturb") {
  TempDir dir("analyze");
  REQUIRE(run({"synth", "--out", dir / "corpus", "--identities", "2", "--impressions", "2", "--size", "64"}).code == kExitOk);
  SUBCASE("identical directories") {
    CHECK(run({"analyze", "--real-dir", dir / "corpus/real", "--fake-dir", dir / "corpus/real", "--out-dir", dir / "same"}).code ==
          kExitOk);
    const auto stats = nlohmann::json::parse(slurp(dir.path / "same/stats.json"));
    CHECK(stats["fft"]["l2"] == 0.0);
  }
  SUBCASE("generator corpora") {
    CHECK(run({"analyze", "--real-dir", dir / "corpus/real", "--fake-dir", dir / "corpus/fake", "--out-dir", dir / "an"}).code ==
          kExitOk);
    for (const char* f : {"fft_real.png", "fft_fake.png", "fft_diff.png", "dct_real.png", "dct_fake.png", "dct_diff.png",
                          "stats.json", "heatmap_ranges.json", "manifest.json"})
      CHECK(fs::exists(dir.path / "an" / f));
    const auto stats = nlohmann::json::parse(slurp(dir.path / "an/stats.json"));
    CHECK(stats["hf_logmag_gap"].get<double>() > 0.0);
    // Outputs are reproducible byte for byte.
    CHECK(run({"analyze", "--real-dir", dir / "corpus/real", "--fake-dir", dir / "corpus/fake", "--out-dir", dir / "an2"}).code ==
          kExitOk);
    CHECK(slurp(dir.path / "an/stats.json") == slurp(dir.path / "an2/stats.json"));
    CHECK(slurp(dir.path / "an/fft_diff.png") == slurp(dir.path / "an2/fft_diff.png"));
  }
  SUBCASE("perturb writes corrected images") {
    for (const char* m : {"sdn", "pdc", "sdnpp"}) {
      const std::string out = dir / (std::string("p_") + m);
      CHECK(run({"perturb", "--method", m, "--real-dir", dir / "corpus/real", "--fake-dir", dir / "corpus/fake", "--out-dir", out})
                .code == kExitOk);
      CHECK(fs::exists(fs::path(out) / "master_0000/000.png"));
      CHECK(fs::exists(fs::path(out) / "correction.rfdf"));
      CHECK(read_image(fs::path(out) / "master_0001/001.png").width() == 64);
    }
  }
}

}
