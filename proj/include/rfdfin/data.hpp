#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfdfin/imgproc.hpp"
#include "rfdfin/nn/train.hpp"

namespace rfdfin {

enum class Label : int { Real = 0, Fake = 1 };

std::string to_string(Label label);
Label label_from_string(const std::string& s);

struct Sample {
  std::filesystem::path path;
  Label label = Label::Real;
  std::string identity;
};

// Layout <root>/{real,fake}/<identity>/<image>, or a CSV manifest with header
// `path,label,identity` (paths relative to root). Manifest entries win over
// directory names. Output is sorted by path.
std::vector<Sample> load_corpus(const std::filesystem::path& root,
                                const std::optional<std::filesystem::path>& manifest = std::nullopt);

void write_manifest(const std::vector<Sample>& samples, const std::filesystem::path& root,
                    const std::filesystem::path& manifest);

enum class Split : int { Train = 0, Val = 1, Test = 2 };

struct SplitSpec {
  // identities[class][split]
  std::array<std::array<std::vector<std::string>, 3>, 2> identities;

  const std::vector<std::string>& of(Label label, Split split) const {
    return identities[static_cast<std::size_t>(label)][static_cast<std::size_t>(split)];
  }
};

// Shuffles identities (per class) with a seeded generator and partitions them
// by the given fractions; every image of an identity lands in one split.
SplitSpec split_by_identity(const std::vector<Sample>& samples, std::array<double, 3> fractions, std::uint64_t seed);

std::vector<Sample> select_split(const std::vector<Sample>& samples, const SplitSpec& spec, Split split);

// ---------------------------------------------------------------- synthesis

enum class SynthClass { RealLike, FakeLike };

struct SynthOptions {
  int width = 256;
  int height = 256;
  double hf_cutoff = 0.55;    // normalized radius where fake attenuation starts (jittered by 0.1)
  double hf_gain = 0.4;       // fake high-frequency gain (log-jittered per image)
  double noise_sigma = 6.0;
};

// Identity-level pattern from `identity_seed`; `impression` varies placement,
// pores and noise. Same arguments give a bit-identical image.
GrayImage synth_impression(std::uint64_t identity_seed, int impression, SynthClass cls, const SynthOptions& options = {});

GrayImage synth_fingerprint(std::uint64_t seed, SynthClass cls, int width, int height);

struct SynthCorpusSpec {
  int identities_per_class = 20;
  int impressions = 10;
  std::uint64_t seed = 0;
  SynthOptions options{};
};

// Writes <root>/{real,fake}/<identity>/<n>.png and returns the samples.
std::vector<Sample> write_synthetic_corpus(const std::filesystem::path& root, const SynthCorpusSpec& spec);

// ---------------------------------------------------------------- metrics

struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t no_ridge = 0;  // images with no usable ridge, counted as "fake"
  std::size_t param_count = 0;
  double accuracy = 0.0;
  std::optional<double> recall;  // fake is the positive class; absent with no fakes

  std::size_t total() const { return tp + fp + tn + fn; }
  std::string to_json() const;
  std::string to_table() const;
};

EvalReport report_from_predictions(const std::vector<int>& labels, const std::vector<int>& predictions);

EvalReport evaluate(nn::Detector& model, const std::vector<nn::FeatureSample>& samples);

}  // namespace rfdfin
