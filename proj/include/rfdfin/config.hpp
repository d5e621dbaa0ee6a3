#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "rfdfin/antiforensic.hpp"
#include "rfdfin/data.hpp"
#include "rfdfin/features.hpp"
#include "rfdfin/nn/model.hpp"
#include "rfdfin/nn/train.hpp"

namespace rfdfin {

// Every tunable of a run. Serialized as nested JSON sections (features,
// model, train, split, synth, paths); unknown keys are rejected so typos
// surface instead of silently falling back to defaults.
struct RunConfig {
  FeatureConfig features{};
  nn::ArchConfig arch{};
  nn::TrainConfig train{};
  std::array<double, 3> split{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  int radius_bins = kDefaultRadiusBins;
  SynthCorpusSpec synth{};
  std::string data_dir;
  std::string manifest;
  std::string out_dir = "run";
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace rfdfin
