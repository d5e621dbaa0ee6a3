#include "rfdfin/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "rfdfin/error.hpp"

namespace rfdfin {

using nlohmann::ordered_json;

namespace {

// Reads known keys out of one JSON object and complains about the rest.
class Section {
 public:
  Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw Error(ErrorCode::InvalidArgument, "config section '" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "config key '" + name_ + "." + key + "': " + e.what());
    }
  }

  const ordered_json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw Error(ErrorCode::InvalidArgument, "unknown config key '" + (name_.empty() ? "" : name_ + ".") + item.key() + "'");
  }

 private:
  const ordered_json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  const auto& f = c.features;
  j["features"] = {
      {"threshold", f.ridge.threshold},        {"median_radius", f.ridge.median_radius},
      {"block_size", f.ridge.block_size},      {"gabor_freq", f.ridge.gabor.ridge_freq},
      {"gabor_sigma", f.ridge.gabor.sigma},    {"segment_length", f.segment_length},
      {"smoothing_sigma", f.smoothing_sigma},  {"crop_width", f.crop_width},
      {"crop_height", f.crop_height},
  };
  const auto& a = c.arch;
  j["model"] = {
      {"mode", nn::to_string(a.mode)}, {"feature_dim", a.feature_dim},
      {"ridge_hidden", a.ridge_hidden}, {"conv1", a.conv1},         {"conv2", a.conv2},
      {"pool", a.pool},                 {"fusion_hidden", a.fusion_hidden}, {"dropout", a.dropout},
  };
  const auto& t = c.train;
  j["train"] = {
      {"lr", t.lr},           {"lr_min", t.lr_min},         {"t_max", t.t_max},
      {"max_epochs", t.max_epochs}, {"batch_size", t.batch_size}, {"patience", t.patience},
      {"flip", t.flip},       {"beta1", t.adam.beta1},      {"beta2", t.adam.beta2},
      {"adam_eps", t.adam.eps}, {"weight_decay", t.adam.weight_decay},
  };
  j["split"] = {{"train", c.split[0]}, {"val", c.split[1]}, {"test", c.split[2]}};
  const auto& s = c.synth;
  j["synth"] = {
      {"identities_per_class", s.identities_per_class}, {"impressions", s.impressions},
      {"width", s.options.width},   {"height", s.options.height},
      {"hf_cutoff", s.options.hf_cutoff}, {"hf_gain", s.options.hf_gain},
      {"noise_sigma", s.options.noise_sigma},
  };
  j["radius_bins"] = c.radius_bins;
  j["seed"] = c.seed;
  j["paths"] = {{"data_dir", c.data_dir}, {"manifest", c.manifest}, {"out_dir", c.out_dir}};
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "");
  if (const auto* v = root.child("features")) {
    Section s(*v, "features");
    auto& f = c.features;
    int threshold = f.ridge.threshold;
    s.get("threshold", threshold);
    if (threshold < 0 || threshold > 255) throw Error(ErrorCode::InvalidArgument, "features.threshold must be in [0, 255]");
    f.ridge.threshold = static_cast<std::uint8_t>(threshold);
    s.get("median_radius", f.ridge.median_radius);
    s.get("block_size", f.ridge.block_size);
    s.get("gabor_freq", f.ridge.gabor.ridge_freq);
    s.get("gabor_sigma", f.ridge.gabor.sigma);
    s.get("segment_length", f.segment_length);
    s.get("smoothing_sigma", f.smoothing_sigma);
    s.get("crop_width", f.crop_width);
    s.get("crop_height", f.crop_height);
    s.finish();
  }
  if (const auto* v = root.child("model")) {
    Section s(*v, "model");
    auto& a = c.arch;
    std::string mode = nn::to_string(a.mode);
    s.get("mode", mode);
    a.mode = nn::stream_mode_from_string(mode);
    s.get("feature_dim", a.feature_dim);
    s.get("ridge_hidden", a.ridge_hidden);
    s.get("conv1", a.conv1);
    s.get("conv2", a.conv2);
    s.get("pool", a.pool);
    s.get("fusion_hidden", a.fusion_hidden);
    s.get("dropout", a.dropout);
    s.finish();
  }
  if (const auto* v = root.child("train")) {
    Section s(*v, "train");
    auto& t = c.train;
    s.get("lr", t.lr);
    s.get("lr_min", t.lr_min);
    s.get("t_max", t.t_max);
    s.get("max_epochs", t.max_epochs);
    s.get("batch_size", t.batch_size);
    s.get("patience", t.patience);
    s.get("flip", t.flip);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("adam_eps", t.adam.eps);
    s.get("weight_decay", t.adam.weight_decay);
    s.finish();
  }
  if (const auto* v = root.child("split")) {
    Section s(*v, "split");
    s.get("train", c.split[0]);
    s.get("val", c.split[1]);
    s.get("test", c.split[2]);
    s.finish();
  }
  if (const auto* v = root.child("synth")) {
    Section s(*v, "synth");
    s.get("identities_per_class", c.synth.identities_per_class);
    s.get("impressions", c.synth.impressions);
    s.get("width", c.synth.options.width);
    s.get("height", c.synth.options.height);
    s.get("hf_cutoff", c.synth.options.hf_cutoff);
    s.get("hf_gain", c.synth.options.hf_gain);
    s.get("noise_sigma", c.synth.options.noise_sigma);
    s.finish();
  }
  root.get("radius_bins", c.radius_bins);
  root.get("seed", c.seed);
  if (const auto* v = root.child("paths")) {
    Section s(*v, "paths");
    s.get("data_dir", c.data_dir);
    s.get("manifest", c.manifest);
    s.get("out_dir", c.out_dir);
    s.finish();
  }
  root.finish();
  c.train.seed = c.seed;
  c.synth.seed = c.seed;
  // The ridge stream consumes one DFT magnitude per segment sample.
  c.arch.ridge_len = static_cast<std::size_t>(c.features.segment_length);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << config_to_json(config);
}

}  // namespace rfdfin
