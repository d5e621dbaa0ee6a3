#include "rfdfin/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <zlib.h>

#include "rfdfin/antiforensic.hpp"
#include "rfdfin/config.hpp"
#include "rfdfin/data.hpp"
#include "rfdfin/error.hpp"
#include "rfdfin/features.hpp"
#include "rfdfin/image_io.hpp"
#include "rfdfin/parallel.hpp"
#include "rfdfin/spectrum.hpp"
#include "rfdfin/tensor_file.hpp"

namespace rfdfin {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- helpers

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no images under " + dir.string());
  return out;
}

std::vector<GrayImage> read_all(const std::vector<fs::path>& paths, unsigned jobs) {
  std::vector<std::optional<GrayImage>> tmp(paths.size());
  parallel_for(paths.size(), jobs, [&](std::size_t i) { tmp[i] = read_image(paths[i]); });
  std::vector<GrayImage> out;
  out.reserve(tmp.size());
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

// Records every artifact written into a run directory, in order.
class RunManifest {
 public:
  RunManifest(fs::path dir, std::string command, const std::vector<std::string>& args, std::uint64_t seed)
      : dir_(std::move(dir)) {
    j_["command"] = std::move(command);
    j_["args"] = args;
    j_["seed"] = seed;
    j_["artifacts"] = ordered_json::array();
  }

  void add(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const auto crc = crc32(0L, bytes.data(), static_cast<uInt>(bytes.size()));
    ordered_json a;
    a["path"] = fs::relative(path, dir_).generic_string();
    a["bytes"] = bytes.size();
    a["crc32"] = hex64(crc).substr(8);
    j_["artifacts"].push_back(a);
  }

  void set(const std::string& key, ordered_json value) { j_[key] = std::move(value); }

  void write() const { write_text(dir_ / "manifest.json", j_.dump(2) + "\n"); }

 private:
  fs::path dir_;
  ordered_json j_;
};

// ---------------------------------------------------------------- feature cache

constexpr float kHasRidgeStage = 1.0f;
constexpr float kHasSpectrumStage = 2.0f;

// Feature tensors keyed by the content hash of each source image, so a second
// run over the same files recomputes nothing. Entries are invalidated as a
// whole when the feature settings change.
class FeatureCache {
 public:
  FeatureCache(std::optional<fs::path> path, const FeatureConfig& config) : path_(std::move(path)) {
    ordered_json j;
    j["threshold"] = config.ridge.threshold;
    j["median_radius"] = config.ridge.median_radius;
    j["block_size"] = config.ridge.block_size;
    j["gabor_freq"] = config.ridge.gabor.ridge_freq;
    j["gabor_sigma"] = config.ridge.gabor.sigma;
    j["segment_length"] = config.segment_length;
    j["smoothing_sigma"] = config.smoothing_sigma;
    j["crop"] = {config.crop_width, config.crop_height};
    const auto s = j.dump();
    const std::uint64_t h = fnv1a(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    for (int i = 0; i < 4; ++i) fingerprint_.push_back(static_cast<float>((h >> (16 * i)) & 0xffff));

    if (path_ && fs::exists(*path_)) {
      file_ = TensorFile::load(*path_);
      const auto* fp = file_.find("cache.config");
      if (!fp || fp->data != fingerprint_) {
        std::cerr << "feature settings changed; discarding cache " << path_->string() << "\n";
        file_ = TensorFile{};
      }
    }
    file_.put({"cache.config", {4}, fingerprint_});
  }

  // Returns true and fills `out` when everything requested is cached.
  bool lookup(const std::string& key, bool ridge, bool spectrum, nn::FeatureSample& out) const {
    std::lock_guard lock(mutex_);
    const auto* status = file_.find(key + ".status");
    if (!status) return false;
    const auto stages = static_cast<int>(status->data[0]);
    if ((ridge && !(stages & 1)) || (spectrum && !(stages & 2))) return false;
    out.has_ridge = status->data[1] > 0.5f;
    if (ridge && out.has_ridge) {
      out.ridge = file_.at(key + ".ridge").data;
      out.ridge_flipped = file_.at(key + ".ridge_flip").data;
    }
    if (spectrum) {
      const auto& s = file_.at(key + ".spectrum");
      out.spec_height = static_cast<int>(s.dims.at(0));
      out.spec_width = static_cast<int>(s.dims.at(1));
      out.spectrum = s.data;
    }
    return true;
  }

  void store(const std::string& key, const nn::FeatureSample& s, bool ridge, bool spectrum) {
    std::lock_guard lock(mutex_);
    float stages = 0.0f;
    bool has_ridge = false;
    if (const auto* old = file_.find(key + ".status")) {
      stages = old->data[0];
      has_ridge = old->data[1] > 0.5f;
    }
    if (ridge) {
      stages = static_cast<float>(static_cast<int>(stages) | static_cast<int>(kHasRidgeStage));
      has_ridge = s.has_ridge;
      if (s.has_ridge) {
        file_.put({key + ".ridge", {s.ridge.size()}, s.ridge});
        file_.put({key + ".ridge_flip", {s.ridge_flipped.size()}, s.ridge_flipped});
      }
    }
    if (spectrum) {
      stages = static_cast<float>(static_cast<int>(stages) | static_cast<int>(kHasSpectrumStage));
      file_.put({key + ".spectrum",
                 {static_cast<std::uint64_t>(s.spec_height), static_cast<std::uint64_t>(s.spec_width)},
                 s.spectrum});
    }
    file_.put({key + ".status", {2}, {stages, has_ridge ? 1.0f : 0.0f}});
    dirty_ = true;
  }

  void flush() {
    std::lock_guard lock(mutex_);
    if (path_ && dirty_) {
      if (path_->has_parent_path()) fs::create_directories(path_->parent_path());
      file_.save(*path_);
    }
    dirty_ = false;
  }

  std::size_t entries() const {
    std::size_t n = 0;
    for (const auto& t : file_.tensors())
      if (t.name.ends_with(".status")) ++n;
    return n;
  }

 private:
  std::optional<fs::path> path_;
  std::vector<float> fingerprint_;
  TensorFile file_;
  mutable std::mutex mutex_;
  bool dirty_ = false;
};

struct ExtractOutcome {
  std::vector<nn::FeatureSample> features;  // aligned with the input samples
  std::vector<bool> ok;
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;
  std::size_t no_ridge = 0;
  std::vector<std::string> log;  // path<TAB>status<TAB>detail
};

ExtractOutcome extract_corpus(const std::vector<Sample>& samples, const FeatureConfig& config, FeatureCache& cache,
                              bool ridge, bool spectrum, unsigned jobs, const std::optional<fs::path>& dump_dir) {
  ExtractOutcome r;
  const std::size_t n = samples.size();
  r.features.resize(n);
  r.ok.assign(n, false);
  std::vector<int> status(n, 0);  // 0 computed, 1 reused, 2 failed
  std::vector<std::string> detail(n);
  constexpr std::size_t kFlushEvery = 64;
  for (std::size_t start = 0; start < n; start += kFlushEvery) {
    const std::size_t stop = std::min(n, start + kFlushEvery);
    parallel_for(stop - start, jobs, [&](std::size_t k) {
      const std::size_t i = start + k;
      const auto& s = samples[i];
      auto& f = r.features[i];
      f.label = static_cast<int>(s.label);
      try {
        const auto bytes = read_bytes(s.path);
        const std::string key = hex64(fnv1a(bytes.data(), bytes.size()));
        if (cache.lookup(key, ridge, spectrum, f)) {
          status[i] = 1;
        } else {
          const GrayImage img = read_image(s.path);
          f = extract_features(img, f.label, config, ridge, spectrum);
          cache.store(key, f, ridge, spectrum);
          if (dump_dir) {
            const auto stages = ridge_preprocess_stages(center_crop_or_pad(img, config.crop_width, config.crop_height, 255), config.ridge);
            const auto dir = *dump_dir / (s.identity + "_" + s.path.stem().string());
            fs::create_directories(dir);
            write_png(stages.median1, dir / "1_median.png");
            write_png(stages.enhanced, dir / "2_gabor.png");
            write_png(stages.median2, dir / "3_median.png");
            write_png(stages.binary, dir / "4_binary.png");
            write_png(stages.filled, dir / "5_filled.png");
            write_png(stages.thinned, dir / "6_thinned.png");
            write_png(stages.skeleton, dir / "7_skeleton.png");
          }
        }
        r.ok[i] = true;
      } catch (const Error& e) {
        status[i] = 2;
        detail[i] = std::string(to_string(e.code())) + "\t" + e.what();
      }
    });
    cache.flush();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = samples[i].path.generic_string();
    if (status[i] == 2) {
      ++r.failed;
      r.log.push_back(path + "\tfailed\t" + detail[i]);
      continue;
    }
    (status[i] == 1 ? r.reused : r.computed)++;
    if (ridge && !r.features[i].has_ridge) {
      ++r.no_ridge;
      r.log.push_back(path + "\tNoRidges\tno ridge segment of the required length");
    }
  }
  return r;
}

// ---------------------------------------------------------------- options

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = default_jobs();
};

RunConfig effective_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  std::optional<std::uint64_t> seed = c.seed;
  if (!seed) {
    if (const char* env = std::getenv("RFDFIN_SEED"); env && *env) {
      try {
        seed = std::stoull(env);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string("RFDFIN_SEED is not an unsigned integer: ") + env);
      }
    }
  }
  if (seed) cfg.seed = *seed;
  cfg.train.seed = cfg.seed;
  cfg.synth.seed = cfg.seed;
  cfg.arch.ridge_len = static_cast<std::size_t>(cfg.features.segment_length);
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration");
  sub->add_option("--seed", c.seed, "master seed (falls back to RFDFIN_SEED, then the config)");
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

std::vector<Sample> corpus_from(const std::string& dir, const std::string& manifest) {
  if (dir.empty()) throw Error(ErrorCode::InvalidArgument, "a data directory is required (--data or paths.data_dir)");
  std::optional<fs::path> m;
  if (!manifest.empty()) m = fs::path(manifest);
  return load_corpus(dir, m);
}

ordered_json split_to_json(const SplitSpec& spec) {
  ordered_json j;
  const char* names[] = {"train", "val", "test"};
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 3; ++s) j[to_string(static_cast<Label>(c))][names[s]] = spec.identities[c][s];
  return j;
}

SplitSpec split_from_json(const ordered_json& j) {
  SplitSpec spec;
  const char* names[] = {"train", "val", "test"};
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 3; ++s)
      spec.identities[c][s] = j.at(to_string(static_cast<Label>(c))).at(names[s]).get<std::vector<std::string>>();
  return spec;
}

bool needs_ridge(nn::StreamMode m) { return m != nn::StreamMode::ArtifactOnly; }
bool needs_spectrum(nn::StreamMode m) { return m != nn::StreamMode::RidgeOnly; }

// ---------------------------------------------------------------- commands

int cmd_extract(const Common& common, const std::string& data, const std::string& manifest, const std::string& out,
                const std::string& which, bool strict, const std::string& dump) {
  RunConfig cfg = effective_config(common);
  const auto samples = corpus_from(data.empty() ? cfg.data_dir : data, manifest.empty() ? cfg.manifest : manifest);
  const bool ridge = which != "spectrum", spectrum = which != "ridge";
  FeatureCache cache(fs::path(out), cfg.features);
  std::optional<fs::path> dump_dir;
  if (!dump.empty()) dump_dir = fs::path(dump);
  const auto r = extract_corpus(samples, cfg.features, cache, ridge, spectrum, common.jobs, dump_dir);

  std::ostringstream log;
  for (const auto& line : r.log) log << line << '\n';
  write_text(fs::path(out).string() + ".log", log.str());
  std::cout << "samples   " << samples.size() << "\ncomputed  " << r.computed << "\nreused    " << r.reused
            << "\nno-ridge  " << r.no_ridge << "\nfailed    " << r.failed << "\ncache     " << out << " ("
            << cache.entries() << " entries)\n";
  if (r.failed > 0) {
    std::cerr << r.failed << " file(s) failed; see " << out << ".log\n";
    if (strict) return kExitStrict;
  }
  return kExitOk;
}

int cmd_train(const Common& common, const std::string& data, const std::string& manifest, const std::string& out,
              const std::string& cache_path, const std::string& mode, std::optional<int> epochs) {
  RunConfig cfg = effective_config(common);
  if (!data.empty()) cfg.data_dir = data;
  if (!manifest.empty()) cfg.manifest = manifest;
  if (!out.empty()) cfg.out_dir = out;
  if (!mode.empty()) cfg.arch.mode = nn::stream_mode_from_string(mode);
  if (epochs) cfg.train.max_epochs = *epochs;
  if (!fs::is_directory(cfg.data_dir)) throw Error(ErrorCode::Io, "data directory not found: " + cfg.data_dir);

  const fs::path run = cfg.out_dir;
  fs::create_directories(run);
  const auto samples = corpus_from(cfg.data_dir, cfg.manifest);
  const SplitSpec split = split_by_identity(samples, cfg.split, cfg.seed);

  std::optional<fs::path> cpath;
  if (!cache_path.empty()) cpath = fs::path(cache_path);
  FeatureCache cache(cpath, cfg.features);
  const bool ridge = needs_ridge(cfg.arch.mode), spectrum = needs_spectrum(cfg.arch.mode);

  std::vector<nn::FeatureSample> sets[2];
  for (int s = 0; s < 2; ++s) {
    const auto part = select_split(samples, split, static_cast<Split>(s));
    auto r = extract_corpus(part, cfg.features, cache, ridge, spectrum, common.jobs, std::nullopt);
    if (r.failed > 0) throw Error(ErrorCode::Io, std::to_string(r.failed) + " image(s) could not be read: " + r.log.front());
    sets[s] = std::move(r.features);
  }
  std::cout << "train " << sets[0].size() << " / val " << sets[1].size() << " images, mode "
            << nn::to_string(cfg.arch.mode) << "\n";

  nn::Detector model(cfg.arch, cfg.seed);
  std::ostringstream csv;
  csv << "epoch,train_loss,val_accuracy,lr\n";
  csv << std::setprecision(9);
  const auto result = nn::train(model, sets[0], sets[1], cfg.train, [&](const nn::EpochRecord& e) {
    csv << e.epoch << ',' << e.train_loss << ',' << e.val_accuracy << ',' << e.lr << '\n';
    std::cout << "epoch " << std::setw(3) << e.epoch << "  loss " << std::fixed << std::setprecision(5)
              << e.train_loss << "  val " << std::setprecision(4) << e.val_accuracy << "  lr " << std::scientific
              << std::setprecision(3) << e.lr << std::defaultfloat << std::endl;
  });

  RunManifest m(run, "train", {}, cfg.seed);
  save_config(cfg, run / "config.json");
  m.add(run / "config.json");
  write_text(run / "split.json", split_to_json(split).dump(2) + "\n");
  m.add(run / "split.json");
  write_text(run / "history.csv", csv.str());
  m.add(run / "history.csv");
  result.best_state.save(run / "best.rfdf");
  m.add(run / "best.rfdf");
  ordered_json summary;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_accuracy"] = result.best_val_accuracy;
  summary["epochs_run"] = result.history.size();
  summary["skipped_no_ridge"] = result.skipped_no_ridge;
  summary["param_count"] = model.param_count();
  summary["history"] = ordered_json::array();
  for (const auto& e : result.history)
    summary["history"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}, {"lr", e.lr}});
  write_text(run / "history.json", summary.dump(2) + "\n");
  m.add(run / "history.json");
  m.write();
  std::cout << "best epoch " << result.best_epoch << ", val accuracy " << result.best_val_accuracy << ", params "
            << model.param_count() << "\ncheckpoint " << (run / "best.rfdf").string() << "\n";
  return kExitOk;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& data, const std::string& manifest,
             const std::string& split_name, const std::string& split_file, const std::string& out) {
  RunConfig cfg = effective_config(common);
  const TensorFile state = TensorFile::load(checkpoint);
  nn::Detector model = nn::Detector::from_state(state);
  auto samples = corpus_from(data.empty() ? cfg.data_dir : data, manifest.empty() ? cfg.manifest : manifest);
  if (split_name != "all") {
    if (split_file.empty()) throw Error(ErrorCode::InvalidArgument, "--split needs --split-file (split.json of the run)");
    std::ifstream in(split_file);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + split_file);
    const auto spec = split_from_json(ordered_json::parse(in));
    const Split which = split_name == "train" ? Split::Train : split_name == "val" ? Split::Val : Split::Test;
    samples = select_split(samples, spec, which);
    if (samples.empty()) throw Error(ErrorCode::EmptyCorpus, "split '" + split_name + "' selects no images");
  }
  FeatureCache cache(std::nullopt, cfg.features);
  const auto mode = model.arch().mode;
  auto r = extract_corpus(samples, cfg.features, cache, needs_ridge(mode), needs_spectrum(mode), common.jobs, std::nullopt);
  if (r.failed > 0) throw Error(ErrorCode::Io, std::to_string(r.failed) + " image(s) could not be read: " + r.log.front());
  const EvalReport report = evaluate(model, r.features);
  std::cout << report.to_table();
  if (!out.empty()) write_text(out, report.to_json() + "\n");
  return kExitOk;
}

int cmd_perturb(const Common& common, const std::string& method, const std::string& real_dir,
                const std::string& fake_dir, const std::string& apply_dir, const std::string& out_dir) {
  RunConfig cfg = effective_config(common);
  const auto real_paths = list_images(real_dir);
  const auto fake_paths = list_images(fake_dir);
  const auto real = read_all(real_paths, common.jobs);
  const auto fake = read_all(fake_paths, common.jobs);
  const bool use_sdn = method != "pdc", use_pdc = method != "sdn";

  TensorFile fitted;
  SdnCorrection sdn;
  SpectrumDictionary dict;
  if (use_sdn) {
    sdn = fit_sdn(real, fake);
    store(fitted, sdn);
  }
  if (use_pdc) {
    dict = fit_power_dictionary(real, cfg.radius_bins);
    store(fitted, dict);
  }

  const fs::path src_root = apply_dir.empty() ? fs::path(fake_dir) : fs::path(apply_dir);
  const auto targets = apply_dir.empty() ? fake_paths : list_images(apply_dir);
  const fs::path out = out_dir;
  fs::create_directories(out);
  std::vector<fs::path> written(targets.size());
  parallel_for(targets.size(), common.jobs, [&](std::size_t i) {
    const GrayImage img = read_image(targets[i]);
    GrayImage corrected = method == "sdn" ? apply_sdn(img, sdn) : method == "pdc" ? apply_pdc(img, dict) : sdn_plus_plus(img, sdn, dict);
    auto rel = fs::relative(targets[i], src_root);
    rel.replace_extension(".png");
    written[i] = out / rel;
    fs::create_directories(written[i].parent_path());
    write_png(corrected, written[i]);
  });

  RunManifest m(out, "perturb", {method}, cfg.seed);
  fitted.save(out / "correction.rfdf");
  m.add(out / "correction.rfdf");
  for (const auto& w : written) m.add(w);
  m.write();
  std::cout << "method " << method << ": fitted on " << real.size() << " real / " << fake.size() << " fake, wrote "
            << written.size() << " image(s) to " << out.string() << "\n";
  return kExitOk;
}

int cmd_analyze(const Common& common, const std::string& real_dir, const std::string& fake_dir, const std::string& out_dir,
                double hf_cutoff) {
  RunConfig cfg = effective_config(common);
  const auto real = read_all(list_images(real_dir), common.jobs);
  const auto fake = read_all(list_images(fake_dir), common.jobs);
  const fs::path out = out_dir;
  fs::create_directories(out);
  RunManifest m(out, "analyze", {}, cfg.seed);

  ordered_json stats, ranges;
  stats["real_images"] = real.size();
  stats["fake_images"] = fake.size();
  for (const auto kind : {SpectrumKind::FftLogMag, SpectrumKind::DctLogMag}) {
    const std::string prefix = kind == SpectrumKind::FftLogMag ? "fft" : "dct";
    const bool center = kind == SpectrumKind::FftLogMag;
    const Spectrum2D mr = mean_spectrum(real, kind);
    const Spectrum2D mf = mean_spectrum(fake, kind);
    const SpectrumDiff d = spectrum_diff(mr, mf);
    const std::pair<const char*, const Spectrum2D*> planes[] = {{"real", &mr}, {"fake", &mf}, {"diff", &d.diff}};
    for (const auto& [name, plane] : planes) {
      const Heatmap h = to_heatmap(*plane, center);
      const auto path = out / (prefix + "_" + name + ".png");
      write_png(h.image, path);
      m.add(path);
      ranges[prefix + "_" + name + ".png"] = {{"min", h.min}, {"max", h.max}};
    }
    stats[prefix] = {{"l2", d.l2}, {"max_abs", d.max_abs}, {"mean", d.mean}};
    if (kind == SpectrumKind::FftLogMag) {
      const double hr = high_frequency_mean(mr, hf_cutoff), hf = high_frequency_mean(mf, hf_cutoff);
      stats["hf_cutoff"] = hf_cutoff;
      stats["hf_logmag_real"] = hr;
      stats["hf_logmag_fake"] = hf;
      stats["hf_logmag_gap"] = hr - hf;
    }
  }
  write_text(out / "stats.json", stats.dump(2) + "\n");
  m.add(out / "stats.json");
  write_text(out / "heatmap_ranges.json", ranges.dump(2) + "\n");
  m.add(out / "heatmap_ranges.json");
  m.write();
  std::cout << stats.dump(2) << "\n";
  return kExitOk;
}

int cmd_synth(const Common& common, const std::string& out_dir, std::optional<int> ids, std::optional<int> imps,
              std::optional<int> size) {
  RunConfig cfg = effective_config(common);
  if (ids) cfg.synth.identities_per_class = *ids;
  if (imps) cfg.synth.impressions = *imps;
  if (size) cfg.synth.options.width = cfg.synth.options.height = *size;
  const fs::path out = out_dir;
  fs::create_directories(out);
  const auto samples = write_synthetic_corpus(out, cfg.synth);
  write_manifest(samples, out, out / "manifest.csv");
  save_config(cfg, out / "config.json");
  std::cout << "wrote " << samples.size() << " images (" << cfg.synth.identities_per_class << " identities x "
            << cfg.synth.impressions << " impressions per class) to " << out.string() << "\n";
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Divergence: return kExitDivergence;
    case ErrorCode::Corrupt: return kExitCorrupt;
    default: return kExitUsage;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Fingerprint forgery detection: ridge and spectrum two-stream pipeline", "rfdfin"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string data, manifest, out, which = "both", dump, cache, mode, checkpoint, split_name = "all", split_file;
  std::string method = "sdnpp", real_dir, fake_dir, apply_dir;
  bool strict = false;
  std::optional<int> epochs, ids, imps, size;
  double hf_cutoff = 0.25;

  auto* ex = app.add_subcommand("extract", "compute and cache ridge / spectrum features");
  add_common(ex, common);
  ex->add_option("--data", data, "corpus root ({real,fake}/<identity>/...)");
  ex->add_option("--manifest", manifest, "CSV manifest (path,label,identity)");
  ex->add_option("--out", out, "feature cache file")->required();
  ex->add_option("--which", which, "ridge|spectrum|both")->check(CLI::IsMember({"ridge", "spectrum", "both"}));
  ex->add_flag("--strict", strict, "exit 2 if any file fails");
  ex->add_option("--dump-stages", dump, "write preprocessing stages of newly computed images here");

  auto* tr = app.add_subcommand("train", "train a detector on a corpus");
  add_common(tr, common);
  tr->add_option("--data", data, "corpus root");
  tr->add_option("--manifest", manifest, "CSV manifest");
  tr->add_option("--out", out, "run directory");
  tr->add_option("--cache", cache, "feature cache to reuse and extend");
  tr->add_option("--mode", mode, "fused|artifact|ridge")->check(CLI::IsMember({"fused", "artifact", "ridge"}));
  tr->add_option("--epochs", epochs, "maximum epochs");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--data", data, "corpus root");
  ev->add_option("--manifest", manifest, "CSV manifest");
  ev->add_option("--split", split_name, "train|val|test|all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  ev->add_option("--split-file", split_file, "split.json written by train");
  ev->add_option("--out", out, "report JSON path");

  auto* pe = app.add_subcommand("perturb", "apply an anti-forensic spectrum correction");
  add_common(pe, common);
  pe->add_option("--method", method, "sdn|pdc|sdnpp")->check(CLI::IsMember({"sdn", "pdc", "sdnpp"}));
  pe->add_option("--real-dir", real_dir, "real images used for fitting")->required();
  pe->add_option("--fake-dir", fake_dir, "fake images used for fitting")->required();
  pe->add_option("--apply-dir", apply_dir, "images to correct (default: --fake-dir)");
  pe->add_option("--out-dir", out, "output directory")->required();

  auto* an = app.add_subcommand("analyze", "averaged spectra, difference maps and statistics");
  add_common(an, common);
  an->add_option("--real-dir", real_dir, "real images")->required();
  an->add_option("--fake-dir", fake_dir, "fake images")->required();
  an->add_option("--out-dir", out, "output directory")->required();
  an->add_option("--hf-cutoff", hf_cutoff, "normalized radius for the high-frequency statistic");

  auto* sy = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(sy, common);
  sy->add_option("--out", out, "corpus root")->required();
  sy->add_option("--identities", ids, "identities per class");
  sy->add_option("--impressions", imps, "impressions per identity");
  sy->add_option("--size", size, "image side in pixels");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ex->parsed()) return cmd_extract(common, data, manifest, out, which, strict, dump);
    if (tr->parsed()) return cmd_train(common, data, manifest, out, cache, mode, epochs);
    if (ev->parsed()) return cmd_eval(common, checkpoint, data, manifest, split_name, split_file, out);
    if (pe->parsed()) return cmd_perturb(common, method, real_dir, fake_dir, apply_dir, out);
    if (an->parsed()) return cmd_analyze(common, real_dir, fake_dir, out, hf_cutoff);
    if (sy->parsed()) return cmd_synth(common, out, ids, imps, size);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error [Io]: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [InvalidArgument]: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace rfdfin
