#include "rfdfin/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "rfdfin/error.hpp"
#include "rfdfin/image_io.hpp"
#include "rfdfin/random.hpp"
#include "rfdfin/spectrum.hpp"

namespace rfdfin {

namespace fs = std::filesystem;

std::string to_string(Label label) { return label == Label::Real ? "real" : "fake"; }

Label label_from_string(const std::string& s) {
  if (s == "real" || s == "0") return Label::Real;
  if (s == "fake" || s == "1") return Label::Fake;
  throw Error(ErrorCode::InvalidArgument, "unknown label '" + s + "' (expected real|fake|0|1)");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  return out;
}

void require_readable(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "unreadable file " + path.string());
}

std::vector<Sample> load_from_manifest(const fs::path& root, const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + manifest.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"path", "label", "identity"}) {
    throw Error(ErrorCode::InvalidArgument, "manifest header must be 'path,label,identity'");
  }
  std::vector<Sample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw Error(ErrorCode::InvalidArgument, "manifest line " + std::to_string(lineno) + " needs 3 fields");
    Sample s{root / f[0], label_from_string(f[1]), f[2]};
    require_readable(s.path);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_from_tree(const fs::path& root) {
  std::vector<Sample> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.starts_with('.')) continue;
    if (name != "real" && name != "fake") throw Error(ErrorCode::InvalidArgument, "unknown label directory '" + name + "'");
    const Label label = label_from_string(name);
    for (const auto& item : fs::recursive_directory_iterator(entry.path())) {
      if (!item.is_regular_file() || !is_image_file(item.path())) continue;
      const auto rel = fs::relative(item.path(), entry.path());
      const std::string identity = std::distance(rel.begin(), rel.end()) > 1 ? rel.begin()->string() : item.path().stem().string();
      require_readable(item.path());
      out.push_back({item.path(), label, identity});
    }
  }
  return out;
}

// Smooth scalar field: a handful of random plane waves.
struct WaveField {
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves;

  WaveField(Rng& rng, int count, double min_wavelength, double max_wavelength, double amplitude) {
    for (int i = 0; i < count; ++i) {
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double k = 2.0 * std::numbers::pi / rng.uniform(min_wavelength, max_wavelength);
      waves.push_back({k * std::cos(theta), k * std::sin(theta), rng.uniform(0.0, 2.0 * std::numbers::pi),
                       amplitude * rng.uniform(0.5, 1.0)});
    }
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
  }

  double max_abs() const {
    double s = 0.0;
    for (const auto& w : waves) s += w.amp;
    return s;
  }
};

void attenuate_high_frequencies(FloatImage& img, double cutoff, double gain, double aniso = 1.0) {
  Spectrum2D spec = fft2(img);
  constexpr double kRamp = 0.1;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      const double fu = 2.0 * std::min(u, spec.width - u) / spec.width;
      const double fv = 2.0 * std::min(v, spec.height - v) / spec.height;
      const double r = aniso == 1.0 ? radial_frequency(u, v, spec.width, spec.height) : std::hypot(fu / aniso, fv * aniso);
      if (r <= cutoff) continue;
      const double t = std::min(1.0, (r - cutoff) / kRamp);
      spec.bins[spec.index(u, v)] *= 1.0 + t * (gain - 1.0);
    }
  img = ifft2_real(spec);
}

}  // namespace

std::vector<Sample> load_corpus(const fs::path& root, const std::optional<fs::path>& manifest) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, "corpus root is not a directory: " + root.string());
  auto samples = manifest ? load_from_manifest(root, *manifest) : load_from_tree(root);
  if (samples.empty()) throw Error(ErrorCode::EmptyCorpus, "no images under " + root.string());
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.path < b.path; });
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].path == samples[i - 1].path) throw Error(ErrorCode::InvalidArgument, "duplicate path " + samples[i].path.string());
  return samples;
}

void write_manifest(const std::vector<Sample>& samples, const fs::path& root, const fs::path& manifest) {
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest.string());
  out << "path,label,identity\n";
  for (const auto& s : samples)
    out << fs::relative(s.path, root).generic_string() << ',' << to_string(s.label) << ',' << s.identity << '\n';
}

SplitSpec split_by_identity(const std::vector<Sample>& samples, std::array<double, 3> fractions, std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || std::any_of(fractions.begin(), fractions.end(), [](double f) { return f < 0.0; })) {
    throw Error(ErrorCode::InvalidArgument, "split fractions must be non-negative and sum to 1");
  }
  SplitSpec spec;
  for (int c = 0; c < 2; ++c) {
    std::set<std::string> ids;
    for (const auto& s : samples)
      if (static_cast<int>(s.label) == c) ids.insert(s.identity);
    if (ids.empty()) continue;
    const auto active = static_cast<std::size_t>(std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
    if (ids.size() < active) {
      throw Error(ErrorCode::InvalidArgument, "class '" + to_string(static_cast<Label>(c)) + "' has " +
                                                  std::to_string(ids.size()) + " identities, fewer than the splits requested");
    }
    std::vector<std::string> order(ids.begin(), ids.end());
    Rng(mix_seed(seed, static_cast<std::uint64_t>(c))).shuffle(order.begin(), order.end());

    const auto n = static_cast<double>(order.size());
    std::array<std::size_t, 3> counts{};
    counts[0] = static_cast<std::size_t>(std::llround(fractions[0] * n));
    counts[1] = static_cast<std::size_t>(std::llround(fractions[1] * n));
    counts[0] = std::min(counts[0], order.size());
    counts[1] = std::min(counts[1], order.size() - counts[0]);
    counts[2] = order.size() - counts[0] - counts[1];
    // Any split with a positive fraction receives at least one identity.
    for (std::size_t s = 0; s < 3; ++s) {
      if (fractions[s] <= 0.0 || counts[s] > 0) continue;
      const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[donor];
      ++counts[s];
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      auto& dst = spec.identities[static_cast<std::size_t>(c)][s];
      dst.assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + counts[s]));
      std::sort(dst.begin(), dst.end());
      pos += counts[s];
    }
  }
  return spec;
}

std::vector<Sample> select_split(const std::vector<Sample>& samples, const SplitSpec& spec, Split split) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    const auto& ids = spec.of(s.label, split);
    if (std::binary_search(ids.begin(), ids.end(), s.identity)) out.push_back(s);
  }
  return out;
}

GrayImage synth_impression(std::uint64_t identity_seed, int impression, SynthClass cls, const SynthOptions& opt) {
  if (opt.width < 64 || opt.height < 64) throw Error(ErrorCode::InvalidArgument, "synthetic images must be at least 64x64");
  const int w = opt.width, h = opt.height;
  const bool fake = cls == SynthClass::FakeLike;

  // Identity: a warped whorl.
  Rng pattern(mix_seed(identity_seed, 0));
  const double period = pattern.uniform(8.5, 9.5);
  const double k = 2.0 * std::numbers::pi / period;
  const double cx = pattern.uniform(0.25 * w, 0.75 * w);
  const double cy = pattern.uniform(0.25 * h, 0.75 * h);
  const WaveField warp(pattern, 3, 90.0, 220.0, 2.5);

  // Impression: placement, pressure, exposure, pores, noise.
  Rng imp(mix_seed(identity_seed, 1000 + static_cast<std::uint64_t>(impression)));
  const double shift_x = imp.uniform(-6.0, 6.0);
  const double shift_y = imp.uniform(-6.0, 6.0);
  const WaveField pressure(imp, 3, 25.0, 160.0, 1.0);
  const double pressure_norm = std::max(1e-9, pressure.max_abs());
  const double background = imp.uniform(195.0, 235.0);
  const double contrast = imp.uniform(0.75, 1.1);
  const double pitch = imp.uniform(11.0, 14.0);

  constexpr double kDepth = 170.0;
  constexpr double kMeanDepth = 0.725;
  std::vector<double> ridge(static_cast<std::size_t>(w * h));
  std::vector<double> depth(ridge.size());
  FloatImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double px = x + shift_x, py = y + shift_y;
      const double phase = k * std::hypot(px - cx, py - cy) + warp(px, py);
      const double r = 0.5 * (1.0 + std::cos(phase));
      double d = kMeanDepth;
      if (!fake) {
        // Live ridges darken and lighten at the sweat-pore pitch; every ridge
        // gets its own phase so the pattern does not line up radially.
        const double ridge_index = std::floor((phase + std::numbers::pi) / (2.0 * std::numbers::pi));
        const std::uint64_t hash = mix_seed(identity_seed ^ 0x51ULL, static_cast<std::uint64_t>(static_cast<std::int64_t>(ridge_index)));
        const double psi = static_cast<double>(hash % 6283) / 1000.0;
        const double rho = std::max(1.0, ridge_index * period);
        const double cycles = std::max(1.0, std::round(2.0 * std::numbers::pi * rho / pitch));
        d += 0.275 * std::cos(cycles * std::atan2(py - cy, px - cx) + psi);
      }
      d *= 1.0 + 0.3 * pressure(px, py) / pressure_norm;
      const auto i = static_cast<std::size_t>(y * w + x);
      ridge[i] = r;
      depth[i] = d;
      img.at(x, y) = background - kDepth * contrast * d * r;
    }

  // Pores: small bright dots centred on ridge pixels.
  const int pore_count = w * h / 900;
  for (int p = 0, tries = 0; p < pore_count && tries < 50 * pore_count; ++tries) {
    const int x = static_cast<int>(imp.below(static_cast<std::uint64_t>(w)));
    const int y = static_cast<int>(imp.below(static_cast<std::uint64_t>(h)));
    const auto i = static_cast<std::size_t>(y * w + x);
    if (ridge[i] < 0.85) continue;
    const double amp = 0.7 * kDepth * depth[i];
    const double radius = imp.uniform(0.9, 1.4);
    for (int dy = -3; dy <= 3; ++dy)
      for (int dx = -3; dx <= 3; ++dx) {
        if (x + dx < 0 || y + dy < 0 || x + dx >= w || y + dy >= h) continue;
        img.at(x + dx, y + dy) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
      }
    ++p;
  }

  for (auto& v : img.values()) v += opt.noise_sigma * imp.normal();
  // The generator's smoothing varies from image to image.
  const double cutoff = opt.hf_cutoff + imp.uniform(-0.1, 0.1);
  const double gain = std::min(1.0, opt.hf_gain * std::exp(imp.uniform(-0.7, 0.7)));
  if (fake) attenuate_high_frequencies(img, cutoff, gain);
  return to_gray(img);
}

GrayImage synth_fingerprint(std::uint64_t seed, SynthClass cls, int width, int height) {
  SynthOptions opt;
  opt.width = width;
  opt.height = height;
  return synth_impression(seed, 0, cls, opt);
}

std::vector<Sample> write_synthetic_corpus(const fs::path& root, const SynthCorpusSpec& spec) {
  std::vector<Sample> out;
  for (int c = 0; c < 2; ++c) {
    const Label label = static_cast<Label>(c);
    const auto cls = label == Label::Real ? SynthClass::RealLike : SynthClass::FakeLike;
    for (int id = 0; id < spec.identities_per_class; ++id) {
      std::ostringstream name;
      name << (label == Label::Real ? "finger_" : "master_") << std::setw(4) << std::setfill('0') << id;
      const auto dir = root / to_string(label) / name.str();
      fs::create_directories(dir);
      const std::uint64_t identity_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(c) * 1000003ULL + static_cast<std::uint64_t>(id));
      for (int n = 0; n < spec.impressions; ++n) {
        std::ostringstream file;
        file << std::setw(3) << std::setfill('0') << n << ".png";
        const auto path = dir / file.str();
        write_png(synth_impression(identity_seed, n, cls, spec.options), path);
        out.push_back({path, label, name.str()});
      }
    }
  }
  return out;
}

EvalReport report_from_predictions(const std::vector<int>& labels, const std::vector<int>& predictions) {
  if (labels.size() != predictions.size()) throw Error(ErrorCode::DimMismatch, "one prediction per label required");
  if (labels.empty()) throw Error(ErrorCode::EmptyCorpus, "evaluation over no samples");
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool fake = labels[i] == 1, said_fake = predictions[i] == 1;
    if (fake && said_fake) ++r.tp;
    if (!fake && said_fake) ++r.fp;
    if (!fake && !said_fake) ++r.tn;
    if (fake && !said_fake) ++r.fn;
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  return r;
}

EvalReport evaluate(nn::Detector& model, const std::vector<nn::FeatureSample>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyCorpus, "evaluation over no samples");
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  EvalReport r = report_from_predictions(labels, nn::predict(model, samples));
  if (model.arch().mode != nn::StreamMode::ArtifactOnly)
    r.no_ridge = static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return !s.has_ridge; }));
  r.param_count = model.param_count();
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["recall"] = recall ? nlohmann::ordered_json(*recall) : nlohmann::ordered_json(nullptr);
  j["tp"] = tp;
  j["fp"] = fp;
  j["tn"] = tn;
  j["fn"] = fn;
  j["total"] = total();
  j["no_ridge"] = no_ridge;
  j["param_count"] = param_count;
  return j.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "accuracy   " << 100.0 * accuracy << " %\n";
  os << "recall     ";
  if (recall) {
    os << 100.0 * *recall << " %\n";
  } else {
    os << "n/a (no fake samples)\n";
  }
  os << "confusion  TP " << tp << "  FP " << fp << "  TN " << tn << "  FN " << fn << '\n';
  os << "no-ridge   " << no_ridge << '\n';
  os << "params     " << param_count << '\n';
  return os.str();
}

}  // namespace rfdfin
