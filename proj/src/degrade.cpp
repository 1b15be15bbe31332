#include "semtrack/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "semtrack/mot_io.hpp"

namespace semtrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr std::array<const char*, kKernelFamilyCount> kFamilyNames{
    "iso", "aniso", "generalized_iso", "generalized_aniso", "plateau_iso", "plateau_aniso"};

bool is_generalized(KernelFamily f) {
  return f == KernelFamily::GeneralizedIsotropic || f == KernelFamily::GeneralizedAnisotropic;
}
bool is_plateau(KernelFamily f) {
  return f == KernelFamily::PlateauIsotropic || f == KernelFamily::PlateauAnisotropic;
}
}  // namespace

const char* to_string(KernelFamily f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

KernelFamily kernel_family_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (s == kFamilyNames[i]) return static_cast<KernelFamily>(i);
  }
  throw ValidationError("unknown kernel family '" + std::string(s) + "'");
}

bool is_isotropic(KernelFamily f) {
  return f == KernelFamily::Isotropic || f == KernelFamily::GeneralizedIsotropic ||
         f == KernelFamily::PlateauIsotropic;
}

const char* to_string(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "poisson"; }

NoiseKind noise_kind_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "poisson") return NoiseKind::Poisson;
  throw ValidationError("unknown noise kind '" + std::string(s) + "'");
}

BlurKernel make_kernel(KernelFamily family, int size, const KernelShape& shape) {
  if (size < 3 || size % 2 == 0) throw ValidationError("kernel size must be odd and >= 3");
  const bool iso = is_isotropic(family);
  if (!(shape.sigma_x > 0.0) || (!iso && !(shape.sigma_y > 0.0))) {
    throw ValidationError("kernel sigma must be positive");
  }
  if ((is_generalized(family) || is_plateau(family)) && !(shape.beta > 0.0 && std::isfinite(shape.beta))) {
    throw ValidationError("kernel beta must be positive");
  }
  if (!std::isfinite(shape.theta)) throw ValidationError("kernel rotation must be finite");

  BlurKernel k;
  k.family = family;
  k.size = size;
  k.shape = shape;
  if (iso) {
    k.shape.sigma_y = shape.sigma_x;
    k.shape.theta = 0.0;
  }
  if (!is_generalized(family) && !is_plateau(family)) k.shape.beta = 1.0;

  // Inverse covariance of R diag(sx^2, sy^2) R^T.
  const double c = std::cos(k.shape.theta);
  const double s = std::sin(k.shape.theta);
  const double ix = 1.0 / (k.shape.sigma_x * k.shape.sigma_x);
  const double iy = 1.0 / (k.shape.sigma_y * k.shape.sigma_y);
  const double a = c * c * ix + s * s * iy;
  const double b = c * s * (ix - iy);
  const double d = s * s * ix + c * c * iy;

  const int r = size / 2;
  k.weights.resize(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
  double total = 0.0;
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      const double x = col - r;
      const double y = row - r;
      // The isotropic form keeps the grid exactly symmetric under 90° turns.
      const double rho = iso ? (x * x + y * y) * ix : a * x * x + 2.0 * b * x * y + d * y * y;
      double w = 0.0;
      if (is_generalized(family)) {
        w = std::exp(-0.5 * std::pow(rho, k.shape.beta));
      } else if (is_plateau(family)) {
        w = 1.0 / (1.0 + std::pow(rho, k.shape.beta));
      } else {
        w = std::exp(-0.5 * rho);
      }
      k.weights[static_cast<std::size_t>(row * size + col)] = w;
      total += w;
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw ValidationError("kernel weights vanish");
  for (auto& w : k.weights) w /= total;
  return k;
}

BlurKernel delta_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw ValidationError("kernel size must be odd");
  BlurKernel k;
  k.size = size;
  k.weights.assign(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0);
  k.weights[static_cast<std::size_t>((size / 2) * size + size / 2)] = 1.0;
  return k;
}

void DegradationConfig::validate() const {
  double total = 0.0;
  for (double p : family_probabilities) {
    if (!(p >= 0.0)) throw ValidationError("kernel family probabilities must be non-negative");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw ValidationError("kernel family probabilities must sum to 1");
  if (kernel_sizes.empty()) throw ValidationError("kernel size set is empty");
  for (int s : kernel_sizes) {
    if (s < 3 || s % 2 == 0) throw ValidationError("kernel sizes must be odd and >= 3");
  }
  auto check = [](const RealRange& r, double floor, const char* what) {
    if (!(r.lo >= floor) || !(r.hi >= r.lo) || !std::isfinite(r.hi)) {
      throw ValidationError(std::string("invalid ") + what + " range");
    }
  };
  check(sigma, 1e-12, "sigma");
  check(beta_generalized, 1e-12, "generalized beta");
  check(beta_plateau, 1e-12, "plateau beta");
  check(gaussian_sigma, 0.0, "gaussian noise");
  check(poisson_scale, 0.0, "poisson scale");
  if (!(scale.lo > 0.0) || !(scale.hi > scale.lo) || !std::isfinite(scale.hi)) {
    throw ValidationError("invalid scale range");
  }
  if (!(gaussian_noise_probability >= 0.0 && gaussian_noise_probability <= 1.0)) {
    throw ValidationError("gaussian noise probability must be in [0, 1]");
  }
  if (jpeg_quality_min < 1 || jpeg_quality_max > 100 || jpeg_quality_min > jpeg_quality_max) {
    throw ValidationError("invalid JPEG quality range");
  }
  if (stages < 1) throw ValidationError("stage count must be >= 1");
}

DegradationStageSample sample_stage(RngStream& rng, const DegradationConfig& config) {
  DegradationStageSample s;

  const double u = rng.uniform();
  std::size_t family = kKernelFamilyCount - 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < kKernelFamilyCount; ++i) {
    acc += config.family_probabilities[i];
    if (u < acc) {
      family = i;
      break;
    }
  }
  // Skip zero-probability tail entries that rounding could otherwise select.
  while (family > 0 && config.family_probabilities[family] == 0.0) --family;
  const auto fam = static_cast<KernelFamily>(family);

  const auto size_idx = rng.uniform_int(0, static_cast<std::int64_t>(config.kernel_sizes.size()) - 1);
  const int size = config.kernel_sizes[static_cast<std::size_t>(size_idx)];

  KernelShape shape;
  if (is_isotropic(fam)) {
    shape.sigma_x = rng.uniform(config.sigma.lo, config.sigma.hi);
    shape.sigma_y = shape.sigma_x;
  } else {
    shape.sigma_x = rng.uniform(config.sigma.lo, config.sigma.hi);
    shape.sigma_y = rng.uniform(config.sigma.lo, config.sigma.hi);
    shape.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
  }
  if (is_generalized(fam)) shape.beta = rng.uniform(config.beta_generalized.lo, config.beta_generalized.hi);
  if (is_plateau(fam)) shape.beta = rng.uniform(config.beta_plateau.lo, config.beta_plateau.hi);
  s.kernel = make_kernel(fam, size, shape);

  s.scale = rng.uniform_open(config.scale.lo, config.scale.hi);
  s.filter = static_cast<ResampleFilter>(rng.uniform_int(0, 2));
  if (rng.bernoulli(config.gaussian_noise_probability)) {
    s.noise = {NoiseKind::Gaussian, rng.uniform(config.gaussian_sigma.lo, config.gaussian_sigma.hi)};
  } else {
    s.noise = {NoiseKind::Poisson, rng.uniform(config.poisson_scale.lo, config.poisson_scale.hi)};
  }
  s.jpeg_quality = static_cast<int>(rng.uniform_int(config.jpeg_quality_min, config.jpeg_quality_max));
  return s;
}

namespace {

void add_gaussian_noise(ImageBuffer& img, double sigma, RngStream& rng) {
  if (sigma == 0.0) return;
  for (auto& v : img.samples()) v = static_cast<float>(v + sigma * rng.normal());
}

// Quantize to 8 bits, pick the smallest power of two at least as large as the
// number of distinct levels, draw poisson(img * levels) / levels and add the
// scaled difference.
void add_poisson_noise(ImageBuffer& img, double scale, RngStream& rng) {
  if (scale == 0.0) return;
  const auto quantized = img.to_bytes();
  std::set<std::uint8_t> levels(quantized.begin(), quantized.end());
  const double vals = std::exp2(std::ceil(std::log2(static_cast<double>(levels.size()))));
  auto samples = img.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double base = quantized[i] / 255.0;
    const double drawn = static_cast<double>(rng.poisson(base * vals)) / vals;
    samples[i] = static_cast<float>(samples[i] + scale * (drawn - base));
  }
}

}  // namespace

ImageBuffer apply_stage(const ImageBuffer& img, const DegradationStageSample& sample, RngStream& rng,
                        StageHooks hooks) {
  auto blurred = convolve(img, sample.kernel.weights, sample.kernel.size);
  const auto out_h = static_cast<int>(std::lround(sample.scale * img.height()));
  const auto out_w = static_cast<int>(std::lround(sample.scale * img.width()));
  if (out_h < 1 || out_w < 1) {
    throw ValidationError("resampling " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                          " by " + std::to_string(sample.scale) + " gives a degenerate image");
  }
  auto out = resample(blurred, out_h, out_w, sample.filter);
  if (sample.noise.kind == NoiseKind::Gaussian) {
    add_gaussian_noise(out, sample.noise.strength, rng);
  } else {
    add_poisson_noise(out, sample.noise.strength, rng);
  }
  out.clamp();
  if (!hooks.skip_jpeg) out = jpeg_roundtrip(out, sample.jpeg_quality);
  return out;
}

std::uint64_t stage_stream_key(std::uint64_t seed, std::uint64_t frame_key, int stage) {
  return derive_key({seed, frame_key, static_cast<std::uint64_t>(stage)});
}

DegradeTrace degrade_image(const ImageBuffer& img, const DegradationConfig& config, std::uint64_t frame_key) {
  config.validate();
  DegradeTrace trace;
  trace.image = img;
  for (int stage = 0; stage < config.stages; ++stage) {
    const auto key = stage_stream_key(config.seed, frame_key, stage);
    RngStream rng(key);
    auto sample = sample_stage(rng, config);
    trace.image = apply_stage(trace.image, sample, rng);
    ++trace.jpeg_applications;
    trace.stream_keys.push_back(key);
    trace.stages.push_back(std::move(sample));
  }
  if (config.restore_original_size) {
    trace.image = resample(trace.image, img.height(), img.width(), ResampleFilter::Bicubic);
    trace.image.clamp();
  }
  return trace;
}

// Manifest ----------------------------------------------------------------

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t pos = 0;
  const auto v = std::stoull(s, &pos, 16);
  if (pos != s.size()) throw ValidationError("bad hex value '" + s + "' in manifest");
  return v;
}

json range_json(const RealRange& r) { return json::array({r.lo, r.hi}); }
RealRange range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json config_json(const DegradeManifest& m) {
  const auto& c = m.config;
  return json{
      {"type", "config"},
      {"sequence", m.sequence},
      {"seed", hex64(c.seed)},
      {"stages", c.stages},
      {"fraction", m.fraction},
      {"selection", "contiguous-prefix"},
      {"selected", m.selected},
      {"restore_original_size", c.restore_original_size},
      {"family_probabilities", c.family_probabilities},
      {"kernel_sizes", c.kernel_sizes},
      {"sigma", range_json(c.sigma)},
      {"beta_generalized", range_json(c.beta_generalized)},
      {"beta_plateau", range_json(c.beta_plateau)},
      {"scale", range_json(c.scale)},
      {"gaussian_noise_probability", c.gaussian_noise_probability},
      {"gaussian_sigma", range_json(c.gaussian_sigma)},
      {"poisson_scale", range_json(c.poisson_scale)},
      {"jpeg_quality", json::array({c.jpeg_quality_min, c.jpeg_quality_max})},
  };
}

json stage_json(const DegradationStageSample& s) {
  return json{
      {"family", to_string(s.kernel.family)},
      {"size", s.kernel.size},
      {"sigma_x", s.kernel.shape.sigma_x},
      {"sigma_y", s.kernel.shape.sigma_y},
      {"theta", s.kernel.shape.theta},
      {"beta", s.kernel.shape.beta},
      {"scale", s.scale},
      {"filter", to_string(s.filter)},
      {"noise", to_string(s.noise.kind)},
      {"noise_strength", s.noise.strength},
      {"jpeg_quality", s.jpeg_quality},
  };
}

DegradationStageSample stage_from(const json& j) {
  DegradationStageSample s;
  KernelShape shape{j.at("sigma_x").get<double>(), j.at("sigma_y").get<double>(), j.at("theta").get<double>(),
                    j.at("beta").get<double>()};
  s.kernel = make_kernel(kernel_family_from_string(j.at("family").get<std::string>()), j.at("size").get<int>(), shape);
  s.scale = j.at("scale").get<double>();
  s.filter = resample_filter_from_string(j.at("filter").get<std::string>());
  s.noise = {noise_kind_from_string(j.at("noise").get<std::string>()), j.at("noise_strength").get<double>()};
  s.jpeg_quality = j.at("jpeg_quality").get<int>();
  return s;
}

bool same_stage(const DegradationStageSample& a, const DegradationStageSample& b) {
  return a.kernel.family == b.kernel.family && a.kernel.size == b.kernel.size &&
         a.kernel.shape.sigma_x == b.kernel.shape.sigma_x && a.kernel.shape.sigma_y == b.kernel.shape.sigma_y &&
         a.kernel.shape.theta == b.kernel.shape.theta && a.kernel.shape.beta == b.kernel.shape.beta &&
         a.scale == b.scale && a.filter == b.filter && a.noise.kind == b.noise.kind &&
         a.noise.strength == b.noise.strength && a.jpeg_quality == b.jpeg_quality;
}

void copy_tree_except(const fs::path& from, const fs::path& to, const fs::path& skip) {
  fs::create_directories(to);
  for (const auto& entry : fs::directory_iterator(from)) {
    const auto target = to / entry.path().filename();
    if (fs::equivalent(entry.path(), skip)) continue;
    if (entry.is_directory()) {
      fs::copy(entry.path(), target, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    } else if (entry.is_regular_file()) {
      fs::copy_file(entry.path(), target, fs::copy_options::overwrite_existing);
    }
  }
}

}  // namespace

std::int64_t selected_frame_count(double fraction, std::int64_t length) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("degrade fraction must be in [0, 1]");
  // The epsilon absorbs representation error in fractions like 2/3.
  const auto n = static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(length) + 1e-9));
  return std::clamp<std::int64_t>(n, 0, length);
}

std::string manifest_to_jsonl(const DegradeManifest& m) {
  std::string out = config_json(m).dump() + "\n";
  for (const auto& f : m.frames) {
    json j{{"type", "frame"}, {"frame", f.frame}, {"degraded", f.degraded}, {"file", f.file}};
    json keys = json::array();
    for (auto k : f.stream_keys) keys.push_back(hex64(k));
    json stages = json::array();
    for (const auto& s : f.stages) stages.push_back(stage_json(s));
    j["stream_keys"] = keys;
    j["stages"] = stages;
    j["checksum"] = "fnv1a64:" + hex64(f.checksum);
    out += j.dump();
    out += '\n';
  }
  return out;
}

DegradeManifest manifest_from_jsonl(std::string_view text) {
  DegradeManifest m;
  bool have_config = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (type == "config") {
        auto& c = m.config;
        m.sequence = j.at("sequence").get<std::string>();
        c.seed = parse_hex64(j.at("seed").get<std::string>());
        c.stages = j.at("stages").get<int>();
        m.fraction = j.at("fraction").get<double>();
        m.selected = j.at("selected").get<std::int64_t>();
        c.restore_original_size = j.at("restore_original_size").get<bool>();
        c.family_probabilities = j.at("family_probabilities").get<std::array<double, kKernelFamilyCount>>();
        c.kernel_sizes = j.at("kernel_sizes").get<std::vector<int>>();
        c.sigma = range_from(j.at("sigma"));
        c.beta_generalized = range_from(j.at("beta_generalized"));
        c.beta_plateau = range_from(j.at("beta_plateau"));
        c.scale = range_from(j.at("scale"));
        c.gaussian_noise_probability = j.at("gaussian_noise_probability").get<double>();
        c.gaussian_sigma = range_from(j.at("gaussian_sigma"));
        c.poisson_scale = range_from(j.at("poisson_scale"));
        c.jpeg_quality_min = j.at("jpeg_quality").at(0).get<int>();
        c.jpeg_quality_max = j.at("jpeg_quality").at(1).get<int>();
        have_config = true;
      } else if (type == "frame") {
        FrameManifestEntry f;
        f.frame = j.at("frame").get<std::int64_t>();
        f.degraded = j.at("degraded").get<bool>();
        f.file = j.at("file").get<std::string>();
        for (const auto& k : j.at("stream_keys")) f.stream_keys.push_back(parse_hex64(k.get<std::string>()));
        for (const auto& s : j.at("stages")) f.stages.push_back(stage_from(s));
        auto sum = j.at("checksum").get<std::string>();
        constexpr std::string_view prefix = "fnv1a64:";
        if (sum.rfind(prefix, 0) != 0) throw ValidationError("unknown checksum format");
        f.checksum = parse_hex64(sum.substr(prefix.size()));
        m.frames.push_back(std::move(f));
      } else {
        throw ValidationError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_config) throw ValidationError("manifest has no config record");
  m.config.validate();
  return m;
}

DegradeManifest degrade_sequence(const fs::path& seq_dir, const fs::path& out_dir, const DegradationConfig& config,
                                 double fraction) {
  config.validate();
  const auto seq = load_sequence(seq_dir);
  DegradeManifest manifest;
  manifest.config = config;
  manifest.fraction = fraction;
  manifest.sequence = seq.info.name;
  manifest.selected = selected_frame_count(fraction, seq.info.length);
  if (manifest.selected > 0 && seq.info.image_ext != ".png") {
    throw ValidationError("degradation needs PNG frames, sequence uses '" + seq.info.image_ext + "'");
  }
  if (fs::exists(out_dir) && fs::equivalent(seq_dir, out_dir)) {
    throw ValidationError("output directory must differ from the input sequence");
  }

  const auto src_images = seq_dir / seq.info.image_dir;
  const auto dst_images = out_dir / seq.info.image_dir;
  copy_tree_except(seq_dir, out_dir, src_images);
  fs::create_directories(dst_images);

  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto frame = static_cast<std::int64_t>(i + 1);
    FrameManifestEntry entry;
    entry.frame = frame;
    entry.file = seq.frames[i].filename().string();
    const auto target = dst_images / entry.file;
    if (frame <= manifest.selected) {
      auto trace = degrade_image(read_png(seq.frames[i]), config, static_cast<std::uint64_t>(frame));
      const auto bytes = encode_png(trace.image);
      write_file_bytes(target, bytes);
      entry.degraded = true;
      entry.stream_keys = std::move(trace.stream_keys);
      entry.stages = std::move(trace.stages);
      entry.checksum = fnv1a64(bytes);
    } else {
      fs::copy_file(seq.frames[i], target, fs::copy_options::overwrite_existing);
      entry.checksum = fnv1a64(read_file_bytes(target));
    }
    manifest.frames.push_back(std::move(entry));
  }
  write_text_file(out_dir / kManifestName, manifest_to_jsonl(manifest));
  return manifest;
}

ReplayReport replay_manifest(const fs::path& seq_dir, const DegradeManifest& manifest,
                             const std::optional<fs::path>& out_dir) {
  const auto seq = load_sequence(seq_dir);
  ReplayReport report;
  for (const auto& entry : manifest.frames) {
    if (!entry.degraded) continue;
    if (entry.frame < 1 || entry.frame > static_cast<std::int64_t>(seq.frames.size())) {
      throw ValidationError("manifest frame " + std::to_string(entry.frame) + " is outside the sequence");
    }
    const auto trace = degrade_image(read_png(seq.frames[static_cast<std::size_t>(entry.frame - 1)]),
                                     manifest.config, static_cast<std::uint64_t>(entry.frame));
    const auto bytes = encode_png(trace.image);
    ++report.frames_checked;
    bool same = fnv1a64(bytes) == entry.checksum && trace.stages.size() == entry.stages.size() &&
                trace.stream_keys == entry.stream_keys;
    for (std::size_t s = 0; same && s < trace.stages.size(); ++s) same = same_stage(trace.stages[s], entry.stages[s]);
    if (!same) report.mismatched_frames.push_back(entry.frame);
    if (out_dir) write_file_bytes(*out_dir / seq.info.image_dir / entry.file, bytes);
  }
  return report;
}

}  // namespace semtrack
