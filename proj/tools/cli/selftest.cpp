#include "selftest.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "semtrack/degrade.hpp"
#include "semtrack/fusion.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/mot_io.hpp"
#include "semtrack/synth.hpp"
#include "semtrack/verify/brute_force.hpp"
#include "semtrack/verify/fusion_oracle.hpp"
#include "semtrack/verify/metrics_oracle.hpp"
#include "semtrack/verify/scenarios.hpp"

namespace semtrack::cli {

namespace fs = std::filesystem;

namespace {

class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl = (fs::temp_directory_path() / "semtrack-selftest-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw IoError("cannot create a scratch directory");
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

BatteryResult metric_oracle(bool fault) {
  RngStream rng(derive_key({0x6d6574726963ULL}));
  double worst = 0.0;
  constexpr int kScenarios = 200;
  for (int i = 0; i < kScenarios; ++i) {
    const auto s = verify::random_scenario(rng);
    const auto h = hota(s.gt, s.pred);
    const auto c = mota(s.gt, s.pred);
    const auto id = idf1(s.gt, s.pred);
    auto oh = verify::oracle_hota(s.gt, s.pred);
    const auto oc = verify::oracle_clear(s.gt, s.pred);
    const auto oi = verify::oracle_identity(s.gt, s.pred);
    if (fault && i == 0) oh.hota += 1e-3;
    worst = std::max({worst, std::fabs(h.hota - oh.hota), std::fabs(h.deta - oh.deta), std::fabs(h.assa - oh.assa),
                      std::fabs(c.mota - oc.mota), std::fabs(id.idf1 - oi.idf1)});
  }
  return {"", worst <= 1e-9, fmt("%.0f scenarios, max |diff| %.3g (limit 1e-9)", kScenarios, worst)};
}

BatteryResult hungarian_exact(bool fault) {
  RngStream rng(derive_key({0x68756e67ULL}));
  constexpr int kMatrices = 1000;
  int mismatches = 0;
  for (int i = 0; i < kMatrices; ++i) {
    const auto m = verify::random_cost_matrix(rng, 6);
    const auto a = hungarian(m);
    auto b = verify::brute_force_assignment(m);
    if (fault && i == 0) b.cost += 1.0;
    if (a.cost != b.cost || a.pairs != b.pairs) ++mismatches;
  }
  return {"", mismatches == 0, fmt("%.0f matrices (n,m <= 6), %.0f cost mismatches", kMatrices, mismatches)};
}

BatteryResult hota_closed_case(bool fault) {
  TrackSet gt, pred;
  gt[1][1] = {{0.0, 0.0, 10.0, 10.0}, 1.0};
  pred[1][1] = {{0.0, 0.0, 10.0, 5.0}, 1.0};  // IoU exactly 0.5
  const double got = 100.0 * hota(gt, pred).hota;
  double expected = 100.0 * 10.0 / 19.0;
  if (fault) expected += 1.0;
  return {"", std::fabs(got - expected) <= 0.01, fmt("HOTA %.4f, expected %.4f (tol 0.01)", got, expected)};
}

BatteryResult fusion_residual(bool fault) {
  bool ok = true;
  constexpr int kInstances = 10;
  for (int i = 0; i < kInstances; ++i) {
    RngStream rng(derive_key({0x7265736964ULL, static_cast<std::uint64_t>(i)}));
    FusionDims dims;
    auto p = init_fusion_params(dims, rng);
    zero_adapter_projections(p.adapter);
    zero_extractor_output(p.vsfm);
    const auto x_q = Tensor::uniform({dims.channels, dims.height, dims.width}, 1.0, rng);
    auto x_s = Tensor::uniform({dims.channels, dims.height, dims.width}, 1.0, rng);
    auto q = Tensor::uniform({dims.queries, dims.query_dim}, 1.0, rng);
    const auto adapted = adapter_forward(x_q, x_s, p.adapter);
    const auto fused = vsfm_forward(x_s, q, p.vsfm);
    if (fault && i == 0) x_s[0] += 1e-12;
    ok = ok && adapted == x_s && fused == q;
  }
  return {"", ok,
          fmt("%.0f instances, outputs with zeroed projections ", kInstances) +
              (ok ? "bit-identical to X_s and X_q" : "differ from X_s or X_q")};
}

BatteryResult fusion_oracle(bool fault) {
  double worst = 0.0;
  constexpr int kInstances = 50;
  for (int i = 0; i < kInstances; ++i) {
    RngStream rng(derive_key({0x6f7261636c65ULL, static_cast<std::uint64_t>(i)}));
    FusionDims dims;  // C=4, H=W=3, N=5, M=4
    const auto p = init_fusion_params(dims, rng);
    const auto x_q = Tensor::uniform({dims.channels, dims.height, dims.width}, 1.0, rng);
    const auto x_s = Tensor::uniform({dims.channels, dims.height, dims.width}, 1.0, rng);
    const auto q = Tensor::uniform({dims.queries, dims.query_dim}, 1.0, rng);
    const auto x_as = adapter_forward(x_q, x_s, p.adapter);
    auto expected_as = verify::oracle_adapter(x_q, x_s, p.adapter);
    if (fault && i == 0) expected_as[0] += 1e-6;
    worst = std::max(worst, max_abs_diff(x_as, expected_as));
    worst = std::max(worst, max_abs_diff(vsfm_forward(x_as, q, p.vsfm), verify::oracle_vsfm(x_as, q, p.vsfm)));
    worst = std::max(worst, max_abs_diff(fuse_queries(q, x_s, p),
                                         verify::oracle_vsfm(verify::oracle_adapter(reshape_queries(q, dims.height, dims.width,
                                                                                                    p.vsfm.query_projection),
                                                                                    x_s, p.adapter),
                                                             q, p.vsfm)));
  }
  return {"", worst < 1e-9, fmt("%.0f instances, max |diff| %.3g (limit 1e-9)", kInstances, worst)};
}

BatteryResult gradient_sanity(bool fault) {
  constexpr int kInstances = 10;
  constexpr double kEps = 5e-2;
  int ratio_checked = 0, affine = 0;
  std::size_t kinked = 0, elements = 0;
  bool ok = true;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < kInstances; ++i) {
    RngStream rng(derive_key({0x6772616469ULL, static_cast<std::uint64_t>(i)}));
    FusionDims dims;
    dims.channels = 16;
    dims.height = dims.width = 4;
    const auto p = init_fusion_params(dims, rng).vsfm;
    const auto x_as = Tensor::uniform({dims.channels, dims.height, dims.width}, 3.0, rng);
    const auto q = Tensor::uniform({dims.queries, dims.query_dim}, 3.0, rng);
    const auto reports = grad_check_fusion(GradProbe::VsfmOutput, x_as, q, nullptr, &p, kEps);
    for (const auto& r : reports) {
      ok = ok && r.finite;
      kinked += r.kinked.size();
      elements += r.gradient.size();
    }
    if (!extractor_inactive(vsfm_trace(x_as, q, p).f_m, p.extractor)) {
      ++ratio_checked;
      for (const auto& r : reports) {
        double ratio = r.richardson_ratio;
        if (fault && i == 0) ratio += 1.0;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        ok = ok && ratio >= 3.9 && ratio <= 4.1;
      }
    } else {
      // A layer with no active unit: sum(F_fq) = sum(X_q) + const, so the
      // exact gradients are 0 for X_as and 1 for X_q.
      ++affine;
      double err = 0.0;
      for (std::size_t r = 0; r < 2; ++r) {
        const auto& g = reports[r].gradient;
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (std::find(reports[r].kinked.begin(), reports[r].kinked.end(), k) != reports[r].kinked.end()) continue;
          err = std::max(err, std::fabs(g[k] - (r == 0 ? 0.0 : 1.0)));
        }
      }
      if (fault && i == 0) err += 1.0;
      ok = ok && err <= 1e-9;
    }
  }
  std::string detail = fmt("%.0f instances, eps %.3g; ", kInstances, kEps);
  detail += fmt("%.0f with live extractor, Richardson ratios in [%.4f, %.4f] (limits 3.9..4.1)", ratio_checked, lo, hi);
  if (affine > 0) detail += fmt("; %.0f with an inactive extractor layer, gradients equal the exact affine values", affine);
  detail += fmt("; %.0f of %.0f stencils cross a ReLU kink and are excluded from the ratio", kinked, elements);
  return {"", ok, detail};
}

BatteryResult degradation_conformance(bool fault) {
  DegradationConfig config;
  RngStream rng(derive_key({0x6465677261ULL}));
  constexpr int kStages = 10000;
  std::array<int, kKernelFamilyCount> counts{};
  int out_of_range = 0;
  double worst_sum = 0.0;
  for (int i = 0; i < kStages; ++i) {
    const auto s = sample_stage(rng, config);
    counts[static_cast<std::size_t>(s.kernel.family)]++;
    const auto& k = s.kernel;
    const auto& sh = k.shape;
    bool in = k.size >= 7 && k.size <= 21 && k.size % 2 == 1;
    in = in && s.scale > 0.15 && s.scale < 1.5;
    in = in && s.jpeg_quality >= 20 && s.jpeg_quality <= 40;
    in = in && sh.sigma_x >= 0.2 && sh.sigma_x <= 3.0 && sh.sigma_y >= 0.2 && sh.sigma_y <= 3.0;
    in = in && sh.theta >= -std::numbers::pi && sh.theta <= std::numbers::pi;
    if (s.noise.kind == NoiseKind::Gaussian) {
      in = in && s.noise.strength >= 1.0 / 255.0 && s.noise.strength <= 30.0 / 255.0;
    } else {
      in = in && s.noise.strength >= 0.05 && s.noise.strength <= 3.0;
    }
    if (!in) ++out_of_range;
    double total = 0.0;
    for (double w : k.weights) total += w;
    worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
  }
  auto expected = config.family_probabilities;
  if (fault) std::swap(expected[0], expected[1]);
  double worst_z = 0.0;
  for (std::size_t f = 0; f < kKernelFamilyCount; ++f) {
    const double mean = kStages * expected[f];
    const double sd = std::sqrt(kStages * expected[f] * (1.0 - expected[f]));
    worst_z = std::max(worst_z, std::fabs(counts[f] - mean) / sd);
  }
  const bool ok = out_of_range == 0 && worst_z <= 3.0 && worst_sum <= 1e-12;
  return {"", ok,
          fmt("%.0f stages, %.0f out of range, ", kStages, out_of_range) +
              fmt("max family deviation %.2f sigma (limit 3), max |sum-1| %.3g (limit 1e-12)", worst_z, worst_sum)};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::map<std::string, std::vector<std::uint8_t>> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = read_file_bytes(e.path());
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = read_file_bytes(e.path());
  if (fa.size() != fb.size()) {
    why = "file counts differ";
    return false;
  }
  for (const auto& [name, bytes] : fa) {
    const auto it = fb.find(name);
    if (it == fb.end() || it->second != bytes) {
      why = name + " differs";
      return false;
    }
  }
  return true;
}

BatteryResult degradation_determinism(bool fault) {
  ScratchDir tmp;
  SynthConfig sc;
  sc.width = 128;
  sc.height = 96;
  sc.frames = 10;
  sc.objects = 2;
  sc.box_width = 24;
  sc.box_height = 30;
  sc.seed = 3;
  const auto src = tmp.path() / "source";
  write_synthetic(src, make_synthetic(sc));

  DegradationConfig config;
  config.seed = 7;
  degrade_sequence(src, tmp.path() / "first", config, 1.0);
  if (fault) config.seed = 8;
  degrade_sequence(src, tmp.path() / "second", config, 1.0);
  std::string why;
  const bool identical = same_tree(tmp.path() / "first", tmp.path() / "second", why);

  const auto manifest = manifest_from_jsonl(read_text_file(tmp.path() / "first" / kManifestName));
  const auto replay = replay_manifest(src, manifest);
  const bool ok = identical && replay.ok() && replay.frames_checked == 10;
  std::string detail = identical ? "two runs bit-identical" : "runs differ: " + why;
  detail += fmt("; manifest replay regenerated %.0f frames, %.0f mismatches", static_cast<double>(replay.frames_checked),
                static_cast<double>(replay.mismatched_frames.size()));
  return {"", ok, detail};
}

BatteryResult end_to_end(bool fault) {
  ScratchDir tmp;
  const auto seq = (tmp.path() / "seq").string();
  const auto result = (tmp.path() / "result.txt").string();
  const auto degraded = (tmp.path() / "degraded").string();
  const auto degraded_result = (tmp.path() / "degraded_result.txt").string();
  std::ostringstream out, log;
  auto call = [&](const std::vector<std::string>& args) {
    out.str("");
    return run(args, out, log);
  };

  if (call({"synth", seq, "--frames", "20", "--objects", "3"}) != 0) return {"", false, "synth failed"};
  if (call({"track", seq, seq + "/det/det.txt", result}) != 0) return {"", false, "track failed"};
  if (fault) save_mot_file(result, std::vector<DetectionRecord>{});
  if (call({"evaluate", seq + "/gt/gt.txt", result}) != 0) return {"", false, "evaluate failed"};
  std::string report = out.str();
  while (!report.empty() && report.back() == '\n') report.pop_back();
  const bool perfect = report == "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0";

  if (call({"degrade", seq, degraded, "--seed", "7"}) != 0) return {"", false, "degrade failed: " + report};
  if (call({"track", degraded, degraded + "/det/det.txt", degraded_result}) != 0) {
    return {"", false, "track on the degraded sequence failed"};
  }
  std::size_t parsed = 0;
  try {
    parsed = read_mot_file(degraded_result).size();
  } catch (const std::exception& e) {
    return {"", false, std::string("degraded result does not parse: ") + e.what()};
  }
  std::string detail = "clean: " + report + "; degraded (seed 7): " + std::to_string(parsed) + " records parsed";
  return {"", perfect, detail};
}

BatteryResult format_roundtrip(bool fault) {
  RngStream rng(derive_key({0x666f726d6174ULL}));
  auto real = [&]() {
    switch (rng.uniform_int(0, 3)) {
      case 0: return static_cast<double>(rng.uniform_int(-2000, 2000));
      case 1: return rng.uniform(-1000.0, 1000.0);
      case 2: return rng.uniform(-1.0, 1.0) * std::pow(10.0, static_cast<double>(rng.uniform_int(-12, 12)));
      default: return std::round(rng.uniform(-500.0, 500.0) * 100.0) / 100.0;
    }
  };
  auto positive = [&]() {
    double v = 0.0;
    while (!(v > 0.0)) v = std::fabs(real());
    return v;
  };
  constexpr int kLists = 1000;
  int failures = 0;
  for (int i = 0; i < kLists; ++i) {
    std::vector<DetectionRecord> records(static_cast<std::size_t>(rng.uniform_int(0, 20)));
    for (auto& r : records) {
      r.frame = rng.uniform_int(1, 100000);
      if (rng.bernoulli(0.8)) r.identity = rng.uniform_int(1, 1000000);
      r.box = {real(), real(), positive(), positive()};
      r.confidence = real();
    }
    auto parsed = parse_mot_file(write_mot_file(records));
    if (fault && i == 0 && !parsed.empty()) parsed[0].confidence += 1.0;
    if (fault && i == 0 && parsed.empty()) parsed.push_back({});
    if (parsed != records) ++failures;
  }
  return {"", failures == 0, fmt("%.0f random record lists, %.0f mismatches", kLists, failures)};
}

using Battery = std::function<BatteryResult(bool)>;

const std::vector<std::pair<std::string, Battery>>& registry() {
  static const std::vector<std::pair<std::string, Battery>> r{
      {"metric-oracle", metric_oracle},
      {"hungarian-exact", hungarian_exact},
      {"hota-closed-case", hota_closed_case},
      {"fusion-residual", fusion_residual},
      {"fusion-oracle", fusion_oracle},
      {"gradient-sanity", gradient_sanity},
      {"degradation-conformance", degradation_conformance},
      {"degradation-determinism", degradation_determinism},
      {"end-to-end", end_to_end},
      {"format-roundtrip", format_roundtrip},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& battery_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

BatteryResult run_battery(const std::string& name, const SelftestOptions& options) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    BatteryResult r;
    try {
      r = fn(options.inject_fault && *options.inject_fault == name);
    } catch (const std::exception& e) {
      r = {"", false, std::string("exception: ") + e.what()};
    }
    r.name = name;
    return r;
  }
  throw ValidationError("unknown battery '" + name + "'");
}

std::vector<BatteryResult> run_selftest(const std::vector<std::string>& names, const SelftestOptions& options) {
  if (options.inject_fault &&
      std::find(battery_names().begin(), battery_names().end(), *options.inject_fault) == battery_names().end()) {
    throw ValidationError("unknown battery '" + *options.inject_fault + "'");
  }
  std::vector<BatteryResult> out;
  for (const auto& n : names.empty() ? battery_names() : names) out.push_back(run_battery(n, options));
  return out;
}

}  // namespace semtrack::cli
