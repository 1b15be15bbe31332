#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"
#include "overlay.hpp"
#include "selftest.hpp"
#include "semtrack/degrade.hpp"
#include "semtrack/embedder.hpp"
#include "semtrack/error.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/mot_io.hpp"
#include "semtrack/synth.hpp"
#include "semtrack/tracker.hpp"

namespace semtrack::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}

  void open(const std::string& path) {
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw IoError("cannot open log file " + path);
  }

  void emit(const ordered_json& record) {
    const auto line = record.dump();
    err_ << line << '\n';
    if (file_) *file_ << line << '\n';
  }

 private:
  std::ostream& err_;
  std::unique_ptr<std::ofstream> file_;
};

ordered_json event(const std::string& name, const std::string& command) {
  ordered_json j;
  j["event"] = name;
  j["command"] = command;
  return j;
}

ordered_json range_json(const RealRange& r) { return ordered_json::array({r.lo, r.hi}); }

ordered_json degrade_config_json(const DegradationConfig& c, double fraction) {
  ordered_json j;
  j["seed"] = c.seed;
  j["stages"] = c.stages;
  j["fraction"] = fraction;
  j["restore_size"] = c.restore_original_size;
  j["family_probabilities"] = c.family_probabilities;
  j["kernel_sizes"] = c.kernel_sizes;
  j["sigma"] = range_json(c.sigma);
  j["beta_generalized"] = range_json(c.beta_generalized);
  j["beta_plateau"] = range_json(c.beta_plateau);
  j["scale"] = range_json(c.scale);
  j["gaussian_probability"] = c.gaussian_noise_probability;
  j["gaussian_sigma"] = range_json(c.gaussian_sigma);
  j["poisson_scale"] = range_json(c.poisson_scale);
  j["jpeg_quality"] = ordered_json::array({c.jpeg_quality_min, c.jpeg_quality_max});
  return j;
}

ordered_json tracker_config_json(const TrackerConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["lambda"] = c.lambda;
  j["proposal_threshold"] = c.proposal_threshold;
  j["propagate_threshold"] = c.propagate_threshold;
  j["max_age"] = c.max_age;
  j["match_floor"] = c.match_floor;
  j["momentum"] = c.momentum;
  j["query_capacity"] = c.query_capacity;
  return j;
}

RealRange to_range(const std::vector<double>& v) { return {v.at(0), v.at(1)}; }

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

// Prefixes parse errors with the offending file.
template <class F>
auto with_file(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const RecordError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct DegradeArgs {
  std::string input, output;
  DegradationConfig config;
  double fraction = 2.0 / 3.0;
  bool no_restore = false;
  std::vector<double> sigma, beta_generalized, beta_plateau, scale, gaussian_sigma, poisson_scale, families;
  std::vector<int> jpeg_quality, kernel_sizes;
  std::optional<double> gaussian_probability;
};

struct TrackArgs {
  std::string sequence, detections, output, log_file;
  TrackerConfig config;
};

struct EvaluateArgs {
  std::string gt, pred;
  bool json = false;
};

struct SelftestArgs {
  std::vector<std::string> batteries;
  bool list = false;
  std::string inject_fault;
};

struct OverlayArgs {
  std::string sequence, result, output;
};

struct SynthArgs {
  std::string output;
  SynthConfig config;
};

int cmd_degrade(DegradeArgs& a, std::ostream& out, Log& log) {
  auto& c = a.config;
  c.restore_original_size = !a.no_restore;
  if (!a.sigma.empty()) c.sigma = to_range(a.sigma);
  if (!a.beta_generalized.empty()) c.beta_generalized = to_range(a.beta_generalized);
  if (!a.beta_plateau.empty()) c.beta_plateau = to_range(a.beta_plateau);
  if (!a.scale.empty()) c.scale = to_range(a.scale);
  if (!a.gaussian_sigma.empty()) c.gaussian_sigma = to_range(a.gaussian_sigma);
  if (!a.poisson_scale.empty()) c.poisson_scale = to_range(a.poisson_scale);
  if (!a.jpeg_quality.empty()) c.jpeg_quality_min = a.jpeg_quality[0], c.jpeg_quality_max = a.jpeg_quality[1];
  if (!a.kernel_sizes.empty()) c.kernel_sizes = a.kernel_sizes;
  if (!a.families.empty()) std::copy(a.families.begin(), a.families.end(), c.family_probabilities.begin());
  if (a.gaussian_probability) c.gaussian_noise_probability = *a.gaussian_probability;
  if (!(a.fraction >= 0.0 && a.fraction <= 1.0)) throw ValidationError("fraction must be in [0, 1]");
  c.validate();

  auto cfg = event("config", "degrade");
  cfg["input"] = a.input;
  cfg["output"] = a.output;
  cfg["config"] = degrade_config_json(c, a.fraction);
  log.emit(cfg);

  const auto manifest = degrade_sequence(a.input, a.output, c, a.fraction);
  auto done = event("done", "degrade");
  done["frames"] = manifest.frames.size();
  done["degraded"] = manifest.selected;
  done["manifest"] = (fs::path(a.output) / kManifestName).string();
  log.emit(done);
  out << "degraded " << manifest.selected << " of " << manifest.frames.size() << " frames\n";
  return kExitOk;
}

int cmd_track(TrackArgs& a, std::ostream& out, Log& log) {
  a.config.validate();
  if (!a.log_file.empty()) log.open(a.log_file);
  require_file(a.detections, "detection file");
  const auto seq = load_sequence(a.sequence);
  const auto dets = with_file(a.detections, [&] { return read_mot_file(a.detections); });

  DefaultEmbedder embedder;
  auto cfg = event("config", "track");
  cfg["sequence"] = a.sequence;
  cfg["detections"] = a.detections;
  cfg["output"] = a.output;
  cfg["embedder"] = {{"channels", embedder.channels()},
                     {"grid", ordered_json::array({embedder.grid_height(), embedder.grid_width()})}};
  cfg["config"] = tracker_config_json(a.config);
  log.emit(cfg);

  const auto result = run_sequence(seq, dets, embedder, a.config);
  for (const auto& f : result.log) {
    auto j = ordered_json::parse(frame_log_json(f));
    j["event"] = "frame";
    log.emit(j);
  }
  save_mot_file(a.output, result.records);
  auto done = event("done", "track");
  done["frames"] = result.log.size();
  done["records"] = result.records.size();
  log.emit(done);
  out << "wrote " << result.records.size() << " records to " << a.output << '\n';
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, Log& log) {
  require_file(a.gt, "ground truth file");
  require_file(a.pred, "prediction file");
  auto cfg = event("config", "evaluate");
  cfg["gt"] = a.gt;
  cfg["pred"] = a.pred;
  cfg["iou_threshold"] = 0.5;
  cfg["alphas"] = hota_alphas();
  log.emit(cfg);

  const auto gt = with_file(a.gt, [&] { return records_to_trackset(read_mot_file(a.gt)); });
  const auto pred = with_file(a.pred, [&] { return records_to_trackset(read_mot_file(a.pred)); });
  const auto report = evaluate(gt, pred);
  if (a.json) {
    out << report_to_json(report) << '\n';
  } else {
    out << format_report(report) << '\n';
  }
  return kExitOk;
}

int cmd_selftest(const SelftestArgs& a, std::ostream& out, Log& log) {
  if (a.list) {
    for (const auto& n : battery_names()) out << n << '\n';
    return kExitOk;
  }
  SelftestOptions opts;
  if (!a.inject_fault.empty()) opts.inject_fault = a.inject_fault;
  auto cfg = event("config", "selftest");
  cfg["batteries"] = a.batteries.empty() ? battery_names() : a.batteries;
  if (opts.inject_fault) cfg["inject_fault"] = *opts.inject_fault;
  log.emit(cfg);

  const auto results = run_selftest(a.batteries, opts);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    out << (r.passed ? "pass " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) failed.push_back(r.name);
  }
  auto done = event("done", "selftest");
  done["passed"] = results.size() - failed.size();
  done["failed"] = failed;
  log.emit(done);
  if (failed.empty()) return kExitOk;
  std::string names;
  for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
  throw ValidationError("failed batteries: " + names);
}

int cmd_render_overlay(const OverlayArgs& a, std::ostream& out, Log& log) {
  require_file(a.result, "result file");
  auto cfg = event("config", "render-overlay");
  cfg["sequence"] = a.sequence;
  cfg["result"] = a.result;
  cfg["output"] = a.output;
  log.emit(cfg);
  const auto stats = with_file(a.result, [&] { return render_overlay(a.sequence, a.result, a.output); });
  auto done = event("done", "render-overlay");
  done["annotated"] = stats.annotated;
  done["copied"] = stats.copied;
  log.emit(done);
  out << "annotated " << stats.annotated << " frames, copied " << stats.copied << '\n';
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out, Log& log) {
  const auto& c = a.config;
  auto cfg = event("config", "synth");
  cfg["output"] = a.output;
  cfg["config"] = {{"seed", c.seed},           {"frames", c.frames},         {"objects", c.objects},
                   {"width", c.width},         {"height", c.height},         {"box_width", c.box_width},
                   {"box_height", c.box_height}, {"speed", c.speed}};
  log.emit(cfg);
  write_synthetic(a.output, make_synthetic(c));
  out << "wrote " << c.frames << " frames to " << a.output << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-quality video degradation, query-fusion tracking and MOT evaluation.", "semtrack"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with one [subcommand] section of option values");

  DegradeArgs dg;
  auto* degrade = app.add_subcommand("degrade", "Degrade the leading fraction of a sequence's frames");
  degrade->add_option("input", dg.input, "Sequence directory (seqinfo.ini + images)")->required();
  degrade->add_option("output", dg.output, "Output sequence directory")->required();
  degrade->add_option("--seed", dg.config.seed, "Root seed")->capture_default_str();
  degrade->add_option("--stages", dg.config.stages, "Degradation stages per frame")->capture_default_str();
  degrade->add_option("--fraction", dg.fraction, "Fraction of frames degraded (leading prefix)")->capture_default_str();
  degrade->add_flag("--no-restore-size", dg.no_restore, "Keep the resampled size instead of restoring it");
  degrade->add_option("--sigma", dg.sigma, "Kernel sigma range LO HI")->expected(2);
  degrade->add_option("--beta-generalized", dg.beta_generalized, "Generalized kernel beta range LO HI")->expected(2);
  degrade->add_option("--beta-plateau", dg.beta_plateau, "Plateau kernel beta range LO HI")->expected(2);
  degrade->add_option("--scale", dg.scale, "Resample scale range LO HI")->expected(2);
  degrade->add_option("--gaussian-sigma", dg.gaussian_sigma, "Gaussian noise sigma range LO HI")->expected(2);
  degrade->add_option("--poisson-scale", dg.poisson_scale, "Poisson noise scale range LO HI")->expected(2);
  degrade->add_option("--gaussian-probability", dg.gaussian_probability, "Probability of Gaussian over Poisson noise");
  degrade->add_option("--jpeg-quality", dg.jpeg_quality, "JPEG quality range LO HI")->expected(2);
  degrade->add_option("--kernel-sizes", dg.kernel_sizes, "Candidate odd kernel sizes")->expected(1, 64);
  degrade->add_option("--family-probabilities", dg.families,
                      "Probabilities of the six kernel families (iso, aniso, gen-iso, gen-aniso, plateau-iso, "
                      "plateau-aniso)")
      ->expected(6);

  TrackArgs tr;
  auto* track = app.add_subcommand("track", "Track a sequence from a detection file");
  track->add_option("sequence", tr.sequence, "Sequence directory")->required();
  track->add_option("detections", tr.detections, "MOT detection file")->required();
  track->add_option("output", tr.output, "MOT result file to write")->required();
  track->add_option("--seed", tr.config.seed, "Seed of the fusion parameters")->capture_default_str();
  track->add_option("--lambda", tr.config.lambda, "Weight of IoU against embedding similarity")
      ->capture_default_str();
  track->add_option("--proposal-threshold", tr.config.proposal_threshold, "Detection confidence threshold")
      ->capture_default_str();
  track->add_option("--propagate-threshold", tr.config.propagate_threshold, "Track score needed to be reported")
      ->capture_default_str();
  track->add_option("--max-age", tr.config.max_age, "Frames a lost track is kept")->capture_default_str();
  track->add_option("--match-floor", tr.config.match_floor, "Minimum association score")->capture_default_str();
  track->add_option("--momentum", tr.config.momentum, "Embedding update momentum")->capture_default_str();
  track->add_option("--log", tr.log_file, "Also write the JSON-lines log to this file");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a result file against ground truth");
  evaluate_cmd->add_option("gt", ev.gt, "Ground-truth MOT file")->required();
  evaluate_cmd->add_option("pred", ev.pred, "Predicted MOT file")->required();
  evaluate_cmd->add_flag("--json", ev.json, "Print the full report as JSON");

  SelftestArgs st;
  auto* selftest = app.add_subcommand("selftest", "Run the embedded verification batteries");
  selftest->add_option("--battery", st.batteries, "Run only this battery (repeatable)");
  selftest->add_flag("--list", st.list, "List the batteries");
  selftest->add_option("--inject-fault", st.inject_fault)->group("");

  OverlayArgs ov;
  auto* overlay = app.add_subcommand("render-overlay", "Draw identity-coloured boxes on every frame");
  overlay->add_option("sequence", ov.sequence, "Sequence directory")->required();
  overlay->add_option("result", ov.result, "MOT result file")->required();
  overlay->add_option("output", ov.output, "Output image directory")->required();

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Write a synthetic sequence with perfect detections");
  synth->add_option("output", sy.output, "Output sequence directory")->required();
  synth->add_option("--frames", sy.config.frames)->capture_default_str();
  synth->add_option("--objects", sy.config.objects)->capture_default_str();
  synth->add_option("--width", sy.config.width)->capture_default_str();
  synth->add_option("--height", sy.config.height)->capture_default_str();
  synth->add_option("--seed", sy.config.seed)->capture_default_str();
  synth->add_option("--box-width", sy.config.box_width, "Object width in pixels (0 fits the frame)")->capture_default_str();
  synth->add_option("--box-height", sy.config.box_height, "Object height in pixels (0 fits the frame)")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  Log log(err);
  std::string command = "semtrack";
  try {
    if (degrade->parsed()) return command = "degrade", cmd_degrade(dg, out, log);
    if (track->parsed()) return command = "track", cmd_track(tr, out, log);
    if (evaluate_cmd->parsed()) return command = "evaluate", cmd_evaluate(ev, out, log);
    if (selftest->parsed()) return command = "selftest", cmd_selftest(st, out, log);
    if (overlay->parsed()) return command = "render-overlay", cmd_render_overlay(ov, out, log);
    if (synth->parsed()) return command = "synth", cmd_synth(sy, out, log);
    throw ValidationError("no subcommand given");
  } catch (const ValidationError& e) {
    auto j = event("error", command);
    j["exit_code"] = kExitValidation;
    j["message"] = e.what();
    log.emit(j);
    return kExitValidation;
  } catch (const std::exception& e) {
    auto j = event("error", command);
    j["exit_code"] = kExitRuntime;
    j["message"] = e.what();
    log.emit(j);
    return kExitRuntime;
  }
}

}  // namespace semtrack::cli
