#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "cli/cli.hpp"
#include "cli/overlay.hpp"
#include "cli/selftest.hpp"
#include "semtrack/degrade.hpp"
#include "semtrack/image.hpp"
#include "semtrack/mot_io.hpp"
#include "test_util.hpp"

namespace semtrack::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  std::string path(const std::string& name) const { return (dir.path() / name).string(); }
  void synth(const std::string& name, int frames = 6) {
    ASSERT_EQ(call({"synth", path(name), "--frames", std::to_string(frames), "--width", "96", "--height", "64"}).code,
              kExitOk);
  }
  test::TempDir dir;
};

TEST_F(Cli, HelpExitsZero) {
  const auto r = call({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("degrade"), std::string::npos);
  EXPECT_EQ(call({"track", "--help"}).code, kExitOk);
}

TEST_F(Cli, UnknownFlagAndMissingArgumentsAreValidationErrors) {
  EXPECT_EQ(call({"evaluate", "a", "b", "--bogus"}).code, kExitValidation);
  EXPECT_EQ(call({"frobnicate"}).code, kExitValidation);
  EXPECT_EQ(call({}).code, kExitValidation);
  EXPECT_EQ(call({"track", "only-one"}).code, kExitValidation);
  EXPECT_EQ(call({"degrade", "in", "out", "--seed", "notanumber"}).code, kExitValidation);
}

TEST_F(Cli, EvaluateSelfIsPerfect) {
  synth("seq");
  const auto gt = path("seq/gt/gt.txt");
  const auto r = call({"evaluate", gt, gt});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0\n");
  EXPECT_NE(r.err.find("\"event\":\"config\""), std::string::npos);
}

TEST_F(Cli, EvaluateSwitchFixture) {
  write_text_file(path("gt.txt"), "1,1,0,0,10,10,1\n2,1,0,0,10,10,1\n");
  write_text_file(path("pred.txt"), "1,1,0,0,10,10,1\n2,2,0,0,10,10,1\n");
  const auto r = call({"evaluate", path("gt.txt"), path("pred.txt")});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("MOTA 50.0 IDF1 50.0"), std::string::npos) << r.out;
  const auto j = call({"evaluate", path("gt.txt"), path("pred.txt"), "--json"});
  EXPECT_NE(j.out.find("\"IDSW\":1"), std::string::npos) << j.out;
}

TEST_F(Cli, MalformedPredictionNamesTheLine) {
  write_text_file(path("gt.txt"), "1,1,0,0,10,10,1\n");
  write_text_file(path("pred.txt"), "1,1,0,0,10,10,1\n2,1,0,x,10,10,1\n");
  const auto r = call({"evaluate", path("gt.txt"), path("pred.txt")});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingInputsAreValidationErrors) {
  synth("seq");
  EXPECT_EQ(call({"track", path("seq"), path("missing.txt"), path("out.txt")}).code, kExitValidation);
  EXPECT_EQ(call({"evaluate", path("missing.txt"), path("seq/gt/gt.txt")}).code, kExitValidation);
  EXPECT_EQ(call({"track", path("nope"), path("seq/det/det.txt"), path("out.txt")}).code, kExitValidation);
}

TEST_F(Cli, BadConfigValuesAreValidationErrors) {
  synth("seq");
  EXPECT_EQ(call({"track", path("seq"), path("seq/det/det.txt"), path("o.txt"), "--lambda", "2"}).code,
            kExitValidation);
  EXPECT_EQ(call({"degrade", path("seq"), path("d"), "--fraction", "1.5"}).code, kExitValidation);
  EXPECT_EQ(call({"degrade", path("seq"), path("d"), "--kernel-sizes", "8"}).code, kExitValidation);
}

TEST_F(Cli, UnwritableOutputIsRuntimeError) {
  synth("seq");
  write_text_file(path("file"), "x");
  EXPECT_EQ(call({"track", path("seq"), path("seq/det/det.txt"), path("file/sub/out.txt")}).code, kExitRuntime);
}

TEST_F(Cli, TrackThenEvaluateIsPerfect) {
  synth("seq");
  for (const char* lambda : {"0.5", "1.0"}) {
    const auto t = call({"track", path("seq"), path("seq/det/det.txt"), path("out.txt"), "--lambda", lambda});
    ASSERT_EQ(t.code, kExitOk) << t.err;
    EXPECT_NE(t.err.find("\"event\":\"frame\""), std::string::npos);
    EXPECT_NE(t.err.find("\"lambda\":" + std::string(lambda[0] == '1' ? "1.0" : "0.5")), std::string::npos) << t.err;
    EXPECT_EQ(call({"evaluate", path("seq/gt/gt.txt"), path("out.txt")}).out,
              "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0\n");
  }
}

TEST_F(Cli, TrackLogFileMirrorsStderr) {
  synth("seq");
  const auto t = call({"track", path("seq"), path("seq/det/det.txt"), path("out.txt"), "--log", path("log.jsonl")});
  ASSERT_EQ(t.code, kExitOk);
  EXPECT_EQ(read_text_file(path("log.jsonl")), t.err);
}

TEST_F(Cli, ConfigFileSuppliesDefaultsAndFlagsOverride) {
  synth("seq");
  write_text_file(path("cfg.toml"), "[track]\nlambda = 1.0\nmax-age = 4\n");
  const auto a = call({"--config", path("cfg.toml"), "track", path("seq"), path("seq/det/det.txt"), path("o.txt")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_NE(a.err.find("\"lambda\":1.0"), std::string::npos) << a.err;
  EXPECT_NE(a.err.find("\"max_age\":4"), std::string::npos);
  const auto b = call({"--config", path("cfg.toml"), "track", path("seq"), path("seq/det/det.txt"), path("o.txt"),
                       "--lambda", "0.25"});
  EXPECT_NE(b.err.find("\"lambda\":0.25"), std::string::npos) << b.err;
}

TEST_F(Cli, DegradeDefaultsAndDeterminism) {
  synth("seq");
  const auto a = call({"degrade", "--seed", "7", "--fraction", "0.667", path("seq"), path("a")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_NE(a.err.find("\"stages\":2"), std::string::npos);
  EXPECT_NE(a.err.find("\"seed\":7"), std::string::npos);
  ASSERT_EQ(call({"degrade", "--seed", "7", "--fraction", "0.667", path("seq"), path("b")}).code, kExitOk);
  const auto ma = manifest_from_jsonl(read_text_file(path("a") + "/" + kManifestName));
  const auto mb = manifest_from_jsonl(read_text_file(path("b") + "/" + kManifestName));
  EXPECT_EQ(ma.selected, 4);
  EXPECT_EQ(ma.config.stages, 2);
  ASSERT_EQ(ma.frames.size(), mb.frames.size());
  for (std::size_t i = 0; i < ma.frames.size(); ++i) EXPECT_EQ(ma.frames[i].checksum, mb.frames[i].checksum);
}

TEST_F(Cli, DegradeZeroFractionCopies) {
  synth("seq");
  ASSERT_EQ(call({"degrade", path("seq"), path("c"), "--fraction", "0"}).code, kExitOk);
  const auto src = load_sequence(path("seq"));
  for (const auto& f : src.frames) {
    EXPECT_EQ(read_file_bytes(f), read_file_bytes(fs::path(path("c")) / "img1" / f.filename()));
  }
}

TEST_F(Cli, DegradeRangeOverridesReachTheManifest) {
  synth("seq");
  ASSERT_EQ(call({"degrade", path("seq"), path("d"), "--stages", "1", "--jpeg-quality", "30", "30", "--scale", "0.5",
                  "0.6", "--no-restore-size"})
                .code,
            kExitOk);
  const auto m = manifest_from_jsonl(read_text_file(path("d") + "/" + kManifestName));
  EXPECT_FALSE(m.config.restore_original_size);
  for (const auto& f : m.frames) {
    if (!f.degraded) continue;
    ASSERT_EQ(f.stages.size(), 1u);
    EXPECT_EQ(f.stages[0].jpeg_quality, 30);
    EXPECT_GT(f.stages[0].scale, 0.5);
    EXPECT_LT(f.stages[0].scale, 0.6);
  }
}

TEST_F(Cli, SelftestListMatchesBatteries) {
  const auto r = call({"selftest", "--list"});
  EXPECT_EQ(r.code, kExitOk);
  std::string expected;
  for (const auto& n : battery_names()) expected += n + "\n";
  EXPECT_EQ(r.out, expected);
  EXPECT_EQ(battery_names().size(), 10u);
}

TEST_F(Cli, SelftestSingleBatteryPasses) {
  const auto r = call({"selftest", "--battery", "hota-closed-case", "--battery", "format-roundtrip"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("pass hota-closed-case"), std::string::npos);
  EXPECT_NE(r.out.find("pass format-roundtrip"), std::string::npos);
}

TEST_F(Cli, SelftestInjectedFaultNamesTheBattery) {
  const auto r = call({"selftest", "--battery", "hota-closed-case", "--inject-fault", "hota-closed-case"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.out.find("FAIL hota-closed-case"), std::string::npos);
  EXPECT_NE(r.err.find("hota-closed-case"), std::string::npos);
  EXPECT_EQ(call({"selftest", "--battery", "no-such-battery"}).code, kExitValidation);
}

TEST_F(Cli, RenderOverlayEmptyResultCopiesFrames) {
  synth("seq", 3);
  write_text_file(path("empty.txt"), "");
  const auto r = call({"render-overlay", path("seq"), path("empty.txt"), path("ov")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const auto& f : load_sequence(path("seq")).frames) {
    EXPECT_EQ(read_file_bytes(f), read_file_bytes(fs::path(path("ov")) / f.filename()));
  }
}

TEST_F(Cli, RenderOverlayDrawsIdentityColours) {
  synth("seq", 3);
  ASSERT_EQ(call({"render-overlay", path("seq"), path("seq/gt/gt.txt"), path("ov")}).code, kExitOk);
  const auto src = load_sequence(path("seq"));
  const auto gt = group_by_frame(read_mot_file(path("seq/gt/gt.txt")));
  const auto& first = gt.at(1).front();
  const auto img = read_png(fs::path(path("ov")) / src.frames[0].filename());
  const auto colour = identity_color(*first.identity);
  const int y = static_cast<int>(first.box.top) + 5, x = static_cast<int>(first.box.left);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(y, x, c), colour[static_cast<std::size_t>(c)], 1.0 / 255.0);
}

TEST(Overlay, HueIsDeterministicAndSpread) {
  EXPECT_EQ(identity_hue(17), identity_hue(17));
  EXPECT_EQ(identity_color(17), identity_color(17));
  const double step = 1.0 - (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::int64_t id = 1; id <= 1000; ++id) {
    const double d = std::fabs(identity_hue(id + 1) - identity_hue(id));
    EXPECT_NEAR(std::min(d, 1.0 - d), step, 1e-9) << id;
  }
  std::set<std::array<std::uint8_t, 3>> colours;
  for (std::int64_t id = 1; id <= 100; ++id) {
    const auto c = identity_color(id);
    colours.insert({static_cast<std::uint8_t>(std::lround(c[0] * 255)), static_cast<std::uint8_t>(std::lround(c[1] * 255)),
                    static_cast<std::uint8_t>(std::lround(c[2] * 255))});
  }
  EXPECT_EQ(colours.size(), 100u);
}

}  // namespace
}  // namespace semtrack::cli
