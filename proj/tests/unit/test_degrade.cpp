#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "semtrack/degrade.hpp"
#include "semtrack/mot_io.hpp"
#include "semtrack/synth.hpp"
#include "test_util.hpp"

namespace semtrack {
namespace {

namespace fs = std::filesystem;

double kernel_sum(const BlurKernel& k) { return std::accumulate(k.weights.begin(), k.weights.end(), 0.0); }

ImageBuffer random_image(int h, int w, std::uint64_t seed) {
  RngStream rng(seed);
  ImageBuffer img(h, w);
  for (auto& s : img.samples()) s = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
  return img;
}

TEST(Kernel, IsotropicIsNormalizedAndFourFoldSymmetric) {
  const auto k = make_kernel(KernelFamily::Isotropic, 7, {1.0, 1.0, 0.0, 1.0});
  EXPECT_NEAR(kernel_sum(k), 1.0, 1e-12);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) {
      EXPECT_NEAR(k.at(r, c), k.at(c, 6 - r), 1e-15);
      EXPECT_NEAR(k.at(r, c), k.at(6 - r, 6 - c), 1e-15);
    }
}

TEST(Kernel, TinySigmaApproachesIdentity) {
  const auto k = make_kernel(KernelFamily::Isotropic, 7, {1e-3, 1e-3, 0.0, 1.0});
  EXPECT_GT(k.at(3, 3), 0.999);
}

TEST(Kernel, AnisotropicSpreadFollowsSigma) {
  const auto k = make_kernel(KernelFamily::Anisotropic, 21, {3.0, 1.0, 0.0, 1.0});
  double vx = 0.0, vy = 0.0;
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 21; ++c) {
      vx += k.at(r, c) * (c - 10) * (c - 10);
      vy += k.at(r, c) * (r - 10) * (r - 10);
    }
  EXPECT_GT(vx, vy);
  EXPECT_NEAR(vx / vy, 9.0, 0.5);
}

TEST(Kernel, EveryFamilyNormalized) {
  for (std::size_t f = 0; f < kKernelFamilyCount; ++f) {
    const auto family = static_cast<KernelFamily>(f);
    const auto k = make_kernel(family, 13, {2.0, 0.7, 0.6, 1.5});
    EXPECT_NEAR(kernel_sum(k), 1.0, 1e-12) << to_string(family);
    EXPECT_EQ(kernel_family_from_string(to_string(family)), family);
  }
}

TEST(SampleStage, WithinRangesAndDeterministic) {
  const DegradationConfig config;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    RngStream a(seed), b(seed);
    const auto s = sample_stage(a, config);
    const auto t = sample_stage(b, config);
    EXPECT_EQ(s.kernel.weights, t.kernel.weights);
    EXPECT_EQ(s.scale, t.scale);
    EXPECT_EQ(s.jpeg_quality, t.jpeg_quality);
    EXPECT_GE(s.kernel.size, 7);
    EXPECT_LE(s.kernel.size, 21);
    EXPECT_EQ(s.kernel.size % 2, 1);
    EXPECT_GT(s.scale, 0.15);
    EXPECT_LT(s.scale, 1.5);
    EXPECT_GE(s.jpeg_quality, 20);
    EXPECT_LE(s.jpeg_quality, 40);
    if (s.noise.kind == NoiseKind::Gaussian) {
      EXPECT_GE(s.noise.strength, 1.0 / 255.0);
      EXPECT_LE(s.noise.strength, 30.0 / 255.0);
    } else {
      EXPECT_GE(s.noise.strength, 0.05);
      EXPECT_LE(s.noise.strength, 3.0);
    }
  }
}

TEST(SampleStage, FamilyFrequenciesMatchProbabilities) {
  const DegradationConfig config;
  RngStream rng(derive_key({42}));
  constexpr int n = 100000;
  std::array<int, kKernelFamilyCount> counts{};
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(sample_stage(rng, config).kernel.family)]++;
  for (std::size_t f = 0; f < kKernelFamilyCount; ++f) {
    const double p = config.family_probabilities[f];
    EXPECT_LE(std::fabs(counts[f] - n * p), 4.0 * std::sqrt(n * p * (1 - p))) << f;
  }
}

TEST(ApplyStage, IdentityConfigurationIsExact) {
  const auto img = random_image(16, 16, 1);
  DegradationStageSample s;
  s.kernel = delta_kernel(7);
  s.scale = 1.0;
  s.noise = {NoiseKind::Gaussian, 0.0};
  RngStream rng(1);
  EXPECT_EQ(apply_stage(img, s, rng, {true}), img);
}

TEST(ApplyStage, FlatGrayThroughJpegStaysFlat) {
  const ImageBuffer gray(32, 32, 128.0f / 255.0f);
  DegradationStageSample s;
  s.kernel = delta_kernel(7);
  s.noise = {NoiseKind::Gaussian, 0.0};
  s.jpeg_quality = 40;
  RngStream rng(2);
  for (float v : apply_stage(gray, s, rng).samples()) EXPECT_NEAR(v, 128.0 / 255.0, 2.0 / 255.0);
}

TEST(ApplyStage, HalfScaleHalvesSize) {
  const auto img = random_image(64, 64, 3);
  DegradationStageSample s;
  s.kernel = delta_kernel(7);
  s.scale = 0.5;
  s.noise = {NoiseKind::Gaussian, 0.0};
  RngStream rng(3);
  const auto out = apply_stage(img, s, rng, {true});
  EXPECT_EQ(out.height(), 32);
  EXPECT_EQ(out.width(), 32);
}

TEST(DegradeImage, TwoStagesAndRestoredSize) {
  const auto img = random_image(48, 40, 4);
  DegradationConfig config;
  config.seed = 9;
  const auto t = degrade_image(img, config, 3);
  EXPECT_EQ(t.stages.size(), 2u);
  EXPECT_EQ(t.stream_keys.size(), 2u);
  EXPECT_EQ(t.jpeg_applications, 2);
  EXPECT_EQ(t.image.height(), 48);
  EXPECT_EQ(t.image.width(), 40);
  EXPECT_EQ(degrade_image(img, config, 3).image.to_bytes(), t.image.to_bytes());
  EXPECT_NE(degrade_image(img, config, 4).image.to_bytes(), t.image.to_bytes());
}

TEST(DegradeConfig, InvalidValuesRejected) {
  DegradationConfig c;
  c.family_probabilities[0] = 0.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.kernel_sizes = {8};
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.stages = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.jpeg_quality_min = 50;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(FrameSelection, ContiguousPrefix) {
  EXPECT_EQ(selected_frame_count(2.0 / 3.0, 6), 4);
  EXPECT_EQ(selected_frame_count(0.0, 6), 0);
  EXPECT_EQ(selected_frame_count(1.0, 6), 6);
  EXPECT_EQ(selected_frame_count(0.667, 10), 6);
}

class DegradeSequence : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthConfig c;
    c.width = 64;
    c.height = 48;
    c.frames = 6;
    c.objects = 2;
    c.box_width = 12;
    c.box_height = 16;
    write_synthetic(dir / "seq", make_synthetic(c));
  }
  test::TempDir dir;
};

TEST_F(DegradeSequence, PrefixDegradedRestCopied) {
  DegradationConfig config;
  config.seed = 5;
  const auto m = degrade_sequence(dir / "seq", dir / "out", config, 2.0 / 3.0);
  EXPECT_EQ(m.selected, 4);
  ASSERT_EQ(m.frames.size(), 6u);
  const auto src = load_sequence(dir / "seq");
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(m.frames[i].degraded, i < 4);
    const auto name = src.frames[i].filename();
    const bool same = read_file_bytes(src.frames[i]) == read_file_bytes(dir / "out" / "img1" / name);
    EXPECT_EQ(same, i >= 4) << i;
  }
  EXPECT_EQ(read_file_bytes(dir / "seq" / "gt" / "gt.txt"), read_file_bytes(dir / "out" / "gt" / "gt.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / kManifestName));
}

TEST_F(DegradeSequence, ZeroFractionIsByteCopy) {
  degrade_sequence(dir / "seq", dir / "out", {}, 0.0);
  for (const auto& e : fs::recursive_directory_iterator(dir / "seq")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir / "seq");
    EXPECT_EQ(read_file_bytes(e.path()), read_file_bytes(dir / "out" / rel)) << rel;
  }
}

TEST_F(DegradeSequence, RepeatableAndReplayable) {
  DegradationConfig config;
  config.seed = 7;
  const auto a = degrade_sequence(dir / "seq", dir / "a", config, 1.0);
  const auto b = degrade_sequence(dir / "seq", dir / "b", config, 1.0);
  for (std::size_t i = 0; i < a.frames.size(); ++i) EXPECT_EQ(a.frames[i].checksum, b.frames[i].checksum);

  const auto parsed = manifest_from_jsonl(read_text_file(dir / "a" / kManifestName));
  EXPECT_EQ(manifest_to_jsonl(parsed), manifest_to_jsonl(a));
  const auto report = replay_manifest(dir / "seq", parsed, dir / "replay");
  EXPECT_EQ(report.frames_checked, 6u);
  EXPECT_TRUE(report.ok());
}

TEST_F(DegradeSequence, ReplayDetectsTampering) {
  DegradationConfig config;
  config.seed = 7;
  auto m = degrade_sequence(dir / "seq", dir / "a", config, 0.5);
  m.frames[1].checksum ^= 1;
  const auto report = replay_manifest(dir / "seq", m);
  ASSERT_EQ(report.mismatched_frames.size(), 1u);
  EXPECT_EQ(report.mismatched_frames[0], 2);
}

}  // namespace
}  // namespace semtrack
