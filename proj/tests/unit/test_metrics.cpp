#include <gtest/gtest.h>

#include <cmath>

#include "semtrack/metrics.hpp"
#include "semtrack/verify/metrics_oracle.hpp"
#include "semtrack/verify/scenarios.hpp"

namespace semtrack {
namespace {

TrackSet tracks(std::initializer_list<std::tuple<std::int64_t, std::int64_t, BoundingBox>> entries) {
  TrackSet t;
  for (const auto& [id, frame, box] : entries) t[id][frame] = {box, 1.0};
  return t;
}

const BoundingBox kA{0, 0, 10, 10};
const BoundingBox kB{50, 50, 10, 20};

// One object over two frames; the prediction changes identity in frame 2.
TrackSet switch_gt() { return tracks({{1, 1, kA}, {1, 2, kA}}); }
TrackSet switch_pred() { return tracks({{1, 1, kA}, {2, 2, kA}}); }

TEST(Iou, ClosedForms) {
  EXPECT_EQ(iou(kA, kA), 1.0);
  EXPECT_EQ(iou(kA, kB), 0.0);
  EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
}

TEST(MatchFrames, IdenticalSetsMatchEverywhere) {
  const auto gt = tracks({{1, 1, kA}, {2, 1, kB}, {1, 2, kA}});
  for (double alpha : hota_alphas()) {
    const auto m = match_frames(gt, gt, alpha);
    for (const auto& f : m.frames) {
      EXPECT_TRUE(f.unmatched_gt.empty());
      EXPECT_TRUE(f.unmatched_pred.empty());
    }
  }
}

TEST(MatchFrames, EmptyPredictionLeavesGtUnmatched) {
  const auto m = match_frames(tracks({{1, 1, kA}, {2, 1, kB}}), {}, 0.5);
  ASSERT_EQ(m.frames.size(), 1u);
  EXPECT_TRUE(m.frames[0].matched.empty());
  EXPECT_EQ(m.frames[0].unmatched_gt.size(), 2u);
}

TEST(MatchFrames, HalfOverlapMatchedUpToHalf) {
  const auto gt = tracks({{1, 1, {0, 0, 10, 10}}});
  const auto pred = tracks({{1, 1, {0, 0, 10, 5}}});
  EXPECT_EQ(match_frames(gt, pred, 0.45).frames[0].matched.size(), 1u);
  EXPECT_EQ(match_frames(gt, pred, 0.5).frames[0].matched.size(), 1u);
  EXPECT_EQ(match_frames(gt, pred, 0.55).frames[0].matched.size(), 0u);
}

TEST(Mota, PerfectAndEmpty) {
  const auto gt = tracks({{1, 1, kA}, {2, 1, kB}, {1, 2, kA}});
  const auto perfect = mota(gt, gt);
  EXPECT_EQ(perfect.mota, 1.0);
  EXPECT_EQ(perfect.idsw, 0);
  const auto empty = mota(gt, {});
  EXPECT_EQ(empty.mota, 0.0);
  EXPECT_EQ(empty.fn, 3);
}

TEST(Mota, IdentitySwitchCountsOnce) {
  const auto s = mota(switch_gt(), switch_pred());
  EXPECT_EQ(s.idsw, 1);
  EXPECT_EQ(s.gt, 2);
  EXPECT_DOUBLE_EQ(s.mota, 0.5);
}

TEST(Mota, CanBeNegative) {
  const auto s = mota(tracks({{1, 1, kA}}), tracks({{1, 1, kB}, {2, 1, {200, 0, 5, 5}}}));
  EXPECT_DOUBLE_EQ(s.mota, 1.0 - 3.0);
}

TEST(Mota, EmptyGroundTruthIsUndefined) { EXPECT_THROW(mota({}, tracks({{1, 1, kA}})), UndefinedMetricError); }

TEST(Idf1, SwitchScenario) {
  const auto s = idf1(switch_gt(), switch_pred());
  EXPECT_EQ(s.idtp, 1.0);
  EXPECT_EQ(s.idfp, 1.0);
  EXPECT_EQ(s.idfn, 1.0);
  EXPECT_DOUBLE_EQ(s.idf1, 0.5);
}

TEST(Idf1, PerfectAndEmpty) {
  const auto gt = tracks({{1, 1, kA}, {2, 1, kB}});
  EXPECT_EQ(idf1(gt, gt).idf1, 1.0);
  EXPECT_EQ(idf1(gt, {}).idf1, 0.0);
}

TEST(Hota, PerfectPrediction) {
  const auto gt = tracks({{1, 1, kA}, {2, 1, kB}, {1, 2, kA}, {2, 3, kB}});
  const auto h = hota(gt, gt);
  EXPECT_NEAR(h.hota, 1.0, 1e-12);
  EXPECT_NEAR(h.deta, 1.0, 1e-12);
  EXPECT_NEAR(h.assa, 1.0, 1e-12);
}

TEST(Hota, HalfOverlapClosedCase) {
  const auto h = hota(tracks({{1, 1, {0, 0, 10, 10}}}), tracks({{1, 1, {0, 0, 10, 5}}}));
  EXPECT_NEAR(100.0 * h.hota, 100.0 * 10.0 / 19.0, 1e-9);
  for (std::size_t a = 0; a < kAlphaCount; ++a) EXPECT_EQ(h.hota_alpha[a], a < 10 ? 1.0 : 0.0) << a;
}

TEST(Hota, MeanOfPerAlphaGeometricMeans) {
  RngStream rng(derive_key({0x696e76ULL}));
  for (int i = 0; i < 50; ++i) {
    const auto s = verify::random_scenario(rng);
    const auto h = hota(s.gt, s.pred);
    double mean = 0.0;
    for (std::size_t a = 0; a < kAlphaCount; ++a) {
      EXPECT_NEAR(h.hota_alpha[a], std::sqrt(h.deta_alpha[a] * h.assa_alpha[a]), 1e-15);
      mean += h.hota_alpha[a] / kAlphaCount;
    }
    EXPECT_NEAR(h.hota, mean, 1e-12);
  }
}

TEST(Metrics, AgreeWithExhaustiveOracles) {
  RngStream rng(derive_key({0x6f7261636c65ULL, 1}));
  for (int i = 0; i < 60; ++i) {
    const auto s = verify::random_scenario(rng);
    const auto h = hota(s.gt, s.pred);
    const auto oh = verify::oracle_hota(s.gt, s.pred);
    EXPECT_NEAR(h.hota, oh.hota, 1e-9) << i;
    EXPECT_NEAR(h.deta, oh.deta, 1e-9) << i;
    EXPECT_NEAR(h.assa, oh.assa, 1e-9) << i;
    const auto c = mota(s.gt, s.pred);
    const auto oc = verify::oracle_clear(s.gt, s.pred, 0.5);
    EXPECT_NEAR(c.mota, oc.mota, 1e-9) << i;
    EXPECT_EQ(c.idsw, oc.idsw) << i;
    if (s.pred.empty() && s.gt.empty()) continue;
    EXPECT_NEAR(idf1(s.gt, s.pred).idf1, verify::oracle_identity(s.gt, s.pred, 0.5).idf1, 1e-9) << i;
  }
}

TEST(Evaluate, PerfectReportText) {
  const auto gt = tracks({{1, 1, kA}, {2, 2, kB}});
  EXPECT_EQ(format_report(evaluate(gt, gt)), "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0");
}

TEST(Evaluate, SwitchScenarioColumns) {
  const auto r = evaluate(switch_gt(), switch_pred());
  EXPECT_DOUBLE_EQ(r.mota, 50.0);
  EXPECT_DOUBLE_EQ(r.idf1, 50.0);
}

TEST(Evaluate, JsonCarriesColumnsAndCurve) {
  const auto text = report_to_json(evaluate(switch_gt(), switch_pred()));
  for (const char* key : {"\"HOTA\"", "\"MOTA\"", "\"IDF1\"", "\"per_alpha\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace semtrack
