#include <gtest/gtest.h>

#include <set>

#include "semtrack/metrics.hpp"
#include "semtrack/synth.hpp"
#include "semtrack/tracker.hpp"
#include "test_util.hpp"

namespace semtrack {
namespace {

Query track_query(std::int64_t id, BoundingBox box, double score, int age = 0) {
  Query q;
  q.kind = QueryKind::Track;
  q.identity = id;
  q.box = box;
  q.score = score;
  q.age = age;
  q.embedding.assign(16, 1.0);
  return q;
}

Query proposal(BoundingBox box, std::vector<double> embedding = std::vector<double>(16, 1.0)) {
  Query q;
  q.box = box;
  q.score = 1.0;
  q.embedding = std::move(embedding);
  return q;
}

DetectionRecord det(BoundingBox box, double confidence, std::int64_t frame = 1) {
  return {frame, std::nullopt, box, confidence};
}

TrackerConfig iou_only() {
  TrackerConfig cfg;
  cfg.lambda = 1.0;
  return cfg;
}

const Tensor kFeatures({16, 14, 14}, 0.5);

TEST(Proposals, StrictConfidenceThreshold) {
  const TrackerConfig cfg;
  const auto p = make_proposals({det({0, 0, 10, 10}, 0.04), det({20, 0, 10, 10}, 0.05), det({40, 0, 10, 10}, 0.9)},
                                kFeatures, 100, 100, cfg);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].box.left, 40.0);
  EXPECT_EQ(p[0].kind, QueryKind::Proposal);
  EXPECT_FALSE(p[0].identity.has_value());
  EXPECT_EQ(p[0].embedding.size(), 16u);
}

TEST(Proposals, EmptyAndAllConfident) {
  const TrackerConfig cfg;
  EXPECT_TRUE(make_proposals({}, kFeatures, 100, 100, cfg).empty());
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 5; ++i) dets.push_back(det({10.0 * i, 0, 8, 8}, 1.0));
  EXPECT_EQ(make_proposals(dets, kFeatures, 100, 100, cfg).size(), 5u);
}

TEST(Propagate, ScoreOrAgeKeepsQueries) {
  TrackerConfig cfg;
  cfg.max_age = 0;
  const auto kept = propagate_tracks({track_query(1, {}, 0.6), track_query(2, {}, 0.4, 1)}, cfg);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].identity, 1);

  cfg.max_age = 10;
  EXPECT_EQ(propagate_tracks({track_query(3, {}, 0.4, 3)}, cfg).size(), 1u);
  EXPECT_TRUE(propagate_tracks({}, cfg).empty());
}

TEST(Associate, IdenticalBoxesMatchRegardlessOfEmbeddings) {
  std::int64_t next = 2;
  std::vector<double> other(16, 0.0);
  other[0] = -1.0;
  const auto r = associate({track_query(1, {0, 0, 10, 10}, 1.0)}, {proposal({0, 0, 10, 10}, other)}, kFeatures,
                           nullptr, iou_only(), next);
  EXPECT_EQ(r.assignment.row_to_col, (std::vector<int>{0}));
  EXPECT_EQ(r.births, 0u);
  EXPECT_EQ(next, 2);
}

TEST(Associate, DisjointBoxesSpawnNewIdentity) {
  std::int64_t next = 2;
  const auto r = associate({track_query(1, {0, 0, 10, 10}, 1.0)}, {proposal({50, 50, 10, 10})}, kFeatures, nullptr,
                           iou_only(), next);
  EXPECT_EQ(r.assignment.row_to_col, (std::vector<int>{-1}));
  EXPECT_EQ(r.births, 1u);
  ASSERT_EQ(r.tracks.size(), 2u);
  EXPECT_EQ(r.tracks[1].identity, 2);
  EXPECT_EQ(r.tracks[0].age, 1);
  EXPECT_EQ(next, 3);
}

TEST(Associate, CrossedOverlapsGiveDiagonal) {
  // Horizontal shifts of a 10x10 box: IoU = (10 - d) / (10 + d).
  const double d = 10.0 / 19.0, e = 90.0 / 11.0;
  const std::vector<Query> tracks{track_query(1, {0, 0, 10, 10}, 1.0), track_query(2, {e + d, 0, 10, 10}, 1.0)};
  const std::vector<Query> props{proposal({d, 0, 10, 10}), proposal({e, 0, 10, 10})};
  std::int64_t next = 3;
  const auto r = associate(tracks, props, kFeatures, nullptr, iou_only(), next);
  ASSERT_EQ(r.scores.size(), 4u);
  EXPECT_NEAR(r.scores[0], 0.9, 1e-12);
  EXPECT_NEAR(r.scores[1], 0.1, 1e-12);
  EXPECT_NEAR(r.scores[2], 0.1, 1e-12);
  EXPECT_NEAR(r.scores[3], 0.9, 1e-12);
  EXPECT_EQ(r.assignment.row_to_col, (std::vector<int>{0, 1}));
}

TEST(Associate, MatchedTrackAdoptsBoxAndBlendsEmbedding) {
  std::int64_t next = 2;
  std::vector<double> e(16, 0.0);
  e[0] = 1.0;
  auto t = track_query(1, {0, 0, 10, 10}, 0.7, 2);
  const auto r = associate({t}, {proposal({1, 0, 10, 10}, e)}, kFeatures, nullptr, iou_only(), next);
  ASSERT_EQ(r.matched_tracks, (std::vector<std::size_t>{0}));
  const auto& u = r.tracks[0];
  EXPECT_EQ(u.box, (BoundingBox{1, 0, 10, 10}));
  EXPECT_EQ(u.score, 1.0);
  EXPECT_EQ(u.age, 0);
  EXPECT_NEAR(u.embedding[0], 0.9 * 1.0 + 0.1 * 1.0, 1e-15);
  EXPECT_NEAR(u.embedding[1], 0.9 * 1.0, 1e-15);
}

TEST(TrackerConfig, RejectsOutOfRange) {
  TrackerConfig c;
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.propagate_threshold = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.max_age = -1;
  EXPECT_THROW(c.validate(), ValidationError);
}

class SequenceRun : public ::testing::Test {
 protected:
  Sequence write(const SynthSequence& s) {
    write_synthetic(dir.path() / "seq", s);
    return load_sequence(dir.path() / "seq");
  }
  test::TempDir dir;
  DefaultEmbedder embedder;
};

TEST_F(SequenceRun, StaticBoxKeepsOneIdentity) {
  SynthConfig c;
  c.frames = 10;
  c.objects = 1;
  c.speed = 0.0;
  const auto synth = make_synthetic(c);
  const auto seq = write(synth);
  const auto out = run_sequence(seq, detections_from_ground_truth(synth.ground_truth), embedder, {});
  ASSERT_EQ(out.records.size(), 10u);
  for (const auto& r : out.records) EXPECT_EQ(r.identity, 1);
  EXPECT_EQ(evaluate(records_to_trackset(synth.ground_truth), records_to_trackset(out.records)).mota, 100.0);
}

TEST_F(SequenceRun, IdentityResumesAfterMissingDetections) {
  SynthConfig c;
  c.frames = 10;
  c.objects = 1;
  c.speed = 0.0;
  const auto synth = make_synthetic(c);
  const auto seq = write(synth);
  auto dets = detections_from_ground_truth(synth.ground_truth);
  std::erase_if(dets, [](const DetectionRecord& d) { return d.frame == 5; });
  const auto out = run_sequence(seq, dets, embedder, {});
  std::set<std::int64_t> ids, frames;
  for (const auto& r : out.records) ids.insert(*r.identity), frames.insert(r.frame);
  EXPECT_EQ(ids, (std::set<std::int64_t>{1}));
  EXPECT_EQ(frames.count(5), 0u);
  EXPECT_EQ(frames.count(6), 1u);
}

TEST_F(SequenceRun, SwapFollowsAppearanceWithoutOverlapTerm) {
  const auto synth = make_swap_sequence(10);
  const auto seq = write(synth);
  TrackerConfig cfg;
  cfg.lambda = 0.0;
  const auto out = run_sequence(seq, detections_from_ground_truth(synth.ground_truth), embedder, cfg);
  const auto r = evaluate(records_to_trackset(synth.ground_truth), records_to_trackset(out.records));
  EXPECT_EQ(r.clear.idsw, 0);
  EXPECT_EQ(r.idf1, 100.0);
}

TEST_F(SequenceRun, PerfectDetectionsScorePerfectly) {
  const auto synth = make_synthetic({});
  const auto seq = write(synth);
  for (double lambda : {0.0, 0.5, 1.0}) {
    TrackerConfig cfg;
    cfg.lambda = lambda;
    const auto out = run_sequence(seq, detections_from_ground_truth(synth.ground_truth), embedder, cfg);
    const auto r = evaluate(records_to_trackset(synth.ground_truth), records_to_trackset(out.records));
    EXPECT_EQ(format_report(r), "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0") << lambda;
  }
}

TEST_F(SequenceRun, DeterministicConservativeAndThresholded) {
  SynthConfig c;
  c.frames = 8;
  const auto synth = make_synthetic(c);
  const auto seq = write(synth);
  auto dets = detections_from_ground_truth(synth.ground_truth);
  for (std::size_t i = 0; i < dets.size(); i += 4) dets[i].confidence = 0.05;
  const auto a = run_sequence(seq, dets, embedder, {});
  const auto b = run_sequence(seq, dets, embedder, {});
  EXPECT_EQ(write_mot_file(a.records), write_mot_file(b.records));
  for (const auto& r : a.records) {
    EXPECT_GT(r.confidence, 0.5);
    bool found = false;
    for (const auto& d : dets) found = found || (d.frame == r.frame && d.box == r.box && d.confidence > 0.05);
    EXPECT_TRUE(found) << r.frame;
  }
  ASSERT_EQ(a.log.size(), 8u);
}

TEST_F(SequenceRun, DetectionBeyondSequenceRejected) {
  SynthConfig c;
  c.frames = 3;
  const auto seq = write(make_synthetic(c));
  EXPECT_THROW(run_sequence(seq, {det({0, 0, 10, 10}, 1.0, 4)}, embedder, {}), ValidationError);
}

TEST(FrameLog, JsonHasCounts) {
  FrameLog log{3, 4, 2, 1, 0, 3, 2};
  const auto text = frame_log_json(log);
  for (const char* key : {"\"frame\":3", "\"proposals\":4", "\"matches\":2", "\"births\":1", "\"deaths\":0"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key << " in " << text;
  }
}

}  // namespace
}  // namespace semtrack
