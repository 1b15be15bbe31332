#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semtrack/error.hpp"
#include "semtrack/mot_io.hpp"

namespace semtrack {

// A metric whose denominator is zero (no ground truth, or nothing at all).
class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

double iou(const BoundingBox& a, const BoundingBox& b);

inline constexpr std::size_t kAlphaCount = 19;

// 0.05, 0.10, ..., 0.95
std::array<double, kAlphaCount> hota_alphas();

struct MatchedPair {
  std::int64_t gt_identity = 0;
  std::int64_t pred_identity = 0;
  double iou = 0.0;
};

struct FrameMatch {
  std::int64_t frame = 0;
  std::vector<MatchedPair> matched;
  std::vector<std::int64_t> unmatched_gt;
  std::vector<std::int64_t> unmatched_pred;
};

struct MatchResult {
  std::vector<FrameMatch> frames;  // ascending over the union of frames
};

// HOTA matching: per frame, one assignment maximising
// alignment(gt, pred) * IoU, where alignment is the global Jaccard of the two
// identities' per-frame overlap potential. Pairs with IoU below alpha are then
// dropped from the assignment.
MatchResult match_frames(const TrackSet& gt, const TrackSet& pred, double alpha);

// All fields on the 0..1 scale.
struct HotaScores {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double loca = 0.0;
  std::array<double, kAlphaCount> hota_alpha{};
  std::array<double, kAlphaCount> deta_alpha{};
  std::array<double, kAlphaCount> assa_alpha{};
  std::array<std::int64_t, kAlphaCount> tp{};
  std::array<std::int64_t, kAlphaCount> fn{};
  std::array<std::int64_t, kAlphaCount> fp{};
};

struct ClearScores {
  double mota = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t idsw = 0;
  std::int64_t gt = 0;
};

struct IdentityScores {
  double idf1 = 0.0;
  double idtp = 0.0;
  double idfp = 0.0;
  double idfn = 0.0;
};

HotaScores hota(const TrackSet& gt, const TrackSet& pred);
ClearScores mota(const TrackSet& gt, const TrackSet& pred, double iou_threshold = 0.5);
IdentityScores idf1(const TrackSet& gt, const TrackSet& pred, double iou_threshold = 0.5);

// Percentages, in the column order HOTA, DetA, AssA, MOTA, IDF1.
struct MetricsReport {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double mota = 0.0;
  double idf1 = 0.0;
  ClearScores clear;
  IdentityScores identity;
  HotaScores hota_detail;  // 0..1 scale
};

MetricsReport evaluate(const TrackSet& gt, const TrackSet& pred);

// "HOTA 100.0 DetA 100.0 AssA 100.0 MOTA 100.0 IDF1 100.0"
std::string format_report(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);

}  // namespace semtrack
