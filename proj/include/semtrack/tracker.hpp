#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semtrack/assignment.hpp"
#include "semtrack/embedder.hpp"
#include "semtrack/fusion.hpp"
#include "semtrack/mot_io.hpp"

namespace semtrack {

enum class QueryKind { Proposal, Track };

struct Query {
  QueryKind kind = QueryKind::Proposal;
  std::optional<std::int64_t> identity;
  std::vector<double> embedding;
  BoundingBox box;
  double score = 0.0;
  int age = 0;  // frames since the last confirmed match
};

struct TrackerConfig {
  double proposal_threshold = 0.05;
  double propagate_threshold = 0.5;
  double lambda = 0.5;  // weight of IoU against embedding similarity
  int max_age = 10;
  double match_floor = 0.3;
  double momentum = 0.9;
  std::size_t query_capacity = 32;
  std::uint64_t seed = 0;  // fusion parameter initialisation

  void validate() const;
};

std::vector<Query> make_proposals(const std::vector<DetectionRecord>& detections, const Tensor& features,
                                  int image_height, int image_width, const TrackerConfig& cfg);

std::vector<Query> propagate_tracks(const std::vector<Query>& tracks, const TrackerConfig& cfg);

struct AssociationResult {
  Assignment assignment;         // rows: tracks, columns: proposals
  std::vector<double> scores;    // tracks x proposals, row-major
  std::vector<Query> tracks;     // updated tracks followed by newborn tracks
  std::vector<std::size_t> matched_tracks;  // indices into `tracks`
  std::size_t births = 0;
};

// Fused track embeddings: the rows of F_fq belonging to `tracks`, computed
// with tracks and proposals stacked as the query matrix.
std::vector<std::vector<double>> fused_track_embeddings(const std::vector<Query>& tracks,
                                                        const std::vector<Query>& proposals, const Tensor& features,
                                                        const FusionParams& fusion, std::size_t capacity);

// `next_identity` is advanced for every newborn track. `fusion` may be null
// when cfg.lambda == 1.
AssociationResult associate(const std::vector<Query>& tracks, const std::vector<Query>& proposals,
                            const Tensor& features, const FusionParams* fusion, const TrackerConfig& cfg,
                            std::int64_t& next_identity);

struct FrameLog {
  std::int64_t frame = 0;
  std::size_t proposals = 0;
  std::size_t matches = 0;
  std::size_t births = 0;
  std::size_t deaths = 0;
  std::size_t tracks = 0;
  std::size_t emitted = 0;
};

std::string frame_log_json(const FrameLog& log);

struct TrackingResult {
  std::vector<DetectionRecord> records;
  std::vector<FrameLog> log;
};

FusionDims tracker_fusion_dims(const FrameEmbedder& embedder, const TrackerConfig& cfg);

// Frame-by-frame loop: embed, make proposals, associate, propagate, emit.
class Tracker {
 public:
  Tracker(const FrameEmbedder& embedder, TrackerConfig cfg);

  // Returns the records reported for this frame.
  std::vector<DetectionRecord> step(std::int64_t frame, const ImageBuffer& img,
                                    const std::vector<DetectionRecord>& detections, FrameLog* log = nullptr);

  const std::vector<Query>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  const FrameEmbedder& embedder_;
  TrackerConfig cfg_;
  std::optional<FusionParams> fusion_;
  std::vector<Query> tracks_;
  std::int64_t next_identity_ = 1;
};

TrackingResult run_sequence(const Sequence& seq, const std::vector<DetectionRecord>& detections,
                            const FrameEmbedder& embedder, const TrackerConfig& cfg);

}  // namespace semtrack
