#include "semtrack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "semtrack/metrics.hpp"

namespace semtrack {

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void TrackerConfig::validate() const {
  if (!in_unit(proposal_threshold)) throw ValidationError("proposal threshold must be in [0, 1]");
  if (!in_unit(propagate_threshold)) throw ValidationError("propagate threshold must be in [0, 1]");
  if (!in_unit(lambda)) throw ValidationError("lambda must be in [0, 1]");
  if (!in_unit(match_floor)) throw ValidationError("match floor must be in [0, 1]");
  if (!in_unit(momentum)) throw ValidationError("momentum must be in [0, 1]");
  if (max_age < 0) throw ValidationError("max age must be non-negative");
  if (query_capacity == 0) throw ValidationError("query capacity must be positive");
}

std::vector<Query> make_proposals(const std::vector<DetectionRecord>& detections, const Tensor& features,
                                  int image_height, int image_width, const TrackerConfig& cfg) {
  std::vector<Query> out;
  for (const auto& d : detections) {
    if (!(d.confidence > cfg.proposal_threshold)) continue;
    Query q;
    q.kind = QueryKind::Proposal;
    q.box = d.box;
    q.score = d.confidence;
    q.embedding = pool_box(features, d.box, image_height, image_width);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Query> propagate_tracks(const std::vector<Query>& tracks, const TrackerConfig& cfg) {
  std::vector<Query> out;
  for (const auto& t : tracks)
    if (t.score > cfg.propagate_threshold || t.age <= cfg.max_age) out.push_back(t);
  return out;
}

std::vector<std::vector<double>> fused_track_embeddings(const std::vector<Query>& tracks,
                                                        const std::vector<Query>& proposals, const Tensor& features,
                                                        const FusionParams& fusion, std::size_t capacity) {
  const std::size_t dim = fusion.vsfm.query_projection.in_features();
  std::vector<const Query*> stacked;
  for (const auto& t : tracks) stacked.push_back(&t);
  for (const auto& p : proposals) stacked.push_back(&p);

  std::vector<std::vector<double>> out;
  out.reserve(tracks.size());
  for (std::size_t start = 0; start < tracks.size(); start += capacity) {
    Tensor x_q({capacity, dim});
    const std::size_t rows = std::min(capacity, stacked.size() - start);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& e = stacked[start + r]->embedding;
      if (e.size() != dim) throw ShapeError("query embedding width does not match the fusion query width");
      for (std::size_t c = 0; c < dim; ++c) x_q.at(r, c) = e[c];
    }
    const auto f_fq = fuse_queries(x_q, features, fusion);
    const std::size_t track_rows = std::min(capacity, tracks.size() - start);
    for (std::size_t r = 0; r < track_rows; ++r) {
      std::vector<double> row(dim);
      for (std::size_t c = 0; c < dim; ++c) row[c] = f_fq.at(r, c);
      out.push_back(std::move(row));
    }
  }
  return out;
}

AssociationResult associate(const std::vector<Query>& tracks, const std::vector<Query>& proposals,
                            const Tensor& features, const FusionParams* fusion, const TrackerConfig& cfg,
                            std::int64_t& next_identity) {
  const std::size_t n = tracks.size(), m = proposals.size();
  AssociationResult res;
  res.scores.assign(n * m, 0.0);

  std::vector<std::vector<double>> fused;
  const bool use_embeddings = cfg.lambda < 1.0 && n > 0 && m > 0;
  if (use_embeddings) {
    if (fusion == nullptr) throw ValidationError("embedding association needs fusion parameters");
    fused = fused_track_embeddings(tracks, proposals, features, *fusion, cfg.query_capacity);
  }

  CostMatrix cost(n, m, kForbidden);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = cfg.lambda * iou(tracks[i].box, proposals[j].box);
      if (use_embeddings) s += (1.0 - cfg.lambda) * cosine(fused[i], proposals[j].embedding);
      res.scores[i * m + j] = s;
      if (s >= cfg.match_floor) cost(i, j) = 1.0 - s;
    }
  }
  res.assignment = hungarian(cost);

  std::vector<char> proposal_used(m, 0);
  res.tracks.reserve(n + m);
  for (std::size_t i = 0; i < n; ++i) {
    Query t = tracks[i];
    const int j = res.assignment.row_to_col[i];
    if (j >= 0) {
      const auto& p = proposals[static_cast<std::size_t>(j)];
      proposal_used[static_cast<std::size_t>(j)] = 1;
      for (std::size_t c = 0; c < t.embedding.size() && c < p.embedding.size(); ++c) {
        t.embedding[c] = cfg.momentum * t.embedding[c] + (1.0 - cfg.momentum) * p.embedding[c];
      }
      t.box = p.box;
      t.score = p.score;
      t.age = 0;
      res.matched_tracks.push_back(i);
    } else {
      t.age += 1;
      t.score = 0.0;
    }
    res.tracks.push_back(std::move(t));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (proposal_used[j]) continue;
    Query t = proposals[j];
    t.kind = QueryKind::Track;
    t.identity = next_identity++;
    t.age = 0;
    res.matched_tracks.push_back(res.tracks.size());
    res.tracks.push_back(std::move(t));
    ++res.births;
  }
  return res;
}

std::string frame_log_json(const FrameLog& log) {
  nlohmann::ordered_json j;
  j["frame"] = log.frame;
  j["proposals"] = log.proposals;
  j["matches"] = log.matches;
  j["births"] = log.births;
  j["deaths"] = log.deaths;
  j["tracks"] = log.tracks;
  j["emitted"] = log.emitted;
  return j.dump();
}

FusionDims tracker_fusion_dims(const FrameEmbedder& embedder, const TrackerConfig& cfg) {
  FusionDims dims;
  dims.channels = embedder.channels();
  dims.height = embedder.grid_height();
  dims.width = embedder.grid_width();
  dims.queries = cfg.query_capacity;
  dims.query_dim = embedder.channels();
  dims.heads = embedder.channels() % 4 == 0 ? 4 : 1;
  return dims;
}

Tracker::Tracker(const FrameEmbedder& embedder, TrackerConfig cfg) : embedder_(embedder), cfg_(cfg) {
  cfg_.validate();
  if (cfg_.lambda < 1.0) {
    RngStream rng(derive_key({cfg_.seed, 0x66757369ULL}));
    fusion_ = init_fusion_params(tracker_fusion_dims(embedder_, cfg_), rng);
  }
}

std::vector<DetectionRecord> Tracker::step(std::int64_t frame, const ImageBuffer& img,
                                           const std::vector<DetectionRecord>& detections, FrameLog* log) {
  const Tensor features = embedder_.embed(img);
  const auto proposals = make_proposals(detections, features, img.height(), img.width(), cfg_);
  auto assoc = associate(tracks_, proposals, features, fusion_ ? &*fusion_ : nullptr, cfg_, next_identity_);

  std::vector<DetectionRecord> emitted;
  for (auto idx : assoc.matched_tracks) {
    const auto& t = assoc.tracks[idx];
    if (!(t.score > cfg_.propagate_threshold)) continue;
    DetectionRecord r;
    r.frame = frame;
    r.identity = t.identity;
    r.box = t.box;
    r.confidence = t.score;
    emitted.push_back(r);
  }
  std::sort(emitted.begin(), emitted.end(),
            [](const DetectionRecord& a, const DetectionRecord& b) { return *a.identity < *b.identity; });

  const std::size_t before = assoc.tracks.size();
  tracks_ = propagate_tracks(assoc.tracks, cfg_);
  if (log != nullptr) {
    log->frame = frame;
    log->proposals = proposals.size();
    log->matches = assoc.assignment.pairs;
    log->births = assoc.births;
    log->deaths = before - tracks_.size();
    log->tracks = tracks_.size();
    log->emitted = emitted.size();
  }
  return emitted;
}

TrackingResult run_sequence(const Sequence& seq, const std::vector<DetectionRecord>& detections,
                            const FrameEmbedder& embedder, const TrackerConfig& cfg) {
  const auto by_frame = group_by_frame(detections);
  for (const auto& [frame, recs] : by_frame) {
    if (frame > static_cast<std::int64_t>(seq.frames.size())) {
      throw ValidationError("detection frame " + std::to_string(frame) + " is beyond the sequence length " +
                            std::to_string(seq.frames.size()));
    }
  }
  Tracker tracker(embedder, cfg);
  TrackingResult result;
  static const std::vector<DetectionRecord> kNone;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto frame = static_cast<std::int64_t>(i + 1);
    const auto it = by_frame.find(frame);
    FrameLog log;
    auto out = tracker.step(frame, read_image(seq.frames[i]), it == by_frame.end() ? kNone : it->second, &log);
    result.records.insert(result.records.end(), out.begin(), out.end());
    result.log.push_back(log);
  }
  return result;
}

}  // namespace semtrack
