#include "semtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "json.hpp"
#include "semtrack/assignment.hpp"

namespace semtrack {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct FrameData {
  std::int64_t frame = 0;
  std::vector<std::size_t> gt;    // dense gt indices, ascending identity
  std::vector<std::size_t> pred;  // dense pred indices
  std::vector<double> sim;        // gt.size() x pred.size()

  double at(std::size_t i, std::size_t j) const { return sim[i * pred.size() + j]; }
};

struct Dense {
  std::vector<std::int64_t> gt_ids;
  std::vector<std::int64_t> pred_ids;
  std::vector<FrameData> frames;
  std::int64_t gt_dets = 0;
  std::int64_t pred_dets = 0;
};

Dense densify(const TrackSet& gt, const TrackSet& pred) {
  Dense d;
  std::set<std::int64_t> frames;
  for (const auto& [id, points] : gt) {
    if (points.empty()) continue;
    d.gt_ids.push_back(id);
    for (const auto& [f, p] : points) frames.insert(f);
  }
  for (const auto& [id, points] : pred) {
    if (points.empty()) continue;
    d.pred_ids.push_back(id);
    for (const auto& [f, p] : points) frames.insert(f);
  }
  std::map<std::int64_t, std::size_t> slot;
  for (auto f : frames) {
    slot[f] = d.frames.size();
    d.frames.push_back(FrameData{f, {}, {}, {}});
  }
  std::vector<std::vector<BoundingBox>> gt_boxes(d.frames.size()), pred_boxes(d.frames.size());
  for (std::size_t g = 0; g < d.gt_ids.size(); ++g) {
    for (const auto& [f, p] : gt.at(d.gt_ids[g])) {
      auto s = slot[f];
      d.frames[s].gt.push_back(g);
      gt_boxes[s].push_back(p.box);
      ++d.gt_dets;
    }
  }
  for (std::size_t t = 0; t < d.pred_ids.size(); ++t) {
    for (const auto& [f, p] : pred.at(d.pred_ids[t])) {
      auto s = slot[f];
      d.frames[s].pred.push_back(t);
      pred_boxes[s].push_back(p.box);
      ++d.pred_dets;
    }
  }
  for (std::size_t s = 0; s < d.frames.size(); ++s) {
    auto& fr = d.frames[s];
    fr.sim.resize(fr.gt.size() * fr.pred.size());
    for (std::size_t i = 0; i < fr.gt.size(); ++i)
      for (std::size_t j = 0; j < fr.pred.size(); ++j) fr.sim[i * fr.pred.size() + j] = iou(gt_boxes[s][i], pred_boxes[s][j]);
  }
  return d;
}

// Global alignment score between every gt and pred identity.
std::vector<double> alignment_scores(const Dense& d) {
  const auto ng = d.gt_ids.size(), nt = d.pred_ids.size();
  std::vector<double> potential(ng * nt, 0.0);
  std::vector<double> gt_count(ng, 0.0), pred_count(nt, 0.0);
  for (const auto& fr : d.frames) {
    const auto n = fr.gt.size(), m = fr.pred.size();
    for (auto g : fr.gt) gt_count[g] += 1.0;
    for (auto t : fr.pred) pred_count[t] += 1.0;
    if (n == 0 || m == 0) continue;
    std::vector<double> row(n, 0.0), col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        row[i] += fr.at(i, j);
        col[j] += fr.at(i, j);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double denom = row[i] + col[j] - fr.at(i, j);
        if (denom > kEps) potential[fr.gt[i] * nt + fr.pred[j]] += fr.at(i, j) / denom;
      }
  }
  std::vector<double> align(ng * nt, 0.0);
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t t = 0; t < nt; ++t) {
      const double pm = potential[g * nt + t];
      align[g * nt + t] = pm / (gt_count[g] + pred_count[t] - pm);
    }
  return align;
}

// One maximising assignment per frame; returns row_to_col per frame.
std::vector<std::vector<int>> hota_assignments(const Dense& d) {
  const auto align = alignment_scores(d);
  const auto nt = d.pred_ids.size();
  std::vector<std::vector<int>> out;
  out.reserve(d.frames.size());
  for (const auto& fr : d.frames) {
    const auto n = fr.gt.size(), m = fr.pred.size();
    CostMatrix cost(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) cost(i, j) = -(align[fr.gt[i] * nt + fr.pred[j]] * fr.at(i, j));
    out.push_back(hungarian(cost).row_to_col);
  }
  return out;
}

void require_gt(const Dense& d) {
  if (d.gt_dets == 0) throw UndefinedMetricError("metric undefined: ground truth is empty");
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::array<double, kAlphaCount> hota_alphas() {
  std::array<double, kAlphaCount> a{};
  for (std::size_t k = 0; k < kAlphaCount; ++k) a[k] = static_cast<double>(k + 1) / 20.0;
  return a;
}

MatchResult match_frames(const TrackSet& gt, const TrackSet& pred, double alpha) {
  const auto d = densify(gt, pred);
  const auto assignments = hota_assignments(d);
  MatchResult result;
  for (std::size_t s = 0; s < d.frames.size(); ++s) {
    const auto& fr = d.frames[s];
    FrameMatch fm;
    fm.frame = fr.frame;
    std::vector<char> pred_used(fr.pred.size(), 0);
    for (std::size_t i = 0; i < fr.gt.size(); ++i) {
      const int j = assignments[s][i];
      if (j >= 0 && fr.at(i, static_cast<std::size_t>(j)) >= alpha - kEps) {
        const auto ju = static_cast<std::size_t>(j);
        fm.matched.push_back({d.gt_ids[fr.gt[i]], d.pred_ids[fr.pred[ju]], fr.at(i, ju)});
        pred_used[ju] = 1;
      } else {
        fm.unmatched_gt.push_back(d.gt_ids[fr.gt[i]]);
      }
    }
    for (std::size_t j = 0; j < fr.pred.size(); ++j)
      if (!pred_used[j]) fm.unmatched_pred.push_back(d.pred_ids[fr.pred[j]]);
    result.frames.push_back(std::move(fm));
  }
  return result;
}

HotaScores hota(const TrackSet& gt, const TrackSet& pred) {
  const auto d = densify(gt, pred);
  require_gt(d);
  const auto alphas = hota_alphas();
  const auto assignments = hota_assignments(d);
  const auto ng = d.gt_ids.size(), nt = d.pred_ids.size();

  std::vector<double> gt_count(ng, 0.0), pred_count(nt, 0.0);
  for (const auto& fr : d.frames) {
    for (auto g : fr.gt) gt_count[g] += 1.0;
    for (auto t : fr.pred) pred_count[t] += 1.0;
  }

  HotaScores out;
  std::array<double, kAlphaCount> loca_alpha{};
  for (std::size_t a = 0; a < kAlphaCount; ++a) {
    std::vector<double> matches(ng * nt, 0.0);
    std::int64_t tp = 0;
    double loc = 0.0;
    for (std::size_t s = 0; s < d.frames.size(); ++s) {
      const auto& fr = d.frames[s];
      for (std::size_t i = 0; i < fr.gt.size(); ++i) {
        const int j = assignments[s][i];
        if (j < 0) continue;
        const double sim = fr.at(i, static_cast<std::size_t>(j));
        if (sim < alphas[a] - kEps) continue;
        matches[fr.gt[i] * nt + fr.pred[static_cast<std::size_t>(j)]] += 1.0;
        loc += sim;
        ++tp;
      }
    }
    const std::int64_t fn = d.gt_dets - tp;
    const std::int64_t fp = d.pred_dets - tp;
    double ass_sum = 0.0;
    for (std::size_t g = 0; g < ng; ++g)
      for (std::size_t t = 0; t < nt; ++t) {
        const double c = matches[g * nt + t];
        if (c == 0.0) continue;
        ass_sum += c * (c / std::max(1.0, gt_count[g] + pred_count[t] - c));
      }
    const double deta = static_cast<double>(tp) / std::max<double>(1.0, static_cast<double>(tp + fn + fp));
    const double assa = ass_sum / std::max<double>(1.0, static_cast<double>(tp));
    out.tp[a] = tp;
    out.fn[a] = fn;
    out.fp[a] = fp;
    out.deta_alpha[a] = deta;
    out.assa_alpha[a] = assa;
    out.hota_alpha[a] = std::sqrt(deta * assa);
    loca_alpha[a] = tp > 0 ? loc / static_cast<double>(tp) : 1.0;
  }
  for (std::size_t a = 0; a < kAlphaCount; ++a) {
    out.hota += out.hota_alpha[a];
    out.deta += out.deta_alpha[a];
    out.assa += out.assa_alpha[a];
    out.loca += loca_alpha[a];
  }
  const auto k = static_cast<double>(kAlphaCount);
  out.hota /= k;
  out.deta /= k;
  out.assa /= k;
  out.loca /= k;
  return out;
}

ClearScores mota(const TrackSet& gt, const TrackSet& pred, double iou_threshold) {
  const auto d = densify(gt, pred);
  require_gt(d);
  const auto ng = d.gt_ids.size();
  constexpr int kNone = -1;
  std::vector<int> last_match(ng, kNone);      // most recent pred ever matched
  std::vector<int> previous_step(ng, kNone);   // pred matched at the last compared frame

  ClearScores out;
  out.gt = d.gt_dets;
  for (const auto& fr : d.frames) {
    const auto n = fr.gt.size(), m = fr.pred.size();
    // Frames with one side empty leave the persistence state untouched.
    if (n == 0) {
      out.fp += static_cast<std::int64_t>(m);
      continue;
    }
    if (m == 0) {
      out.fn += static_cast<std::int64_t>(n);
      continue;
    }
    CostMatrix cost(n, m);
    std::vector<double> score(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double sim = fr.at(i, j);
        if (sim < iou_threshold - kEps) continue;
        const bool persists = previous_step[fr.gt[i]] == static_cast<int>(fr.pred[j]);
        score[i * m + j] = (persists ? 1000.0 : 0.0) + sim;
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) cost(i, j) = -score[i * m + j];
    const auto assignment = hungarian(cost);
    std::fill(previous_step.begin(), previous_step.end(), kNone);
    std::int64_t matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int j = assignment.row_to_col[i];
      if (j < 0 || !(score[i * m + static_cast<std::size_t>(j)] > kEps)) continue;
      const auto g = fr.gt[i];
      const int t = static_cast<int>(fr.pred[static_cast<std::size_t>(j)]);
      if (last_match[g] != kNone && last_match[g] != t) ++out.idsw;
      last_match[g] = t;
      previous_step[g] = t;
      ++matched;
    }
    out.tp += matched;
    out.fn += static_cast<std::int64_t>(n) - matched;
    out.fp += static_cast<std::int64_t>(m) - matched;
  }
  out.mota = 1.0 - static_cast<double>(out.fn + out.fp + out.idsw) / static_cast<double>(out.gt);
  return out;
}

IdentityScores idf1(const TrackSet& gt, const TrackSet& pred, double iou_threshold) {
  const auto d = densify(gt, pred);
  if (d.gt_dets == 0 && d.pred_dets == 0) throw UndefinedMetricError("IDF1 undefined: both track sets are empty");
  const auto ng = d.gt_ids.size(), nt = d.pred_ids.size();
  std::vector<double> potential(ng * nt, 0.0);
  for (const auto& fr : d.frames)
    for (std::size_t i = 0; i < fr.gt.size(); ++i)
      for (std::size_t j = 0; j < fr.pred.size(); ++j)
        if (fr.at(i, j) >= iou_threshold - kEps) potential[fr.gt[i] * nt + fr.pred[j]] += 1.0;

  CostMatrix cost(ng, nt);
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t t = 0; t < nt; ++t) cost(g, t) = -potential[g * nt + t];
  const auto assignment = hungarian(cost);

  IdentityScores out;
  for (std::size_t g = 0; g < ng; ++g) {
    const int t = assignment.row_to_col[g];
    if (t >= 0) out.idtp += potential[g * nt + static_cast<std::size_t>(t)];
  }
  out.idfn = static_cast<double>(d.gt_dets) - out.idtp;
  out.idfp = static_cast<double>(d.pred_dets) - out.idtp;
  out.idf1 = out.idtp / std::max(1.0, out.idtp + 0.5 * out.idfp + 0.5 * out.idfn);
  return out;
}

MetricsReport evaluate(const TrackSet& gt, const TrackSet& pred) {
  MetricsReport r;
  r.hota_detail = hota(gt, pred);
  r.clear = mota(gt, pred);
  r.identity = idf1(gt, pred);
  r.hota = 100.0 * r.hota_detail.hota;
  r.deta = 100.0 * r.hota_detail.deta;
  r.assa = 100.0 * r.hota_detail.assa;
  r.mota = 100.0 * r.clear.mota;
  r.idf1 = 100.0 * r.identity.idf1;
  return r;
}

std::string format_report(const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "HOTA %.1f DetA %.1f AssA %.1f MOTA %.1f IDF1 %.1f", r.hota, r.deta, r.assa, r.mota,
                r.idf1);
  return buf;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["HOTA"] = r.hota;
  j["DetA"] = r.deta;
  j["AssA"] = r.assa;
  j["MOTA"] = r.mota;
  j["IDF1"] = r.idf1;
  j["LocA"] = 100.0 * r.hota_detail.loca;
  j["clear"] = {{"TP", r.clear.tp}, {"FP", r.clear.fp}, {"FN", r.clear.fn}, {"IDSW", r.clear.idsw}, {"GT", r.clear.gt}};
  j["identity"] = {{"IDTP", r.identity.idtp}, {"IDFP", r.identity.idfp}, {"IDFN", r.identity.idfn}};
  auto curve = nlohmann::ordered_json::array();
  const auto alphas = hota_alphas();
  for (std::size_t a = 0; a < kAlphaCount; ++a) {
    curve.push_back({{"alpha", alphas[a]},
                     {"HOTA", 100.0 * r.hota_detail.hota_alpha[a]},
                     {"DetA", 100.0 * r.hota_detail.deta_alpha[a]},
                     {"AssA", 100.0 * r.hota_detail.assa_alpha[a]},
                     {"TP", r.hota_detail.tp[a]},
                     {"FN", r.hota_detail.fn[a]},
                     {"FP", r.hota_detail.fp[a]}});
  }
  j["per_alpha"] = std::move(curve);
  return j.dump();
}

}  // namespace semtrack
