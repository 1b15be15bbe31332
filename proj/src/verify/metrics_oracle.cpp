#include "semtrack/verify/metrics_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace semtrack::verify {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

using Id = std::int64_t;

struct Det {
  Id id;
  BoundingBox box;
};

struct Frame {
  std::vector<Det> gt;
  std::vector<Det> pred;
};

double overlap(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.left + a.width, b.left + b.width) - std::max(a.left, b.left));
  const double iy = std::max(0.0, std::min(a.top + a.height, b.top + b.height) - std::max(a.top, b.top));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.width * a.height + b.width * b.height - inter);
}

std::vector<Frame> frames_of(const TrackSet& gt, const TrackSet& pred) {
  std::map<std::int64_t, Frame> frames;
  for (const auto& [id, pts] : gt)
    for (const auto& [f, p] : pts) frames[f].gt.push_back({id, p.box});
  for (const auto& [id, pts] : pred)
    for (const auto& [f, p] : pts) frames[f].pred.push_back({id, p.box});
  std::vector<Frame> out;
  for (auto& [f, fr] : frames) out.push_back(std::move(fr));
  return out;
}

// Enumerates every partial matching of the frame (gt index -> pred index or
// -1) restricted to pairs accepted by `allowed`, and returns the one with the
// largest objective (first found on ties).
std::vector<int> best_matching(const Frame& fr, const std::function<bool(std::size_t, std::size_t)>& allowed,
                               const std::function<double(const std::vector<int>&)>& objective) {
  std::vector<int> current(fr.gt.size(), -1), best = current;
  std::vector<char> used(fr.pred.size(), 0);
  double best_value = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (i == fr.gt.size()) {
      const double v = objective(current);
      if (v > best_value) {
        best_value = v;
        best = current;
      }
      return;
    }
    current[i] = -1;
    visit(i + 1);
    for (std::size_t j = 0; j < fr.pred.size(); ++j) {
      if (used[j] || !allowed(i, j)) continue;
      used[j] = 1;
      current[i] = static_cast<int>(j);
      visit(i + 1);
      used[j] = 0;
      current[i] = -1;
    }
  };
  visit(0);
  return best;
}

}  // namespace

OracleHota oracle_hota(const TrackSet& gt, const TrackSet& pred) {
  const auto frames = frames_of(gt, pred);

  std::map<Id, double> gt_len, pred_len;
  long gt_total = 0, pred_total = 0;
  for (const auto& fr : frames) {
    for (const auto& d : fr.gt) gt_len[d.id] += 1.0, ++gt_total;
    for (const auto& d : fr.pred) pred_len[d.id] += 1.0, ++pred_total;
  }

  // Alignment between identities: Jaccard of the summed per-frame overlap
  // potentials, each normalised by the row and column overlap mass.
  std::map<std::pair<Id, Id>, double> potential;
  for (const auto& fr : frames) {
    for (std::size_t i = 0; i < fr.gt.size(); ++i) {
      for (std::size_t j = 0; j < fr.pred.size(); ++j) {
        double row = 0.0, col = 0.0;
        for (const auto& p : fr.pred) row += overlap(fr.gt[i].box, p.box);
        for (const auto& g : fr.gt) col += overlap(g.box, fr.pred[j].box);
        const double s = overlap(fr.gt[i].box, fr.pred[j].box);
        const double denom = row + col - s;
        if (denom > kEps) potential[{fr.gt[i].id, fr.pred[j].id}] += s / denom;
      }
    }
  }
  auto align = [&](Id g, Id t) {
    const auto it = potential.find({g, t});
    const double pm = it == potential.end() ? 0.0 : it->second;
    return pm / (gt_len[g] + pred_len[t] - pm);
  };

  struct Pair {
    Id g, t;
    double sim;
  };
  std::vector<Pair> assigned;
  for (const auto& fr : frames) {
    auto score = [&](std::size_t i, std::size_t j) {
      return align(fr.gt[i].id, fr.pred[j].id) * overlap(fr.gt[i].box, fr.pred[j].box);
    };
    const auto m = best_matching(
        fr, [&](std::size_t i, std::size_t j) { return score(i, j) > 0.0; },
        [&](const std::vector<int>& mm) {
          double v = 0.0;
          for (std::size_t i = 0; i < mm.size(); ++i)
            if (mm[i] >= 0) v += score(i, static_cast<std::size_t>(mm[i]));
          return v;
        });
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] < 0) continue;
      const auto& p = fr.pred[static_cast<std::size_t>(m[i])];
      assigned.push_back({fr.gt[i].id, p.id, overlap(fr.gt[i].box, p.box)});
    }
  }

  OracleHota out;
  const auto alphas = hota_alphas();
  for (std::size_t a = 0; a < kAlphaCount; ++a) {
    std::vector<Pair> tps;
    for (const auto& p : assigned)
      if (p.sim >= alphas[a] - kEps) tps.push_back(p);
    const double tp = static_cast<double>(tps.size());
    const double fn = static_cast<double>(gt_total) - tp;
    const double fp = static_cast<double>(pred_total) - tp;
    const double deta = tp / std::max(1.0, tp + fn + fp);
    double a_sum = 0.0;
    for (const auto& c : tps) {
      double tpa = 0.0;
      for (const auto& o : tps)
        if (o.g == c.g && o.t == c.t) tpa += 1.0;
      const double fna = gt_len[c.g] - tpa;
      const double fpa = pred_len[c.t] - tpa;
      a_sum += tpa / (tpa + fna + fpa);
    }
    const double assa = tps.empty() ? 0.0 : a_sum / tp;
    out.hota_alpha[a] = std::sqrt(deta * assa);
    out.hota += out.hota_alpha[a] / static_cast<double>(kAlphaCount);
    out.deta += deta / static_cast<double>(kAlphaCount);
    out.assa += assa / static_cast<double>(kAlphaCount);
  }
  return out;
}

OracleClear oracle_clear(const TrackSet& gt, const TrackSet& pred, double threshold) {
  const auto frames = frames_of(gt, pred);
  OracleClear out;
  long gt_total = 0;
  std::map<Id, Id> last_ever;      // gt -> last matched pred
  std::map<Id, Id> last_compared;  // matches of the last frame with both sides present
  for (const auto& fr : frames) {
    gt_total += static_cast<long>(fr.gt.size());
    if (fr.gt.empty() || fr.pred.empty()) {
      out.fn += static_cast<long>(fr.gt.size());
      out.fp += static_cast<long>(fr.pred.size());
      continue;
    }
    auto persists = [&](std::size_t i, std::size_t j) {
      const auto it = last_compared.find(fr.gt[i].id);
      return it != last_compared.end() && it->second == fr.pred[j].id;
    };
    const auto m = best_matching(
        fr, [&](std::size_t i, std::size_t j) { return overlap(fr.gt[i].box, fr.pred[j].box) >= threshold - kEps; },
        [&](const std::vector<int>& mm) {
          // Lexicographic (persisting pairs, total IoU); IoU sums stay below 1000.
          double kept = 0.0, total = 0.0;
          for (std::size_t i = 0; i < mm.size(); ++i) {
            if (mm[i] < 0) continue;
            const auto j = static_cast<std::size_t>(mm[i]);
            if (persists(i, j)) kept += 1.0;
            total += overlap(fr.gt[i].box, fr.pred[j].box);
          }
          return 1000.0 * kept + total;
        });
    last_compared.clear();
    long matched = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] < 0) continue;
      const Id g = fr.gt[i].id, t = fr.pred[static_cast<std::size_t>(m[i])].id;
      const auto it = last_ever.find(g);
      if (it != last_ever.end() && it->second != t) ++out.idsw;
      last_ever[g] = t;
      last_compared[g] = t;
      ++matched;
    }
    out.tp += matched;
    out.fn += static_cast<long>(fr.gt.size()) - matched;
    out.fp += static_cast<long>(fr.pred.size()) - matched;
  }
  out.mota = 1.0 - static_cast<double>(out.fn + out.fp + out.idsw) / static_cast<double>(gt_total);
  return out;
}

OracleIdentity oracle_identity(const TrackSet& gt, const TrackSet& pred, double threshold) {
  const auto frames = frames_of(gt, pred);
  std::vector<Id> gids, tids;
  for (const auto& [id, pts] : gt)
    if (!pts.empty()) gids.push_back(id);
  for (const auto& [id, pts] : pred)
    if (!pts.empty()) tids.push_back(id);
  double gt_total = 0.0, pred_total = 0.0;
  for (const auto& fr : frames) {
    gt_total += static_cast<double>(fr.gt.size());
    pred_total += static_cast<double>(fr.pred.size());
  }

  // Frames in which the two identities overlap by at least the threshold.
  auto shared = [&](Id g, Id t) {
    double n = 0.0;
    for (const auto& fr : frames)
      for (const auto& a : fr.gt)
        for (const auto& b : fr.pred)
          if (a.id == g && b.id == t && overlap(a.box, b.box) >= threshold - kEps) n += 1.0;
    return n;
  };

  double best = 0.0;
  std::vector<char> used(tids.size(), 0);
  std::function<void(std::size_t, double)> visit = [&](std::size_t i, double acc) {
    if (i == gids.size()) {
      best = std::max(best, acc);
      return;
    }
    visit(i + 1, acc);
    for (std::size_t j = 0; j < tids.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      visit(i + 1, acc + shared(gids[i], tids[j]));
      used[j] = 0;
    }
  };
  visit(0, 0.0);

  OracleIdentity out;
  out.idtp = best;
  const double idfn = gt_total - best, idfp = pred_total - best;
  const double denom = 2.0 * best + idfp + idfn;
  out.idf1 = denom > 0.0 ? 2.0 * best / denom : 0.0;
  return out;
}

}  // namespace semtrack::verify
