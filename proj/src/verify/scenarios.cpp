#include "semtrack/verify/scenarios.hpp"

#include <algorithm>
#include <numeric>

namespace semtrack::verify {

TrackScenario random_scenario(RngStream& rng) {
  TrackScenario s;
  const auto frames = rng.uniform_int(1, 5);
  const auto gt_ids = rng.uniform_int(1, 4);
  const auto pred_ids = rng.uniform_int(1, 4);
  const bool empty_pred = rng.bernoulli(0.05);

  std::vector<std::int64_t> mapping(static_cast<std::size_t>(gt_ids));
  for (auto& m : mapping) m = rng.uniform_int(1, pred_ids);

  std::vector<BoundingBox> boxes(static_cast<std::size_t>(gt_ids));
  for (auto& b : boxes) b = {rng.uniform(0.0, 80.0), rng.uniform(0.0, 80.0), rng.uniform(10.0, 40.0), rng.uniform(10.0, 40.0)};

  for (std::int64_t f = 1; f <= frames; ++f) {
    std::vector<char> pred_taken(static_cast<std::size_t>(pred_ids) + 1, 0);
    for (std::int64_t g = 1; g <= gt_ids; ++g) {
      auto& b = boxes[static_cast<std::size_t>(g - 1)];
      b.left += rng.uniform(-5.0, 5.0);
      b.top += rng.uniform(-5.0, 5.0);
      if (!rng.bernoulli(0.8)) continue;
      s.gt[g][f] = {b, 1.0};
      if (empty_pred || !rng.bernoulli(0.8)) continue;
      auto id = mapping[static_cast<std::size_t>(g - 1)];
      if (rng.bernoulli(0.2)) id = rng.uniform_int(1, pred_ids);
      if (pred_taken[static_cast<std::size_t>(id)]) continue;
      pred_taken[static_cast<std::size_t>(id)] = 1;
      const double j = rng.uniform(0.0, 1.0) < 0.5 ? 2.0 : 8.0;
      const BoundingBox p{b.left + rng.uniform(-j, j), b.top + rng.uniform(-j, j),
                          std::max(2.0, b.width + rng.uniform(-j, j)), std::max(2.0, b.height + rng.uniform(-j, j))};
      s.pred[id][f] = {p, 1.0};
    }
    if (!empty_pred && rng.bernoulli(0.3)) {
      for (std::int64_t id = 1; id <= pred_ids; ++id) {
        if (pred_taken[static_cast<std::size_t>(id)]) continue;
        s.pred[id][f] = {{rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0), rng.uniform(10.0, 40.0), rng.uniform(10.0, 40.0)},
                         1.0};
        break;
      }
    }
  }
  if (s.gt.empty()) s.gt[1][1] = {boxes[0], 1.0};
  return s;
}

CostMatrix random_cost_matrix(RngStream& rng, std::size_t max_size) {
  const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_size)));
  const auto m = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_size)));
  const auto kind = rng.uniform_int(0, 2);
  CostMatrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      switch (kind) {
        case 0: c(i, j) = rng.uniform(-5.0, 10.0); break;
        case 1: c(i, j) = static_cast<double>(rng.uniform_int(0, 3)); break;
        default: c(i, j) = rng.bernoulli(0.3) ? kForbidden : rng.uniform(0.0, 1.0); break;
      }
    }
  }
  return c;
}

}  // namespace semtrack::verify
