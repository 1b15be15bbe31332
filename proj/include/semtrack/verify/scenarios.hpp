#pragma once

#include "semtrack/assignment.hpp"
#include "semtrack/metrics.hpp"
#include "semtrack/rng.hpp"

namespace semtrack::verify {

struct TrackScenario {
  TrackSet gt;
  TrackSet pred;
};

// At most 5 frames, 4 identities per side and 4 boxes per frame. Predictions
// are jittered copies of the ground truth with dropped boxes, spurious boxes
// and identity swaps mixed in.
TrackScenario random_scenario(RngStream& rng);

// n, m in [1, max_size]. Mixes real-valued, small-integer (tie-heavy) and
// partially forbidden matrices.
CostMatrix random_cost_matrix(RngStream& rng, std::size_t max_size = 6);

}  // namespace semtrack::verify
