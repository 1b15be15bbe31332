#pragma once

#include <vector>

#include "semtrack/assignment.hpp"

namespace semtrack::verify {

// Exhaustive search over every partial one-to-one assignment. Same contract
// as hungarian(): most non-forbidden pairs, then least cost (summed in row
// order), then lexicographically smallest with "unassigned" last.
Assignment brute_force_assignment(const CostMatrix& cost);

}  // namespace semtrack::verify
