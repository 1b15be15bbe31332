#include "semtrack/verify/brute_force.hpp"

#include <cmath>
#include <functional>

namespace semtrack::verify {

Assignment brute_force_assignment(const CostMatrix& cost) {
  const auto n = cost.rows(), m = cost.cols();
  Assignment best;
  best.row_to_col.assign(n, -1);
  bool have = false;

  std::vector<int> current(n, -1);
  std::vector<char> used(m, 0);

  // Lexicographic order with -1 ranked after every column.
  auto lex_less = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < n; ++i) {
      const long ka = a[i] < 0 ? static_cast<long>(m) : a[i];
      const long kb = b[i] < 0 ? static_cast<long>(m) : b[i];
      if (ka != kb) return ka < kb;
    }
    return false;
  };

  std::function<void(std::size_t)> visit = [&](std::size_t row) {
    if (row == n) {
      std::size_t pairs = 0;
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (current[i] < 0) continue;
        ++pairs;
        total += cost(i, static_cast<std::size_t>(current[i]));
      }
      bool better = !have;
      if (have) {
        if (pairs != best.pairs) {
          better = pairs > best.pairs;
        } else if (total != best.cost) {
          better = total < best.cost;
        } else {
          better = lex_less(current, best.row_to_col);
        }
      }
      if (better) {
        have = true;
        best.row_to_col = current;
        best.cost = total;
        best.pairs = pairs;
      }
      return;
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c] || std::isinf(cost(row, c))) continue;
      used[c] = 1;
      current[row] = static_cast<int>(c);
      visit(row + 1);
      used[c] = 0;
    }
    current[row] = -1;
    visit(row + 1);
  };
  visit(0);
  return best;
}

}  // namespace semtrack::verify
