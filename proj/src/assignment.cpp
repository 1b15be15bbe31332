#include "semtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semtrack {

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("CostMatrix rows must have equal length");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

namespace {

struct SquareSolution {
  std::vector<int> row_to_col;
  std::vector<double> u;  // row potentials
  std::vector<double> v;  // column potentials
};

// Shortest augmenting path Hungarian method on a k x k matrix, O(k^3).
SquareSolution solve_square(const std::vector<double>& a, std::size_t k) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
  std::vector<double> minv(k + 1);
  std::vector<char> used(k + 1);
  for (std::size_t i = 1; i <= k; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareSolution s;
  s.row_to_col.assign(k, -1);
  for (std::size_t j = 1; j <= k; ++j) s.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  return s;
}

// Among perfect matchings that use only tight edges, pick the
// lexicographically smallest by fixing rows in order and rerouting along
// alternating paths.
std::vector<int> lexicographic_tight_matching(const std::vector<double>& a, std::size_t k, const SquareSolution& s,
                                              double tol) {
  auto tight = [&](std::size_t r, std::size_t c) { return a[r * k + c] - s.u[r] - s.v[c] <= tol; };
  std::vector<int> match = s.row_to_col;
  std::vector<int> owner(k);
  for (std::size_t r = 0; r < k; ++r) owner[static_cast<std::size_t>(match[r])] = static_cast<int>(r);
  std::vector<char> row_fixed(k, 0), col_fixed(k, 0);

  std::vector<int> parent_col(k);
  std::vector<char> seen(k);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < k; ++i) {
    const auto old = static_cast<std::size_t>(match[i]);
    for (std::size_t c = 0; c < k; ++c) {
      if (col_fixed[c] || !tight(i, c)) continue;
      if (c == old) break;
      // BFS over rows, starting at the current owner of c, looking for a
      // tight edge into `old`.
      const auto start = static_cast<std::size_t>(owner[c]);
      std::fill(seen.begin(), seen.end(), 0);
      std::fill(parent_col.begin(), parent_col.end(), -1);
      queue.assign(1, start);
      seen[c] = 1;
      bool found = false;
      std::size_t end_row = 0;
      for (std::size_t qi = 0; qi < queue.size() && !found; ++qi) {
        const auto r = queue[qi];
        for (std::size_t c2 = 0; c2 < k; ++c2) {
          if (seen[c2] || col_fixed[c2] || !tight(r, c2)) continue;
          seen[c2] = 1;
          parent_col[c2] = static_cast<int>(r);
          if (c2 == old) {
            found = true;
            end_row = r;
            break;
          }
          queue.push_back(static_cast<std::size_t>(owner[c2]));
        }
      }
      if (!found) continue;
      // Walk back from `old`: each row on the path takes the column that led
      // to the next one.
      std::size_t col = old;
      std::size_t row = end_row;
      for (;;) {
        const auto prev_col = static_cast<std::size_t>(match[row]);
        match[row] = static_cast<int>(col);
        owner[col] = static_cast<int>(row);
        if (row == start) break;
        col = prev_col;
        row = static_cast<std::size_t>(parent_col[col]);
      }
      match[i] = static_cast<int>(c);
      owner[c] = static_cast<int>(i);
      break;
    }
    row_fixed[i] = 1;
    col_fixed[static_cast<std::size_t>(match[i])] = 1;
  }
  return match;
}

}  // namespace

Assignment hungarian(const CostMatrix& cost) {
  const auto n = cost.rows(), m = cost.cols();
  Assignment out;
  out.row_to_col.assign(n, -1);
  if (n == 0 || m == 0) return out;

  const std::size_t k = std::max(n, m);
  double finite_total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (std::isfinite(cost(i, j))) finite_total += std::fabs(cost(i, j));
  // Any single forbidden pair costs more than every finite assignment.
  const double big = 2.0 * finite_total + 1.0;

  std::vector<double> a(k * k, 0.0);
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(i, j);
      if (std::isnan(c) || c == -std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("hungarian: costs must be finite or +inf");
      }
      a[i * k + j] = std::isfinite(c) ? c : big;
      scale = std::max(scale, std::fabs(a[i * k + j]));
    }
  }

  const auto solution = solve_square(a, k);
  const double tol = 1e-12 * scale * static_cast<double>(k);
  auto match = lexicographic_tight_matching(a, k, solution, tol);

  auto padded_total = [&](const std::vector<int>& mm) {
    double t = 0.0;
    for (std::size_t r = 0; r < k; ++r) t += a[r * k + static_cast<std::size_t>(mm[r])];
    return t;
  };
  if (padded_total(match) > padded_total(solution.row_to_col)) match = solution.row_to_col;

  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(match[i]);
    if (j < m && std::isfinite(cost(i, j))) {
      out.row_to_col[i] = static_cast<int>(j);
      out.cost += cost(i, j);
      ++out.pairs;
    }
  }
  return out;
}

}  // namespace semtrack
