#pragma once

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <vector>

namespace semtrack {

inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

// Dense row-major cost matrix. +inf marks a forbidden pair.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Assignment {
  std::vector<int> row_to_col;  // -1 when the row is unassigned
  double cost = 0.0;            // sum over assigned rows, in row order
  std::size_t pairs = 0;
};

// Minimum-cost assignment. Among assignments with the largest number of
// non-forbidden pairs, returns one of minimum total cost; ties resolve to the
// lexicographically smallest row_to_col with "unassigned" ordered after every
// column. Forbidden pairs are never returned.
Assignment hungarian(const CostMatrix& cost);

}  // namespace semtrack
