#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "hmcd/dataset.hpp"

namespace hmcd {

// Binary selector with exactly one 1 per row and at most one per column,
// stored as the selected column of each row. Products with it are gathers
// (S * X) and scatters (S^T * Y).
class Selector {
 public:
  Selector() = default;
  Selector(std::vector<std::size_t> columns, std::size_t cols)
      : columns_(std::move(columns)), cols_(cols) {
    std::vector<bool> used(cols_, false);
    for (auto c : columns_) {
      if (c >= cols_) throw InputError("selector column out of range");
      if (used[c]) throw InputError("selector column selected twice");
      used[c] = true;
    }
  }

  std::size_t rows() const noexcept { return columns_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

  // S * x: row r of the result is row columns()[r] of x.
  Matrix gather(const Matrix& x) const {
    check_rows(x, cols_, "gather");
    Matrix out(static_cast<Eigen::Index>(rows()), x.cols());
    for (std::size_t r = 0; r < rows(); ++r)
      out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(columns_[r]));
    return out;
  }

  // S^T * y: row r of y lands on row columns()[r]; other rows are zero.
  Matrix scatter(const Matrix& y) const {
    check_rows(y, rows(), "scatter");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(cols_), y.cols());
    for (std::size_t r = 0; r < rows(); ++r)
      out.row(static_cast<Eigen::Index>(columns_[r])) = y.row(static_cast<Eigen::Index>(r));
    return out;
  }

  // S^T * S * x: keeps the selected rows of x, zeroes the rest.
  Matrix mask(const Matrix& x) const { return scatter(gather(x)); }

  // Diagonal of S^T * S (1 where a column is selected).
  Vector coverage() const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(cols_));
    for (auto c : columns_) v[static_cast<Eigen::Index>(c)] = 1.0;
    return v;
  }

  Matrix dense() const {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols_));
    for (std::size_t r = 0; r < rows(); ++r)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(columns_[r])) = 1.0;
    return m;
  }

 private:
  static void check_rows(const Matrix& x, std::size_t expected, const char* op) {
    if (static_cast<std::size_t>(x.rows()) != expected)
      throw InputError(std::string("selector ") + op + ": operand has " +
                       std::to_string(x.rows()) + " rows, expected " + std::to_string(expected));
  }

  std::vector<std::size_t> columns_;
  std::size_t cols_ = 0;
};

// H^s: overlapping users (rows) -> network users (columns).
struct AlignmentH : Selector {
  using Selector::Selector;
};

// T^s: network users (rows) -> global users (columns).
struct AlignmentT : Selector {
  using Selector::Selector;
};

inline AlignmentH build_H(const SocialNetwork& net) {
  return AlignmentH(net.overlap_indices(), net.size());
}

inline AlignmentT build_T(const SocialNetwork& net, const std::vector<std::string>& global_users) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < global_users.size(); ++i) pos.emplace(global_users[i], i);
  std::vector<std::size_t> cols;
  cols.reserve(net.size());
  for (const auto& u : net.users) {
    auto it = pos.find(u);
    if (it == pos.end())
      throw InputError("network '" + net.id + "': user '" + u + "' is not a global user");
    cols.push_back(it->second);
  }
  return AlignmentT(std::move(cols), global_users.size());
}

}  // namespace hmcd
