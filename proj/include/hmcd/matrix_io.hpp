#pragma once

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmcd/types.hpp"

namespace hmcd {

// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// Coordinate text format:
//   %%shape rows cols
//   row col value        (0-based, sorted by (row, col); absent entries are 0)
// Lines starting with '#' are comments.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  os << "%%shape " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) os << i << ' ' << j << ' ' << format_double(m(i, j)) << '\n';
}

inline void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path, 0, "cannot open for writing");
  write_matrix(os, m);
  if (!os) throw FormatError(path, 0, "write failed");
}

inline Matrix read_matrix(std::istream& is, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  bool have_shape = false;
  Matrix m;
  std::set<std::pair<long long, long long>> seen;
  while (std::getline(is, line)) {
    ++lineno;
    auto tok = detail::split_ws(line);
    if (tok.empty() || tok.front().front() == '#') continue;
    if (!have_shape) {
      long long rows = 0, cols = 0;
      if (tok.size() != 3 || tok[0] != "%%shape" || !detail::parse_number(tok[1], rows) ||
          !detail::parse_number(tok[2], cols) || rows < 0 || cols < 0)
        throw FormatError(name, lineno, "expected header '%%shape rows cols'");
      m = Matrix::Zero(rows, cols);
      have_shape = true;
      continue;
    }
    long long r = 0, c = 0;
    double v = 0.0;
    if (tok.size() != 3 || !detail::parse_number(tok[0], r) || !detail::parse_number(tok[1], c) ||
        !detail::parse_number(tok[2], v))
      throw FormatError(name, lineno, "expected 'row col value'");
    if (r < 0 || c < 0 || r >= m.rows() || c >= m.cols())
      throw FormatError(name, lineno, "index out of range");
    if (!seen.emplace(r, c).second) throw FormatError(name, lineno, "duplicate entry");
    m(r, c) = v;
  }
  if (!have_shape) throw FormatError(name, lineno, "missing '%%shape' header");
  return m;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path, 0, "cannot open matrix file");
  return read_matrix(is, path);
}

}  // namespace hmcd
