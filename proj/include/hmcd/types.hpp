#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hmcd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Attribute a network adjacency was built from.
enum class AttributeKind { topology, content };

inline constexpr AttributeKind kAllAttributes[] = {AttributeKind::topology,
                                                   AttributeKind::content};

inline std::string_view to_string(AttributeKind kind) {
  return kind == AttributeKind::topology ? "topology" : "content";
}

inline std::optional<AttributeKind> parse_attribute(std::string_view name) {
  if (name == "topology") return AttributeKind::topology;
  if (name == "content") return AttributeKind::content;
  return std::nullopt;
}

// Invalid caller-supplied data (bad indices, broken invariants, shape mismatch).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file on disk. Carries the offending file and 1-based line (0 if
// the problem is not tied to a line).
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string file, std::size_t line, const std::string& what)
      : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string()) +
                           ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Numerical breakdown inside the solver.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        detail_(what) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t iteration_;
  std::string detail_;
};

// A metric is undefined on the given input (e.g. graph with zero total weight).
class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hard community labels; every label is < k.
struct Partition {
  std::vector<std::size_t> labels;
  std::size_t k = 0;

  std::size_t size() const noexcept { return labels.size(); }
  bool operator==(const Partition&) const = default;
};

}  // namespace hmcd
