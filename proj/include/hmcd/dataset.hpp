#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hmcd/types.hpp"

namespace hmcd {

// One social network: its users (row/column order of every matrix), the subset
// of users who also hold accounts elsewhere, and per-attribute adjacency.
struct SocialNetwork {
  std::string id;
  std::vector<std::string> users;
  std::vector<std::string> overlapping_users;
  std::map<AttributeKind, Matrix> adjacency;
  std::map<AttributeKind, Matrix> overlap_adjacency;

  std::size_t size() const noexcept { return users.size(); }
  std::size_t overlap_size() const noexcept { return overlapping_users.size(); }

  // Positions of overlapping users inside `users`, in overlapping_users order.
  std::vector<std::size_t> overlap_indices() const {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < users.size(); ++i) pos.emplace(users[i], i);
    std::vector<std::size_t> out;
    out.reserve(overlapping_users.size());
    for (const auto& u : overlapping_users) {
      auto it = pos.find(u);
      if (it == pos.end())
        throw InputError("network '" + id + "': overlapping user '" + u +
                         "' is not a user of the network");
      out.push_back(it->second);
    }
    return out;
  }

  bool operator==(const SocialNetwork&) const = default;
};

struct MultiNetworkDataset {
  std::vector<std::string> global_users;
  std::vector<SocialNetwork> networks;

  bool operator==(const MultiNetworkDataset&) const = default;
};

namespace detail {

inline void check_matrix(const SocialNetwork& net, const Matrix& m, std::size_t n,
                         std::string_view what) {
  if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n)
    throw InputError("network '" + net.id + "': " + std::string(what) + " is " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", expected " + std::to_string(n) + "x" + std::to_string(n));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j)) || m(i, j) < 0.0)
        throw InputError("network '" + net.id + "': " + std::string(what) +
                         " has a negative or non-finite entry at (" + std::to_string(i) +
                         "," + std::to_string(j) + ")");
}

}  // namespace detail

inline void validate(const SocialNetwork& net) {
  std::unordered_set<std::string> seen;
  for (const auto& u : net.users)
    if (!seen.insert(u).second)
      throw InputError("network '" + net.id + "': duplicate user '" + u + "'");
  std::unordered_set<std::string> seen_o;
  for (const auto& u : net.overlapping_users) {
    if (!seen.count(u))
      throw InputError("network '" + net.id + "': overlapping user '" + u +
                       "' is not a user of the network");
    if (!seen_o.insert(u).second)
      throw InputError("network '" + net.id + "': duplicate overlapping user '" + u + "'");
  }
  if (net.adjacency.size() != net.overlap_adjacency.size())
    throw InputError("network '" + net.id + "': adjacency and overlap adjacency key sets differ");
  for (const auto& [kind, m] : net.adjacency) {
    auto it = net.overlap_adjacency.find(kind);
    if (it == net.overlap_adjacency.end())
      throw InputError("network '" + net.id + "': no overlap adjacency for attribute " +
                       std::string(to_string(kind)));
    detail::check_matrix(net, m, net.size(), std::string(to_string(kind)) + " adjacency");
    detail::check_matrix(net, it->second, net.overlap_size(),
                         std::string(to_string(kind)) + " overlap adjacency");
  }
}

// Throws InputError on the first broken invariant.
inline void validate(const MultiNetworkDataset& ds) {
  std::unordered_set<std::string> global;
  for (const auto& u : ds.global_users)
    if (!global.insert(u).second) throw InputError("duplicate global user '" + u + "'");

  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::size_t> memberships;
  for (const auto& net : ds.networks) {
    if (!ids.insert(net.id).second) throw InputError("duplicate network id '" + net.id + "'");
    validate(net);
    for (const auto& u : net.users) {
      if (!global.count(u))
        throw InputError("network '" + net.id + "': user '" + u + "' is not a global user");
      ++memberships[u];
    }
  }
  for (const auto& net : ds.networks) {
    std::unordered_set<std::string> overlap(net.overlapping_users.begin(),
                                            net.overlapping_users.end());
    for (const auto& u : net.users)
      if (memberships[u] >= 2 && !overlap.count(u))
        throw InputError("network '" + net.id + "': user '" + u +
                         "' belongs to several networks but is not listed as overlapping");
  }
}

// 0/1 adjacency from an edge list. Self-loops are dropped.
inline Matrix build_topology_adjacency(const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                       std::size_t n, bool directed) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n)
      throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") out of range for " + std::to_string(n) + " users");
    if (a == b) continue;
    m(a, b) = 1.0;
    if (!directed) m(b, a) = 1.0;
  }
  return m;
}

// Jensen-Shannon divergence with base-2 logs, so the result lies in [0, 1].
// Zero-probability components contribute nothing.
inline double js_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw InputError("js_divergence: dimension mismatch");
  double js = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::max(0.0, std::min(1.0, js));
}

inline constexpr double kDefaultContentThreshold = 0.7;

// Content similarity 10^(-JS) between every pair of users, zeroed where the
// users share no topology edge and the similarity is below `threshold`.
// The diagonal is always zero.
inline Matrix js_content_adjacency(const std::vector<Vector>& features, const Matrix& topology,
                                   double threshold = kDefaultContentThreshold) {
  const auto n = static_cast<Eigen::Index>(features.size());
  if (topology.rows() != n || topology.cols() != n)
    throw InputError("js_content_adjacency: topology is " + std::to_string(topology.rows()) +
                     "x" + std::to_string(topology.cols()) + " but there are " +
                     std::to_string(n) + " feature vectors");
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = features[static_cast<std::size_t>(i)];
    if (f.size() != features.front().size())
      throw InputError("js_content_adjacency: feature " + std::to_string(i) +
                       " has a different dimension");
    if ((f.array() < 0.0).any() || !f.allFinite() || std::abs(f.sum() - 1.0) > 1e-9)
      throw InputError("js_content_adjacency: feature " + std::to_string(i) +
                       " is not a probability vector");
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double sim = std::pow(10.0, -js_divergence(features[static_cast<std::size_t>(i)],
                                                       features[static_cast<std::size_t>(j)]));
      out(i, j) = (topology(i, j) == 0.0 && sim < threshold) ? 0.0 : sim;
      out(j, i) = (topology(j, i) == 0.0 && sim < threshold) ? 0.0 : sim;
    }
  }
  return out;
}

// Principal submatrix on `indices`, in the given order.
inline Matrix principal_submatrix(const Matrix& m, const std::vector<std::size_t>& indices) {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Matrix out(k, k);
  for (Eigen::Index b = 0; b < k; ++b)
    for (Eigen::Index a = 0; a < k; ++a)
      out(a, b) = m(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(indices[static_cast<std::size_t>(b)]));
  return out;
}

inline Matrix extract_overlap_adjacency(const Matrix& m, const SocialNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  if (m.rows() != n || m.cols() != n)
    throw InputError("extract_overlap_adjacency: matrix is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", network '" + net.id + "' has " +
                     std::to_string(n) + " users");
  return principal_submatrix(m, net.overlap_indices());
}

// Stores `m` as the network's adjacency for `kind` and derives the overlap block.
inline void set_adjacency(SocialNetwork& net, AttributeKind kind, Matrix m) {
  net.overlap_adjacency[kind] = extract_overlap_adjacency(m, net);
  net.adjacency[kind] = std::move(m);
}

// Users that appear in at least two networks, in the order of `networks`.
inline std::vector<std::string> users_in_several_networks(
    const std::vector<SocialNetwork>& networks) {
  std::unordered_map<std::string, std::size_t> count;
  for (const auto& net : networks)
    for (const auto& u : net.users) ++count[u];
  std::vector<std::string> out;
  std::unordered_set<std::string> emitted;
  for (const auto& net : networks)
    for (const auto& u : net.users)
      if (count[u] >= 2 && emitted.insert(u).second) out.push_back(u);
  return out;
}

}  // namespace hmcd
