#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "hmcd/align.hpp"
#include "hmcd/dataset.hpp"
#include "hmcd/types.hpp"

namespace hmcd {

namespace detail {

inline void check_partition(const Partition& part, std::size_t n, const char* what) {
  if (part.size() != n)
    throw InputError(std::string(what) + ": partition has " + std::to_string(part.size()) +
                     " labels for " + std::to_string(n) + " nodes");
  for (auto l : part.labels)
    if (l >= part.k) throw InputError(std::string(what) + ": label out of range");
}

inline void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InputError(std::string(what) + ": matrix is not square");
}

inline Partition restrict_partition(const Partition& part, const std::vector<std::size_t>& idx) {
  Partition out;
  out.k = part.k;
  out.labels.reserve(idx.size());
  for (auto i : idx) {
    if (i >= part.size()) throw InputError("overlap index out of range");
    out.labels.push_back(part.labels[i]);
  }
  return out;
}

inline std::vector<bool> overlap_mask(std::size_t n, const std::vector<std::size_t>& idx) {
  std::vector<bool> mask(n, false);
  for (auto i : idx) {
    if (i >= n) throw InputError("overlap index out of range");
    mask[i] = true;
  }
  return mask;
}

}  // namespace detail

// Directed weighted modularity
//   (1/W) sum_ij (w_ij - e_i^out e_j^in / W) [c_i == c_j]
// with e^out the row sums and e^in the column sums. Accumulated per community:
// sum_c (w_cc / W - out_c in_c / W^2).
inline double modularity(const Matrix& adj, const Partition& part) {
  detail::check_square(adj, "modularity");
  const auto n = static_cast<std::size_t>(adj.rows());
  detail::check_partition(part, n, "modularity");
  const double w = adj.sum();
  if (!(w > 0.0)) throw MetricError("modularity: total edge weight is zero");
  std::vector<double> internal(part.k, 0.0), out(part.k, 0.0), in(part.k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = part.labels[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double v = adj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v == 0.0) continue;
      out[ci] += v;
      in[part.labels[j]] += v;
      if (part.labels[j] == ci) internal[ci] += v;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < part.k; ++c) q += internal[c] / w - (out[c] / w) * (in[c] / w);
  return q;
}

// Modularity of the overlapping users alone: the principal submatrix on
// `overlap` with the labels those users carry in `part`.
inline double modularity_overlap(const Matrix& adj, const Partition& part,
                                 const std::vector<std::size_t>& overlap) {
  detail::check_square(adj, "modularity_overlap");
  detail::check_partition(part, static_cast<std::size_t>(adj.rows()), "modularity_overlap");
  if (overlap.empty()) throw MetricError("modularity_overlap: no overlapping users");
  return modularity(principal_submatrix(adj, overlap), detail::restrict_partition(part, overlap));
}

// Labels of the network's users under the global partition (row gather
// through T).
inline Partition global_partition_for_network(const Partition& global, const AlignmentT& t) {
  if (global.size() != t.cols())
    throw InputError("global partition does not cover the global user set");
  Partition out;
  out.k = global.k;
  out.labels.reserve(t.rows());
  for (auto c : t.columns()) out.labels.push_back(global.labels[c]);
  return out;
}

// sum_c E(c) / diam(c). Edges are the nonzero off-diagonal entries, taken as
// unweighted and undirected. E(c) counts edges inside c that touch an
// overlapping user; diam(c) is the longest finite shortest path in the
// subgraph induced by c. Communities with diam(c) = 0 contribute nothing.
inline double compactness(const Matrix& topology, const Partition& part,
                          const std::vector<std::size_t>& overlap) {
  detail::check_square(topology, "compactness");
  const auto n = static_cast<std::size_t>(topology.rows());
  detail::check_partition(part, n, "compactness");
  const auto is_overlap = detail::overlap_mask(n, overlap);

  std::vector<std::vector<std::size_t>> nbr(n);
  std::vector<std::size_t> edges(part.k, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (topology(ii, jj) == 0.0 && topology(jj, ii) == 0.0) continue;
      if (part.labels[i] != part.labels[j]) continue;
      nbr[i].push_back(j);
      nbr[j].push_back(i);
      if (is_overlap[i] || is_overlap[j]) ++edges[part.labels[i]];
    }

  // Neighbour lists only hold same-community edges, so BFS stays inside c.
  std::vector<std::size_t> diam(part.k, 0);
  constexpr auto unseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, unseen);
  std::vector<std::size_t> visited;
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<std::size_t> queue;
    dist[s] = 0;
    visited.assign(1, s);
    queue.push(s);
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop();
      for (auto v : nbr[u])
        if (dist[v] == unseen) {
          dist[v] = dist[u] + 1;
          diam[part.labels[s]] = std::max(diam[part.labels[s]], dist[v]);
          visited.push_back(v);
          queue.push(v);
        }
    }
    for (auto v : visited) dist[v] = unseen;
  }

  double total = 0.0;
  for (std::size_t c = 0; c < part.k; ++c)
    if (diam[c] > 0) total += static_cast<double>(edges[c]) / static_cast<double>(diam[c]);
  return total;
}

// (1/K) sum_c mean over N(c) of sim(i, j), where N(c) holds the unordered
// pairs inside c with at least one overlapping member and K is part.k. An
// asymmetric sim contributes 0.5 (sim(i, j) + sim(j, i)) per pair.
inline double density(const Matrix& sim, const Partition& part,
                      const std::vector<std::size_t>& overlap) {
  detail::check_square(sim, "density");
  const auto n = static_cast<std::size_t>(sim.rows());
  detail::check_partition(part, n, "density");
  if (part.k == 0) throw MetricError("density: K is zero");
  if (sim.size() > 0 && (!(sim.minCoeff() >= 0.0) || !(sim.maxCoeff() <= 1.0)))
    throw MetricError("density: similarities must lie in [0, 1]");
  const auto is_overlap = detail::overlap_mask(n, overlap);
  std::vector<double> sum(part.k, 0.0);
  std::vector<std::size_t> pairs(part.k, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (part.labels[i] != part.labels[j] || !(is_overlap[i] || is_overlap[j])) continue;
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      sum[part.labels[i]] += 0.5 * (sim(ii, jj) + sim(jj, ii));
      ++pairs[part.labels[i]];
    }
  double total = 0.0;
  for (std::size_t c = 0; c < part.k; ++c)
    if (pairs[c] > 0) total += sum[c] / static_cast<double>(pairs[c]);
  return total / static_cast<double>(part.k);
}

// Normalized mutual information MI / sqrt(H(a) H(b)), natural log, plug-in
// probabilities. Two single-cluster partitions give 1; a single cluster
// against several is undefined.
inline double nmi(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw InputError("nmi: partitions differ in length");
  if (a.size() == 0) throw MetricError("nmi: empty partitions");
  const double n = static_cast<double>(a.size());
  std::map<std::size_t, double> pa, pb;
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a.labels[i]] += 1.0;
    pb[b.labels[i]] += 1.0;
    joint[{a.labels[i], b.labels[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<std::size_t, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  if (pa.size() == 1 || pb.size() == 1) {
    if (pa.size() == 1 && pb.size() == 1) return 1.0;
    throw MetricError("nmi: one partition has a single cluster (zero entropy)");
  }
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pij = c / n;
    mi += pij * std::log(pij / ((pa[key.first] / n) * (pb[key.second] / n)));
  }
  const double value = mi / std::sqrt(entropy(pa) * entropy(pb));
  return std::clamp(value, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Report

// Metrics of one (network, attribute) block. Values that are undefined on the
// input (e.g. no overlapping users) are left empty.
struct BlockMetrics {
  std::string network;
  AttributeKind kind = AttributeKind::topology;
  std::optional<double> mod_local, mod_global, mod_o_local, mod_o_global;
  std::optional<double> nmi;        // global partition on the network vs local
  std::optional<double> nmi_truth;  // global partition on the network vs planted labels
};

struct NetworkMetrics {
  std::string network;
  std::optional<double> compactness;  // global partition, topology adjacency
  std::optional<double> density;      // global partition, content adjacency
};

struct MetricReport {
  std::vector<BlockMetrics> blocks;
  std::vector<NetworkMetrics> networks;
  std::vector<std::string> warnings;
};

// Partitions produced by one detection run: the global one over
// dataset.global_users and a local one per (network index, attribute).
struct DetectionPartitions {
  Partition global;
  std::map<std::pair<std::size_t, AttributeKind>, Partition> local;
};

namespace detail {

template <class F>
std::optional<double> try_metric(F&& f, std::vector<std::string>& warnings,
                                 const std::string& what) {
  try {
    return f();
  } catch (const MetricError& e) {
    warnings.push_back(what + ": " + e.what());
    return std::nullopt;
  }
}

}  // namespace detail

// Evaluates every metric the dataset supports. `truth`, when given, maps each
// network index to planted labels over that network's users.
inline MetricReport evaluate_partitions(
    const MultiNetworkDataset& ds, const DetectionPartitions& parts,
    const std::map<std::size_t, Partition>* truth = nullptr) {
  validate(ds);
  if (parts.global.size() != ds.global_users.size())
    throw InputError("global partition has " + std::to_string(parts.global.size()) +
                     " labels for " + std::to_string(ds.global_users.size()) + " global users");
  MetricReport rep;
  for (std::size_t s = 0; s < ds.networks.size(); ++s) {
    const auto& net = ds.networks[s];
    const auto overlap = net.overlap_indices();
    const Partition global = global_partition_for_network(parts.global, build_T(net, ds.global_users));
    for (const auto& [kind, adj] : net.adjacency) {
      const std::string tag = net.id + "/" + std::string(to_string(kind));
      auto it = parts.local.find({s, kind});
      if (it == parts.local.end()) throw InputError(tag + ": no local partition");
      const Partition& local = it->second;
      detail::check_partition(local, net.size(), tag.c_str());
      BlockMetrics bm;
      bm.network = net.id;
      bm.kind = kind;
      auto& w = rep.warnings;
      bm.mod_local = detail::try_metric([&] { return modularity(adj, local); }, w, tag + " mod(L)");
      bm.mod_global = detail::try_metric([&] { return modularity(adj, global); }, w, tag + " mod(G)");
      bm.mod_o_local = detail::try_metric([&] { return modularity_overlap(adj, local, overlap); }, w,
                                          tag + " mod_o(L)");
      bm.mod_o_global = detail::try_metric([&] { return modularity_overlap(adj, global, overlap); },
                                           w, tag + " mod_o(G)");
      bm.nmi = detail::try_metric([&] { return nmi(global, local); }, w, tag + " NMI");
      if (truth) {
        auto t = truth->find(s);
        if (t != truth->end())
          bm.nmi_truth =
              detail::try_metric([&] { return nmi(global, t->second); }, w, tag + " NMI(truth)");
      }
      rep.blocks.push_back(std::move(bm));
    }
    NetworkMetrics nm;
    nm.network = net.id;
    if (auto t = net.adjacency.find(AttributeKind::topology); t != net.adjacency.end())
      nm.compactness = compactness(t->second, global, overlap);
    if (auto c = net.adjacency.find(AttributeKind::content); c != net.adjacency.end())
      nm.density = detail::try_metric([&] { return density(c->second, global, overlap); },
                                      rep.warnings, net.id + " density");
    rep.networks.push_back(std::move(nm));
  }
  return rep;
}

}  // namespace hmcd
