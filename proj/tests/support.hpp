#pragma once

// Test-only helpers: random instance builders and independent oracles. The
// oracles deliberately avoid the library's own gathers, Q helpers and metric
// code so that agreement means something.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hmcd/hmcd.hpp"

namespace hmcd::testkit {

struct RandomInstanceOptions {
  std::size_t networks = 3;
  std::size_t min_users = 40;
  std::size_t max_users = 120;
  double overlap_fraction = 0.25;
  double edge_density = 0.1;
  bool directed = true;
  bool with_content = false;
};

// Networks with round(overlap_fraction * n_s) overlapping users each. Shared
// identities are created by pairing the two networks with the most open
// overlap slots; a lone leftover slot reuses an existing shared identity.
inline MultiNetworkDataset random_dataset(Rng& rng, const RandomInstanceOptions& o = {}) {
  const std::size_t S = o.networks;
  std::vector<std::size_t> size(S), open(S);
  for (std::size_t s = 0; s < S; ++s) {
    size[s] = o.min_users + rng.index(o.max_users - o.min_users + 1);
    open[s] = S > 1 ? static_cast<std::size_t>(std::lround(o.overlap_fraction * size[s])) : 0;
  }
  std::vector<std::vector<std::string>> members(S);
  std::vector<std::string> shared;
  std::size_t next = 0;
  auto fresh = [&] { return "u" + std::to_string(next++); };
  for (;;) {
    std::vector<std::size_t> order(S);
    for (std::size_t s = 0; s < S; ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return open[a] > open[b]; });
    const std::size_t a = order[0];
    if (open[a] == 0) break;
    if (S > 1 && open[order[1]] > 0) {
      const std::size_t b = order[1];
      const auto id = fresh();
      shared.push_back(id);
      members[a].push_back(id);
      members[b].push_back(id);
      --open[a];
      --open[b];
      continue;
    }
    bool placed = false;
    for (const auto& id : shared) {
      if (std::find(members[a].begin(), members[a].end(), id) != members[a].end()) continue;
      members[a].push_back(id);
      placed = true;
      break;
    }
    if (!placed) {
      // Every shared user is already here: pair with the network with the most
      // spare room, which then exceeds its own overlap quota.
      std::size_t b = a == 0 ? 1 : 0;
      for (std::size_t s = 0; s < S; ++s)
        if (s != a && size[s] - members[s].size() > size[b] - members[b].size()) b = s;
      if (members[b].size() >= size[b])
        throw std::logic_error("random_dataset: cannot place overlap slot");
      const auto id = fresh();
      shared.push_back(id);
      members[a].push_back(id);
      members[b].push_back(id);
    }
    --open[a];
  }

  MultiNetworkDataset ds;
  std::set<std::string> shared_set(shared.begin(), shared.end());
  for (std::size_t s = 0; s < S; ++s) {
    SocialNetwork net;
    net.id = "net" + std::to_string(s);
    net.users = members[s];
    while (net.users.size() < size[s]) net.users.push_back(fresh());
    rng.shuffle(net.users.begin(), net.users.end());
    for (const auto& u : net.users)
      if (shared_set.count(u)) net.overlapping_users.push_back(u);
    ds.networks.push_back(std::move(net));
  }
  for (std::size_t i = 0; i < next; ++i) ds.global_users.push_back("u" + std::to_string(i));
  rng.shuffle(ds.global_users.begin(), ds.global_users.end());

  for (auto& net : ds.networks) {
    const auto n = static_cast<Eigen::Index>(net.size());
    Matrix topo = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = o.directed ? 0 : i + 1; j < n; ++j) {
        if (i == j || rng.uniform() >= o.edge_density) continue;
        topo(i, j) = 1.0;
        if (!o.directed) topo(j, i) = 1.0;
      }
    set_adjacency(net, AttributeKind::topology, topo);
    if (o.with_content) {
      std::vector<Vector> features;
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector f(5);
        for (Eigen::Index t = 0; t < f.size(); ++t) f[t] = rng.uniform(0.01, 1.0);
        features.push_back(f / f.sum());
      }
      set_adjacency(net, AttributeKind::content, js_content_adjacency(features, topo));
    }
  }
  return ds;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hmcd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// ---------------------------------------------------------------------------
// Dense oracles

// Explicit 0/1 matrix with (i, j) = 1 iff rows[i] == cols[j].
inline Matrix dense_selector(const std::vector<std::string>& rows,
                             const std::vector<std::string>& cols) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (rows[i] == cols[j]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

// Diagonal Q from explicit loops over X D.
inline Matrix dense_Q(const Matrix& x, const Matrix& d, double eps) {
  const Matrix xd = x * d;
  Matrix q = Matrix::Zero(d.cols(), d.cols());
  for (Eigen::Index l = 0; l < d.cols(); ++l) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < xd.rows(); ++i) s += xd(i, l);
    q(l, l) = s > 0.0 ? s : eps;
  }
  return q;
}

inline Matrix dense_normalize_adjacency(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double r = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) r += m(i, j);
    if (r > 0.0)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) /= r;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) total += out(i, j);
  if (total > 0.0) out /= total;
  return out;
}

// Term-by-term full objective with explicit H, T and Q matrices. Blocks are
// visited in (network, attribute) order, matching the state layout.
inline double dense_objective(const MultiNetworkDataset& ds, const FactorizationState& st,
                              const Hyperparameters& hyper) {
  double total = 0.0;
  std::size_t bi = 0;
  for (const auto& net : ds.networks) {
    const Matrix H = dense_selector(net.overlapping_users, net.users);
    const Matrix T = dense_selector(net.users, ds.global_users);
    for (const auto& [kind, adj] : net.adjacency) {
      const auto& f = st.blocks[bi++];
      const auto w = hyper.weights(net.id, kind);
      const Matrix M = dense_normalize_adjacency(adj);
      const Matrix Mo = dense_normalize_adjacency(net.overlap_adjacency.at(kind));
      const Matrix Q = dense_Q(f.x, f.d, hyper.guard_eps);
      const Matrix Qo = dense_Q(f.x_o, f.d_o, hyper.guard_eps);
      total += w.alpha * (M - f.x * f.d * f.x.transpose()).squaredNorm();
      if (f.x_o.rows() > 0) {
        total += w.beta * (Mo - f.x_o * f.d_o * f.x_o.transpose()).squaredNorm();
        total += w.gamma * (H * f.x * Q - f.x_o * Qo).squaredNorm();
      }
      total += w.theta * (f.x * Q - T * st.c).squaredNorm();
    }
  }
  return total;
}

// theta-weighted consensus term sum_b theta ||X Q - T C||^2 as a function of C.
inline double dense_consensus_term(const MultiNetworkDataset& ds, const FactorizationState& st,
                                   const Matrix& c, const Hyperparameters& hyper) {
  double total = 0.0;
  std::size_t bi = 0;
  for (const auto& net : ds.networks) {
    const Matrix T = dense_selector(net.users, ds.global_users);
    for (const auto& [kind, adj] : net.adjacency) {
      const auto& f = st.blocks[bi++];
      const Matrix Q = dense_Q(f.x, f.d, hyper.guard_eps);
      total += hyper.weights(net.id, kind).theta * (f.x * Q - T * c).squaredNorm();
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Brute-force metric oracles

inline double brute_modularity(const Matrix& a, const std::vector<std::size_t>& labels) {
  const auto n = a.rows();
  double W = 0.0;
  std::vector<double> out(n, 0.0), in(n, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      W += a(i, j);
      out[i] += a(i, j);
      in[j] += a(i, j);
    }
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (labels[i] == labels[j]) q += a(i, j) - out[i] * in[j] / W;
  return q / W;
}

// Floyd-Warshall on the symmetrized, unweighted, same-community graph.
inline double brute_compactness(const Matrix& a, const std::vector<std::size_t>& labels,
                                std::size_t k, const std::vector<std::size_t>& overlap) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<bool> ov(n, false);
  for (auto i : overlap) ov[i] = true;
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == c) nodes.push_back(i);
    const std::size_t m = nodes.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dist(m, std::vector<double>(m, inf));
    double edges = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      dist[x][x] = 0.0;
      for (std::size_t y = 0; y < m; ++y) {
        if (x == y) continue;
        const auto i = static_cast<Eigen::Index>(nodes[x]), j = static_cast<Eigen::Index>(nodes[y]);
        if (a(i, j) > 0.0 || a(j, i) > 0.0) {
          dist[x][y] = 1.0;
          if (x < y && (ov[nodes[x]] || ov[nodes[y]])) edges += 1.0;
        }
      }
    }
    for (std::size_t z = 0; z < m; ++z)
      for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y)
          dist[x][y] = std::min(dist[x][y], dist[x][z] + dist[z][y]);
    double diam = 0.0;
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t y = 0; y < m; ++y)
        if (dist[x][y] < inf) diam = std::max(diam, dist[x][y]);
    if (diam > 0.0) total += edges / diam;
  }
  return total;
}

inline double brute_density(const Matrix& sim, const std::vector<std::size_t>& labels,
                            std::size_t k, const std::vector<std::size_t>& overlap) {
  const auto n = static_cast<std::size_t>(sim.rows());
  std::vector<bool> ov(n, false);
  for (auto i : overlap) ov[i] = true;
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i >= j || labels[i] != c || labels[j] != c || !(ov[i] || ov[j])) continue;
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        sum += (sim(ii, jj) + sim(jj, ii)) / 2.0;
        pairs += 1.0;
      }
    if (pairs > 0.0) total += sum / pairs;
  }
  return total / static_cast<double>(k);
}

// Contingency-table NMI by explicit loops over label values.
inline double brute_nmi(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const double n = static_cast<double>(a.size());
  const std::size_t ka = *std::max_element(a.begin(), a.end()) + 1;
  const std::size_t kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<double>> t(ka, std::vector<double>(kb, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) t[a[i]][b[i]] += 1.0;
  std::vector<double> ra(ka, 0.0), rb(kb, 0.0);
  for (std::size_t x = 0; x < ka; ++x)
    for (std::size_t y = 0; y < kb; ++y) {
      ra[x] += t[x][y];
      rb[y] += t[x][y];
    }
  double mi = 0.0, ha = 0.0, hb = 0.0;
  for (std::size_t x = 0; x < ka; ++x)
    for (std::size_t y = 0; y < kb; ++y)
      if (t[x][y] > 0.0) mi += t[x][y] / n * std::log(n * t[x][y] / (ra[x] * rb[y]));
  for (double v : ra)
    if (v > 0.0) ha -= v / n * std::log(v / n);
  for (double v : rb)
    if (v > 0.0) hb -= v / n * std::log(v / n);
  return mi / std::sqrt(ha * hb);
}

}  // namespace hmcd::testkit
