#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "hmcd/dataset.hpp"
#include "hmcd/rng.hpp"
#include "hmcd/types.hpp"

namespace hmcd {

// Planted-partition benchmark parameters. Defaults follow the multilayer
// benchmark settings: mu = 0.1, expected degrees on [5, 70] with exponent -2.
struct SynthConfig {
  std::size_t layers = 3;
  std::size_t nodes_per_layer = 400;
  std::size_t k_planted = 20;
  double mu = 0.1;
  double p = 0.7;
  double k_min = 5.0;
  double k_max = 70.0;
  double t_k = -2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (layers == 0) throw InputError("layers must be positive");
    if (nodes_per_layer == 0) throw InputError("nodes_per_layer must be positive");
    if (k_planted == 0) throw InputError("K_planted must be positive");
    if (!(mu > 0.0 && mu < 1.0)) throw InputError("mu must lie in (0, 1)");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0, 1]");
    if (!(k_min > 0.0) || !(k_min <= k_max) || !(k_max < static_cast<double>(nodes_per_layer)))
      throw InputError("need 0 < k_min <= k_max < nodes_per_layer");
    if (!(t_k < 0.0)) throw InputError("t_k must be negative");
  }
};

// Planted communities, one partition per layer, each of nodes_per_layer labels.
struct PlantedTruth {
  std::vector<Partition> layers;
};

// Layer 0 draws labels uniformly; every later layer copies each node's label
// from the previous layer with probability p and resamples it otherwise.
inline PlantedTruth plant_multilayer_partition(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "partition"));
  PlantedTruth truth;
  truth.layers.resize(cfg.layers);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto& part = truth.layers[l];
    part.k = cfg.k_planted;
    part.labels.resize(cfg.nodes_per_layer);
    for (std::size_t i = 0; i < cfg.nodes_per_layer; ++i) {
      if (l > 0 && rng.bernoulli(cfg.p))
        part.labels[i] = truth.layers[l - 1].labels[i];
      else
        part.labels[i] = static_cast<std::size_t>(rng.index(cfg.k_planted));
    }
  }
  return truth;
}

// Mean of the truncated power law k^t on [k_min, k_max].
inline double truncated_power_law_mean(double k_min, double k_max, double t) {
  if (k_min == k_max) return k_min;
  auto integral = [](double a, double b, double e) {  // int_a^b k^e dk
    return std::abs(e + 1.0) < 1e-12 ? std::log(b / a)
                                     : (std::pow(b, e + 1.0) - std::pow(a, e + 1.0)) / (e + 1.0);
  };
  return integral(k_min, k_max, t + 1.0) / integral(k_min, k_max, t);
}

// Inverse-CDF draw from the truncated power law k^t on [k_min, k_max].
inline double draw_power_law(Rng& rng, double k_min, double k_max, double t) {
  const double u = rng.uniform();
  if (k_min == k_max) return k_min;
  const double a = t + 1.0;
  if (std::abs(a) < 1e-12) return k_min * std::pow(k_max / k_min, u);
  const double lo = std::pow(k_min, a), hi = std::pow(k_max, a);
  return std::pow(lo + u * (hi - lo), 1.0 / a);
}

struct LayerGraph {
  Matrix adjacency;                         // symmetric 0/1, zero diagonal
  std::vector<double> expected_degrees;
  std::vector<std::size_t> empty_communities;  // planted labels with no members
};

// Degree-corrected block model: node i draws an expected degree d_i, and the
// pair (i, j) is linked with probability
//   d_i d_j [ (1 - mu) [c_i == c_j] / vol(c_i) + mu / vol(all) ]
// clamped to [0, 1], so expected degrees are matched before clamping.
inline LayerGraph generate_layer_edges(const Partition& truth, const SynthConfig& cfg,
                                       std::uint64_t stream = 0) {
  cfg.validate();
  const std::size_t n = truth.size();
  Rng rng(derive_seed(cfg.seed ^ splitmix64(stream), "edges"));
  LayerGraph g;
  g.expected_degrees.resize(n);
  for (auto& d : g.expected_degrees) d = draw_power_law(rng, cfg.k_min, cfg.k_max, cfg.t_k);

  std::vector<double> volume(truth.k, 0.0);
  std::vector<std::size_t> members(truth.k, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truth.labels[i] >= truth.k) throw InputError("planted label out of range");
    volume[truth.labels[i]] += g.expected_degrees[i];
    ++members[truth.labels[i]];
    total += g.expected_degrees[i];
  }
  for (std::size_t c = 0; c < truth.k; ++c)
    if (members[c] == 0) g.empty_communities.push_back(c);

  const auto ni = static_cast<Eigen::Index>(n);
  g.adjacency = Matrix::Zero(ni, ni);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = truth.labels[i] == truth.labels[j];
      const double within = same ? (1.0 - cfg.mu) / volume[truth.labels[i]] : 0.0;
      double prob = g.expected_degrees[i] * g.expected_degrees[j] * (within + cfg.mu / total);
      prob = std::min(1.0, std::max(0.0, prob));
      if (rng.uniform() < prob) {
        g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
        g.adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
      }
    }
  }
  return g;
}

inline std::string layer_id(std::size_t layer) { return "G" + std::to_string(layer + 1); }
inline std::string node_id(std::size_t node) { return "n" + std::to_string(node); }

// Every node of every layer is the same global user; all users overlap when
// there are at least two layers.
inline MultiNetworkDataset assemble_fully_aligned(const std::vector<Matrix>& layers) {
  MultiNetworkDataset ds;
  if (layers.empty()) return ds;
  const auto n = static_cast<std::size_t>(layers.front().rows());
  for (std::size_t i = 0; i < n; ++i) ds.global_users.push_back(node_id(i));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (static_cast<std::size_t>(layers[l].rows()) != n)
      throw InputError("fully aligned layers must have equal size");
    SocialNetwork net;
    net.id = layer_id(l);
    net.users = ds.global_users;
    if (layers.size() >= 2) net.overlapping_users = ds.global_users;
    set_adjacency(net, AttributeKind::topology, layers[l]);
    ds.networks.push_back(std::move(net));
  }
  return ds;
}

// Membership class of a node after carving three aligned layers.
enum class CarveClass { all_three, g1_g3, g1_g2, g2_g3 };

struct CarvedDataset {
  MultiNetworkDataset dataset;
  std::vector<CarveClass> node_class;  // per layer node index
};

// Turns three aligned layers of N nodes (N divisible by 4) into partially
// aligned networks: a random quarter stays aligned across all three layers;
// from the rest, a quarter loses its G2 alignment (G1&G3 users), then a
// quarter loses its G3 alignment (G1&G2 users), and the last quarter loses its
// G1 alignment (G2&G3 users). The detached copies become single-network users,
// a quarter per layer. Node order inside each layer is unchanged.
inline CarvedDataset carve_partial_alignment(const std::vector<Matrix>& layers,
                                             std::uint64_t seed) {
  if (layers.size() != 3) throw InputError("carving needs exactly 3 layers");
  const auto n = static_cast<std::size_t>(layers.front().rows());
  for (const auto& m : layers)
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n)
      throw InputError("carving needs square layers of equal size");
  if (n % 4 != 0) throw InputError("layer size must be divisible by 4");
  const std::size_t quarter = n / 4;

  Rng rng(derive_seed(seed, "carve"));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());

  // Sequential draws without replacement are a prefix split of a shuffle.
  CarvedDataset out;
  out.node_class.resize(n);
  const CarveClass sequence[] = {CarveClass::all_three, CarveClass::g1_g3, CarveClass::g1_g2,
                                 CarveClass::g2_g3};
  for (std::size_t r = 0; r < n; ++r) out.node_class[order[r]] = sequence[r / quarter];

  // Identity of node i in layer l: shared name unless the node was detached
  // from that layer.
  auto identity = [&](std::size_t l, std::size_t i) {
    const auto c = out.node_class[i];
    const bool detached = (c == CarveClass::g1_g3 && l == 1) ||
                          (c == CarveClass::g1_g2 && l == 2) ||
                          (c == CarveClass::g2_g3 && l == 0);
    return detached ? node_id(i) + "." + layer_id(l) : node_id(i);
  };

  auto& ds = out.dataset;
  std::unordered_set<std::string> seen;
  for (std::size_t l = 0; l < 3; ++l) {
    SocialNetwork net;
    net.id = layer_id(l);
    for (std::size_t i = 0; i < n; ++i) {
      net.users.push_back(identity(l, i));
      if (seen.insert(net.users.back()).second) ds.global_users.push_back(net.users.back());
    }
    ds.networks.push_back(std::move(net));
  }
  const auto shared = users_in_several_networks(ds.networks);
  const std::unordered_set<std::string> shared_set(shared.begin(), shared.end());
  for (std::size_t l = 0; l < 3; ++l) {
    auto& net = ds.networks[l];
    for (const auto& u : net.users)
      if (shared_set.count(u)) net.overlapping_users.push_back(u);
    set_adjacency(net, AttributeKind::topology, layers[l]);
  }
  return out;
}

struct SynthOutput {
  MultiNetworkDataset dataset;
  PlantedTruth truth;
  std::vector<std::size_t> empty_communities;  // per-layer flags, concatenated
};

enum class AlignmentMode { full, partial };

// Whole pipeline: planted partition, per-layer graphs, then alignment.
inline SynthOutput generate_dataset(const SynthConfig& cfg, AlignmentMode mode) {
  cfg.validate();
  if (mode == AlignmentMode::partial && (cfg.layers != 3 || cfg.nodes_per_layer % 4 != 0))
    throw InputError("partial alignment needs 3 layers with nodes_per_layer divisible by 4");
  SynthOutput out;
  out.truth = plant_multilayer_partition(cfg);
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto g = generate_layer_edges(out.truth.layers[l], cfg, l);
    out.empty_communities.insert(out.empty_communities.end(), g.empty_communities.begin(),
                                 g.empty_communities.end());
    layers.push_back(std::move(g.adjacency));
  }
  out.dataset = mode == AlignmentMode::full ? assemble_fully_aligned(layers)
                                            : carve_partial_alignment(layers, cfg.seed).dataset;
  return out;
}

}  // namespace hmcd
