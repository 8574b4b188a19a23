#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "hmcd/metrics.hpp"
#include "hmcd/synth.hpp"

using namespace hmcd;

namespace {

SynthConfig config(std::size_t n, std::size_t k, double mu, double p, std::uint64_t seed) {
  SynthConfig c;
  c.nodes_per_layer = n;
  c.k_planted = k;
  c.mu = mu;
  c.p = p;
  c.seed = seed;
  c.k_max = std::min(70.0, static_cast<double>(n) - 1.0);
  return c;
}

double agreement(const Partition& a, const Partition& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a.labels[i] == b.labels[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace

TEST(PlantPartition, FullCopyGivesIdenticalLayers) {
  const auto t = plant_multilayer_partition(config(200, 5, 0.1, 1.0, 3));
  ASSERT_EQ(t.layers.size(), 3u);
  EXPECT_EQ(t.layers[0].labels, t.layers[1].labels);
  EXPECT_EQ(t.layers[1].labels, t.layers[2].labels);
}

TEST(PlantPartition, NoCopyAgreesAtChanceLevel) {
  // Independent uniform labels agree with probability 1/K.
  const std::size_t n = 4000, k = 5;
  const auto t = plant_multilayer_partition(config(n, k, 0.1, 0.0, 4));
  const double expect = 1.0 / k;
  const double sigma = std::sqrt(expect * (1 - expect) / n);
  EXPECT_NEAR(agreement(t.layers[0], t.layers[1]), expect, 3 * sigma);
  EXPECT_NEAR(agreement(t.layers[1], t.layers[2]), expect, 3 * sigma);
}

TEST(PlantPartition, CopyProbabilityControlsAgreement) {
  // Agreement = p + (1 - p) / K.
  const std::size_t n = 4000, k = 4;
  for (double p : {0.3, 0.7}) {
    const auto t = plant_multilayer_partition(config(n, k, 0.1, p, 5));
    const double expect = p + (1 - p) / k;
    const double sigma = std::sqrt(expect * (1 - expect) / n);
    EXPECT_NEAR(agreement(t.layers[0], t.layers[1]), expect, 3 * sigma) << "p " << p;
  }
}

TEST(PlantPartition, LayerNmiGrowsWithCopyProbability) {
  double last = -1.0;
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto t = plant_multilayer_partition(config(2000, 4, 0.1, p, 6));
    const double v = nmi(t.layers[0], t.layers[1]);
    EXPECT_GE(v, last) << "p " << p;
    last = v;
  }
  EXPECT_EQ(last, 1.0);
}

TEST(PowerLaw, TruncatedMeanMatchesClosedForms) {
  // t = -2: mean = ln(b/a) / (1/a - 1/b).
  EXPECT_NEAR(truncated_power_law_mean(5, 70, -2), std::log(14.0) / (0.2 - 1.0 / 70), 1e-12);
  // t = -1: mean = (b - a) / ln(b/a).
  EXPECT_NEAR(truncated_power_law_mean(2, 8, -1), 6 / std::log(4.0), 1e-12);
  EXPECT_EQ(truncated_power_law_mean(3, 3, -2), 3.0);
}

TEST(PowerLaw, DrawsStayInRangeAndMatchTheMean) {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = draw_power_law(rng, 5, 70, -2);
    ASSERT_GE(d, 5.0);
    ASSERT_LE(d, 70.0);
    sum += d;
  }
  EXPECT_NEAR(sum / n, truncated_power_law_mean(5, 70, -2), 0.1);
}

TEST(LayerEdges, SymmetricBinaryZeroDiagonal) {
  const auto cfg = config(120, 4, 0.2, 0.5, 8);
  const auto t = plant_multilayer_partition(cfg);
  const auto g = generate_layer_edges(t.layers[0], cfg);
  EXPECT_EQ(g.adjacency, g.adjacency.transpose());
  EXPECT_EQ(g.adjacency.diagonal().sum(), 0.0);
  for (Eigen::Index i = 0; i < g.adjacency.size(); ++i) {
    const double v = g.adjacency.data()[i];
    EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
}

TEST(LayerEdges, MeanDegreeNearThePowerLawMean) {
  // Clamping probabilities at 1 only loses a little at this size.
  auto cfg = config(1000, 10, 0.1, 0.5, 9);
  cfg.k_max = 50;
  const auto t = plant_multilayer_partition(cfg);
  const auto g = generate_layer_edges(t.layers[0], cfg);
  const double mean_degree = g.adjacency.sum() / 1000.0;
  const double target = truncated_power_law_mean(cfg.k_min, cfg.k_max, cfg.t_k);
  EXPECT_NEAR(mean_degree, target, 0.25 * target);
}

TEST(LayerEdges, SmallMixingKeepsEdgesInside) {
  const auto cfg = config(400, 4, 0.01, 0.5, 10);
  const auto t = plant_multilayer_partition(cfg);
  const auto g = generate_layer_edges(t.layers[0], cfg);
  double cross = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < 400; ++i)
    for (Eigen::Index j = i + 1; j < 400; ++j)
      if (g.adjacency(i, j) > 0) {
        total += 1;
        cross += t.layers[0].labels[i] != t.layers[0].labels[j];
      }
  ASSERT_GT(total, 0);
  EXPECT_LT(cross / total, 0.1);
}

TEST(LayerEdges, FullMixingMakesCommunitiesInvisible) {
  // mu = 1 is outside the validated range, so use the largest allowed value;
  // within- and cross-community pair densities then agree closely.
  auto cfg = config(600, 3, 0.999, 0.5, 11);
  const auto t = plant_multilayer_partition(cfg);
  const auto g = generate_layer_edges(t.layers[0], cfg);
  double in_e = 0, in_p = 0, out_e = 0, out_p = 0;
  for (Eigen::Index i = 0; i < 600; ++i)
    for (Eigen::Index j = i + 1; j < 600; ++j) {
      const bool same = t.layers[0].labels[i] == t.layers[0].labels[j];
      (same ? in_e : out_e) += g.adjacency(i, j);
      (same ? in_p : out_p) += 1;
    }
  const double din = in_e / in_p, dout = out_e / out_p;
  const double sigma = std::sqrt(din * (1 - din) / in_p + dout * (1 - dout) / out_p);
  // Degree heterogeneity widens the spread; allow a few sigma.
  EXPECT_NEAR(din, dout, 5 * sigma);
}

TEST(LayerEdges, FlagsEmptyCommunities) {
  Partition p;
  p.k = 3;
  p.labels = {0, 0, 2, 2, 0, 2};
  auto cfg = config(6, 3, 0.1, 0.5, 1);
  cfg.k_min = 1;
  cfg.k_max = 3;
  EXPECT_EQ(generate_layer_edges(p, cfg).empty_communities, (std::vector<std::size_t>{1}));
}

TEST(Carving, SmallExampleCounts) {
  std::vector<Matrix> layers(3, Matrix::Zero(8, 8));
  const auto out = carve_partial_alignment(layers, 1);
  std::map<CarveClass, int> count;
  for (auto c : out.node_class) ++count[c];
  for (auto c : {CarveClass::all_three, CarveClass::g1_g3, CarveClass::g1_g2, CarveClass::g2_g3})
    EXPECT_EQ(count[c], 2);
  // 8 base names plus one detached copy for each of the 6 pairwise nodes.
  EXPECT_EQ(out.dataset.global_users.size(), 14u);
  for (const auto& net : out.dataset.networks) {
    EXPECT_EQ(net.size(), 8u);
    EXPECT_EQ(net.overlap_size(), 6u);
  }
  EXPECT_NO_THROW(validate(out.dataset));
}

TEST(Carving, MembershipClassesAtN400) {
  std::vector<Matrix> layers(3, Matrix::Zero(400, 400));
  const auto out = carve_partial_alignment(layers, 5);
  std::map<std::string, std::set<std::size_t>> where;
  for (std::size_t s = 0; s < 3; ++s)
    for (const auto& u : out.dataset.networks[s].users) where[u].insert(s);
  std::map<std::set<std::size_t>, int> classes;
  for (const auto& [u, nets] : where) ++classes[nets];
  EXPECT_EQ(classes.size(), 7u);
  for (const auto& [nets, n] : classes) EXPECT_EQ(n, 100);
}

TEST(Carving, KeepsNodeOrderAndAdjacency) {
  std::vector<Matrix> layers;
  for (int l = 0; l < 3; ++l) layers.push_back(Matrix::Random(12, 12).cwiseAbs());
  const auto out = carve_partial_alignment(layers, 3);
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& net = out.dataset.networks[l];
    EXPECT_EQ(net.adjacency.at(AttributeKind::topology), layers[l]);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(net.users[i].rfind(node_id(i), 0), 0u);
  }
}

TEST(Carving, RejectsBadShapes) {
  EXPECT_THROW(carve_partial_alignment(std::vector<Matrix>(2, Matrix::Zero(4, 4)), 0), InputError);
  EXPECT_THROW(carve_partial_alignment(std::vector<Matrix>(3, Matrix::Zero(6, 6)), 0), InputError);
}

TEST(GenerateDataset, FullAlignmentSharesEveryUser) {
  const auto out = generate_dataset(config(40, 3, 0.1, 0.5, 12), AlignmentMode::full);
  ASSERT_EQ(out.dataset.networks.size(), 3u);
  EXPECT_EQ(out.dataset.global_users.size(), 40u);
  for (const auto& net : out.dataset.networks) {
    EXPECT_EQ(net.users, out.dataset.global_users);
    EXPECT_EQ(net.overlapping_users, out.dataset.global_users);
  }
}

TEST(GenerateDataset, SameSeedSameOutput) {
  const auto cfg = config(80, 4, 0.1, 0.6, 13);
  const auto a = generate_dataset(cfg, AlignmentMode::partial);
  const auto b = generate_dataset(cfg, AlignmentMode::partial);
  EXPECT_EQ(a.dataset.global_users, b.dataset.global_users);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(a.dataset.networks[s].users, b.dataset.networks[s].users);
    EXPECT_EQ(a.dataset.networks[s].adjacency.at(AttributeKind::topology),
              b.dataset.networks[s].adjacency.at(AttributeKind::topology));
    EXPECT_EQ(a.truth.layers[s].labels, b.truth.layers[s].labels);
  }
  auto other = cfg;
  other.seed = 14;
  EXPECT_NE(generate_dataset(other, AlignmentMode::partial).truth.layers[0].labels,
            a.truth.layers[0].labels);
}

TEST(SynthConfig, Validation) {
  auto c = config(100, 4, 0.1, 0.5, 0);
  EXPECT_NO_THROW(c.validate());
  c.mu = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c.mu = 0.1;
  c.p = 1.5;
  EXPECT_THROW(c.validate(), InputError);
  c.p = 0.5;
  c.k_max = 100;
  EXPECT_THROW(c.validate(), InputError);
  c.k_max = 50;
  c.t_k = 0.5;
  EXPECT_THROW(c.validate(), InputError);
  c.t_k = -2;
  EXPECT_THROW(generate_dataset(config(10, 2, 0.1, 0.5, 0), AlignmentMode::partial), InputError);
}
