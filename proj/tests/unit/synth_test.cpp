#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "bhlr/errors.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/synth.hpp"
#include "oracles.hpp"

using namespace bhlr;

namespace {

PlantedModel planted(EmbeddingMap e, LinkKind link, std::size_t order, Noise noise, std::uint64_t seed = 1) {
  Rng rng(seed);
  return {SimilarityModel::initialized(e, link, order, rng), noise, VectorLaw::UniformCube};
}

Hypernetwork graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  Hypernetwork net(n, 1, 2, std::vector<double>(n, 0.0), IndexPolicy::IncreasingOnly);
  for (auto [a, b] : edges) net.set_weight({a, b}, 1.0);
  return net;
}

}  // namespace

TEST(Generate, NoiselessPlantHasZeroLossAtTruth) {
  const auto pm = planted(EmbeddingMap::linear(3, 2), LinkKind::Identity, 2, Noise{NoiseKind::Gaussian, 0.0});
  const auto net = generate(pm, 12, IndexPolicy::IncreasingOnly, 5);
  LossSpec spec;
  spec.divergence = GeneratingFunction::quadratic();
  EXPECT_EQ(full_loss(spec, pm.true_model, net), 0.0);
  for (const auto& idx : oracle::brute_index_set(12, 2, IndexPolicy::IncreasingOnly))
    EXPECT_EQ(net.weight(idx), similarity(pm.true_model, net.tuple(idx)));
}

TEST(Generate, BernoulliHalfRate) {
  // theta = 0 under a sigmoid link gives mu* = 0.5 everywhere.
  PlantedModel pm{SimilarityModel(EmbeddingMap::linear(2, 1), LinkKind::Sigmoid, 2, {0.0, 0.0}),
                  Noise{NoiseKind::Bernoulli, 0.0}, VectorLaw::Gaussian};
  const std::size_t n = 142;  // C(142, 2) = 10011 tuples
  const auto net = generate(pm, n, IndexPolicy::IncreasingOnly, 9);
  const double total = n * (n - 1) / 2.0;
  const double rate = static_cast<double>(net.weights().size()) / total;
  EXPECT_NEAR(rate, 0.5, 3.0 * std::sqrt(0.25 / total));
  for (const auto& [idx, w] : net.weights()) EXPECT_EQ(w, 1.0);
}

TEST(Generate, PoissonMean) {
  PlantedModel pm{SimilarityModel(EmbeddingMap::linear(1, 1), LinkKind::Exp, 1, {0.0}), Noise{NoiseKind::Poisson, 0.0},
                  VectorLaw::UniformCube};
  const std::size_t n = 20000;
  const auto net = generate(pm, n, IndexPolicy::AllTuples, 3);
  double sum = 0.0;
  for (const auto& [idx, w] : net.weights()) sum += w;
  EXPECT_NEAR(sum / n, 1.0, 4.0 * std::sqrt(1.0 / n));
}

TEST(Generate, SameSeedSameNetwork) {
  const auto pm = planted(EmbeddingMap::mlp1(3, 4, 2), LinkKind::Sigmoid, 3, Noise{NoiseKind::Bernoulli, 0.0});
  const auto a = generate(pm, 10, IndexPolicy::IncreasingOnly, 4);
  const auto b = generate(pm, 10, IndexPolicy::IncreasingOnly, 4);
  const auto c = generate(pm, 10, IndexPolicy::IncreasingOnly, 5);
  EXPECT_TRUE(std::equal(a.vectors().begin(), a.vectors().end(), b.vectors().begin()));
  EXPECT_EQ(a.sorted_edges(), b.sorted_edges());
  EXPECT_NE(a.sorted_edges(), c.sorted_edges());
}

TEST(Generate, OneDrawPerCanonicalIndex) {
  const auto pm = planted(EmbeddingMap::linear(2, 2), LinkKind::Identity, 2, Noise{NoiseKind::Gaussian, 0.5});
  const auto all = generate(pm, 6, IndexPolicy::AllTuples, 2);
  EXPECT_EQ(all.weights().size(), 21u);  // multisets of size 2 over 6 nodes
  for (const auto& [idx, w] : all.weights()) {
    EXPECT_TRUE(idx.is_canonical());
    for (const auto& perm : distinct_permutations(idx)) EXPECT_EQ(all.weight(perm), w);
  }
  const auto distinct = generate(pm, 6, IndexPolicy::DistinctEntries, 2);
  EXPECT_EQ(distinct.weights().size(), 15u);
  for (const auto& [idx, w] : distinct.weights()) EXPECT_NE(idx[0], idx[1]);
}

TEST(Generate, RangeAndPolicyErrors) {
  const auto ident = planted(EmbeddingMap::linear(2, 2), LinkKind::Identity, 2, Noise{NoiseKind::Bernoulli, 0.0});
  EXPECT_THROW(generate(ident, 5, IndexPolicy::IncreasingOnly, 1), ConfigError);
  const auto pois = planted(EmbeddingMap::linear(2, 2), LinkKind::Identity, 2, Noise{NoiseKind::Poisson, 0.0});
  EXPECT_THROW(generate(pois, 5, IndexPolicy::IncreasingOnly, 1), ConfigError);
  const auto ok = planted(EmbeddingMap::linear(2, 2), LinkKind::Sigmoid, 2, Noise{NoiseKind::Bernoulli, 0.0});
  EXPECT_THROW(generate(ok, 5, IndexPolicy::Explicit, 1), ConfigError);
  EXPECT_THROW(generate(ok, 1, IndexPolicy::IncreasingOnly, 1), ConfigError);
}

TEST(Generate, ParseNoise) {
  EXPECT_EQ(parse_noise("poisson").kind, NoiseKind::Poisson);
  EXPECT_DOUBLE_EQ(parse_noise("gaussian:0.25").sigma, 0.25);
  EXPECT_THROW(parse_noise("gaussian:-1"), ConfigError);
  EXPECT_THROW(parse_noise("cauchy"), ConfigError);
}

TEST(Lift, Triangle) {
  const auto net = graph(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_EQ(lift_links_to_hyperlinks(net, LiftMode::Connected).weight({0, 1, 2}), 1.0);
  EXPECT_EQ(lift_links_to_hyperlinks(net, LiftMode::FullyConnected).weight({0, 1, 2}), 1.0);
}

TEST(Lift, Path) {
  const auto net = graph(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(lift_links_to_hyperlinks(net, LiftMode::Connected).weight({2, 0, 1}), 1.0);
  EXPECT_EQ(lift_links_to_hyperlinks(net, LiftMode::FullyConnected).weight({0, 1, 2}), 0.0);
}

TEST(Lift, NoEdges) {
  const auto net = graph(4, {});
  EXPECT_TRUE(lift_links_to_hyperlinks(net, LiftMode::Connected).weights().empty());
  EXPECT_TRUE(lift_links_to_hyperlinks(net, LiftMode::FullyConnected).weights().empty());
}

TEST(Lift, NonBinaryWeights) {
  auto net = graph(3, {{0, 1}});
  net.set_weight({1, 2}, 0.5);
  EXPECT_THROW(lift_links_to_hyperlinks(net, LiftMode::Connected), NonBinaryWeights);
}

TEST(Lift, MatchesBreadthFirstOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = trial < 20 ? 12 : 30;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        if (rng.bernoulli(0.3)) {
          adj[a][b] = adj[b][a] = true;
          edges.push_back({a, b});
        }
    const auto net = graph(n, edges);
    const auto conn = lift_links_to_hyperlinks(net, LiftMode::Connected);
    const auto full = lift_links_to_hyperlinks(net, LiftMode::FullyConnected);
    EXPECT_EQ(conn.order(), 3u);
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = a + 1; b < n; ++b)
        for (NodeId c = b + 1; c < n; ++c) {
          const HyperIndex idx{a, b, c};
          EXPECT_EQ(conn.weight(idx) == 1.0, oracle::triple_connected(adj, a, b, c));
          EXPECT_EQ(full.weight(idx) == 1.0, adj[a][b] && adj[b][c] && adj[a][c]);
          if (full.weight(idx) == 1.0) EXPECT_EQ(conn.weight(idx), 1.0);
        }
  }
}

TEST(NegativeProtocol, FullyPositiveNetworkGivesPositivesOnly) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < 5; ++a)
    for (NodeId b = a + 1; b < 5; ++b) edges.push_back({a, b});
  const auto set = negative_candidate_protocol(graph(5, edges), 10, 1);
  EXPECT_EQ(set.indices.size(), 10u);
  for (int l : set.labels) EXPECT_EQ(l, 1);
  EXPECT_TRUE(set.insufficient);
}

TEST(NegativeProtocol, TenPairsPerAnchor) {
  Rng rng(7);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < 40; ++a)
    for (NodeId b = a + 1; b < 40; ++b)
      if (rng.bernoulli(0.1)) edges.push_back({a, b});
  const auto net = graph(40, edges);
  const auto set = negative_candidate_protocol(net, 10, 3);
  EXPECT_FALSE(set.insufficient);
  std::map<NodeId, int> per_node;
  std::set<HyperIndex> seen;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < set.indices.size(); ++i) {
    const auto& idx = set.indices[i];
    EXPECT_TRUE(seen.insert(idx).second);
    EXPECT_TRUE(idx.is_canonical());
    if (set.labels[i] == 1) {
      ++positives;
      EXPECT_EQ(net.weight(idx), 1.0);
    } else {
      EXPECT_EQ(net.weight(idx), 0.0);
      EXPECT_NE(idx[0], idx[1]);
      for (NodeId v : idx) ++per_node[v];
    }
  }
  EXPECT_EQ(positives, edges.size());
  for (NodeId a = 0; a < 40; ++a) EXPECT_GE(per_node[a], 10);

  const auto again = negative_candidate_protocol(net, 10, 3);
  EXPECT_EQ(again.indices, set.indices);
}

TEST(NegativeProtocol, FifteenTriplesPerAnchor) {
  Rng rng(8);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < 25; ++a)
    for (NodeId b = a + 1; b < 25; ++b)
      if (rng.bernoulli(0.3)) edges.push_back({a, b});
  const auto net3 = lift_links_to_hyperlinks(graph(25, edges), LiftMode::FullyConnected);
  const auto set = negative_candidate_protocol(net3, 15, 4);
  std::map<NodeId, int> per_node;
  for (std::size_t i = 0; i < set.indices.size(); ++i) {
    if (set.labels[i] == 1) continue;
    const auto& idx = set.indices[i];
    EXPECT_EQ(net3.weight(idx), 0.0);
    EXPECT_TRUE(idx[0] < idx[1] && idx[1] < idx[2]);
    for (NodeId v : idx) ++per_node[v];
  }
  for (NodeId a = 0; a < 25; ++a) EXPECT_GE(per_node[a], 15);
}
