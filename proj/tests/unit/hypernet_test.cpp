#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bhlr/errors.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/random.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace bhlr;
using testing_support::TempDir;

namespace {

Hypernetwork zeros(std::size_t n, std::size_t order, IndexPolicy policy) {
  return Hypernetwork(n, 1, order, std::vector<double>(n, 0.0), policy);
}

std::vector<HyperIndex> collect(const Hypernetwork& net) {
  std::vector<HyperIndex> out;
  for (const auto& idx : enumerate_index_set(net)) out.push_back(idx);
  return out;
}

}  // namespace

TEST(Canonicalize, SortsAndIsIdempotent) {
  const std::vector<NodeId> raw{3, 1, 4};
  const auto c = canonicalize(raw, 5);
  EXPECT_EQ(c, (HyperIndex{1, 3, 4}));
  EXPECT_EQ(canonicalize(c, 5), c);
  EXPECT_TRUE(c.is_canonical());
  EXPECT_THROW(canonicalize(HyperIndex{0, 5}, 5), OutOfRange);
}

TEST(Hypernetwork, SymmetricLookup) {
  auto net = zeros(3, 2, IndexPolicy::AllTuples);
  net.set_weight({2, 1}, 0.75);
  EXPECT_EQ(net.weight({1, 2}), 0.75);
  EXPECT_EQ(net.weight({2, 1}), 0.75);
  EXPECT_EQ(net.weight({0, 1}), 0.0);
  EXPECT_TRUE(net.has_weight({2, 1}));
  EXPECT_THROW(net.set_weight({0, 1, 2}, 1.0), DimMismatch);
}

TEST(Hypernetwork, PermutationInvariance) {
  Rng rng(5);
  auto net = zeros(9, 4, IndexPolicy::AllTuples);
  std::vector<HyperIndex> stored;
  for (int e = 0; e < 40; ++e) {
    std::vector<NodeId> ids(4);
    for (auto& v : ids) v = static_cast<NodeId>(rng.uniform_index(9));
    HyperIndex idx(ids);
    net.set_weight(idx, rng.uniform(-2.0, 2.0));
    stored.push_back(idx);
  }
  for (const auto& idx : stored) {
    std::vector<NodeId> ids(idx.begin(), idx.end());
    const double w = net.weight(idx);
    for (int k = 0; k < 10; ++k) {
      for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_index(i)]);
      EXPECT_EQ(net.weight(HyperIndex(ids)), w);
    }
  }
}

TEST(Hypernetwork, AddEdgeRejectsConflicts) {
  auto net = zeros(3, 2, IndexPolicy::AllTuples);
  net.add_edge({0, 1}, 1.0);
  EXPECT_NO_THROW(net.add_edge({1, 0}, 1.0));
  EXPECT_THROW(net.add_edge({1, 0}, 2.0), DuplicateEdge);
}

TEST(Enumerate, IncreasingOnlyByHand) {
  const auto net = zeros(3, 2, IndexPolicy::IncreasingOnly);
  const std::vector<HyperIndex> expected{{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(collect(net), expected);
  EXPECT_EQ(net.index_count(), 3u);
}

TEST(Enumerate, AllTuples) {
  const auto net = zeros(3, 2, IndexPolicy::AllTuples);
  EXPECT_EQ(collect(net).size(), 9u);
  EXPECT_EQ(net.index_count(), 9u);
}

TEST(Enumerate, FirstEntryFixedAtFive) {
  const auto net = zeros(7, 2, IndexPolicy::AllTuples);
  std::vector<HyperIndex> slice;
  for (const auto& idx : IndexRange(net, FixedEntries{{0}, {4}})) slice.push_back(idx);
  ASSERT_EQ(slice.size(), 7u);
  for (NodeId b = 0; b < 7; ++b) EXPECT_EQ(slice[b], (HyperIndex{4, b}));
}

TEST(Enumerate, MatchesBruteForceForEveryPolicy) {
  for (auto policy : {IndexPolicy::AllTuples, IndexPolicy::DistinctEntries, IndexPolicy::IncreasingOnly}) {
    for (std::size_t U = 1; U <= 4; ++U) {
      for (std::size_t n = 1; n <= 6; ++n) {
        const auto net = zeros(n, U, policy);
        const auto expected = oracle::brute_index_set(n, U, policy);
        EXPECT_EQ(collect(net), expected) << to_string(policy) << " n=" << n << " U=" << U;
        EXPECT_EQ(net.index_count(), expected.size());
      }
    }
  }
}

TEST(Enumerate, IncreasingCardinalityIsBinomial) {
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t U = 1; U <= n; ++U) {
      std::uint64_t binom = 1;
      for (std::size_t k = 0; k < U; ++k) binom = binom * (n - k) / (k + 1);
      std::size_t count = 0;
      for ([[maybe_unused]] const auto& idx : enumerate_index_set(zeros(n, U, IndexPolicy::IncreasingOnly))) ++count;
      EXPECT_EQ(count, binom) << n << " " << U;
    }
  }
}

TEST(Enumerate, ExplicitListsInOrder) {
  auto net = zeros(4, 2, IndexPolicy::Explicit);
  net.set_explicit_indices({{2, 3}, {0, 1}, {2, 3}});
  const std::vector<HyperIndex> expected{{2, 3}, {0, 1}};
  EXPECT_EQ(collect(net), expected);
  EXPECT_EQ(net.index_count(), 2u);
  EXPECT_TRUE(net.in_index_set({0, 1}));
  EXPECT_FALSE(net.in_index_set({1, 2}));
}

TEST(Enumerate, EmptyWhenNSmallerThanU) {
  EXPECT_TRUE(collect(zeros(2, 3, IndexPolicy::IncreasingOnly)).empty());
  EXPECT_EQ(zeros(2, 3, IndexPolicy::DistinctEntries).index_count(), 0u);
}

TEST(Files, LoadVectors) {
  TempDir dir;
  const auto path = dir.write("v.txt", "1 2\n3.5 -4\n0 1e-3\n");
  const auto t = load_vectors(path);
  EXPECT_EQ(t.n, 3u);
  EXPECT_EQ(t.p, 2u);
  EXPECT_EQ(t.values, (std::vector<double>{1, 2, 3.5, -4, 0, 1e-3}));
  EXPECT_THROW(load_vectors(dir.write("bad.txt", "1 2\n3\n")), ParseError);
  EXPECT_THROW(load_vectors(dir.file("missing.txt")), std::ios_base::failure);
}

TEST(Files, LoadHyperedgesCanonicalizes) {
  TempDir dir;
  const auto path = dir.write("e.txt", "# comment\n0 2 1 1.0\n\n");
  const auto edges = load_hyperedges(path, 3);
  ASSERT_EQ(edges.weights.size(), 1u);
  EXPECT_EQ(edges.weights.at(HyperIndex{0, 1, 2}), 1.0);
}

TEST(Files, ConflictingSymmetricLinesAreDuplicates) {
  TempDir dir;
  EXPECT_THROW(load_hyperedges(dir.write("e.txt", "0 1 1.0\n1 0 2.0\n"), 2), DuplicateEdge);
  EXPECT_NO_THROW(load_hyperedges(dir.write("f.txt", "0 1 1.0\n1 0 1.0\n"), 2));
}

TEST(Files, HyperedgeErrors) {
  TempDir dir;
  try {
    load_hyperedges(dir.write("e.txt", "0 1 1.0\n0 x 1.0\n"), 2);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(load_hyperedges(dir.write("f.txt", "0 1 1\n"), 3), ParseError);
  EXPECT_THROW(load_hyperedges(dir.write("g.txt", "0 9 1\n"), 2, 4), OutOfRange);
}

TEST(Files, RoundTrip) {
  TempDir dir;
  Rng rng(9);
  std::vector<double> x(12);
  for (double& v : x) v = rng.normal();
  Hypernetwork net(4, 3, 2, x, IndexPolicy::IncreasingOnly);
  net.set_weight({0, 3}, 0.1 + 0.2);
  net.set_weight({1, 2}, 1.0 / 3.0);
  save_vectors(dir.file("v.txt"), 3, net.vectors());
  save_hyperedges(dir.file("e.txt"), net);
  const auto back = load_hypernetwork(dir.file("v.txt"), dir.file("e.txt"), 2, IndexPolicy::IncreasingOnly);
  EXPECT_TRUE(std::equal(back.vectors().begin(), back.vectors().end(), x.begin()));
  EXPECT_EQ(back.weight({3, 0}), 0.1 + 0.2);
  EXPECT_EQ(back.weight({1, 2}), 1.0 / 3.0);
}

TEST(Files, ExplicitPolicyKeepsListedZeros) {
  TempDir dir;
  dir.write("v.txt", "0\n1\n2\n");
  dir.write("e.txt", "0 1 0\n1 2 3\n");
  const auto net = load_hypernetwork(dir.file("v.txt"), dir.file("e.txt"), 2, IndexPolicy::Explicit);
  EXPECT_EQ(net.index_count(), 2u);
  EXPECT_EQ(net.weight({2, 1}), 3.0);
}

TEST(FromTensor, SingleCell) {
  const auto net = from_tensor(DenseTensor{{1, 1}, {5.0}});
  EXPECT_EQ(net.n(), 2u);
  EXPECT_EQ(net.dim(), 2u);
  EXPECT_EQ(std::vector<double>(net.vectors().begin(), net.vectors().end()), (std::vector<double>{1, 0, 0, 1}));
  EXPECT_EQ(net.weight({0, 1}), 5.0);
  EXPECT_EQ(net.weight({1, 0}), 5.0);
}

TEST(FromTensor, RowVector) {
  const auto net = from_tensor(DenseTensor{{1, 2}, {2.5, -1.0}});
  EXPECT_EQ(net.weight({0, 1}), 2.5);
  EXPECT_EQ(net.weight({0, 2}), -1.0);
  EXPECT_EQ(net.index_count(), 2u);
}

TEST(FromTensor, RoundTripOnRandomTensors) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t U = 1 + rng.uniform_index(3);
    std::vector<std::size_t> shape(U);
    for (auto& s : shape) s = 1 + rng.uniform_index(3);
    const std::size_t cells = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    std::vector<double> values(cells);
    for (double& v : values) v = rng.bernoulli(0.2) ? 0.0 : rng.normal();
    const auto net = from_tensor(DenseTensor{shape, values});
    std::vector<std::size_t> j(U, 0);
    for (std::size_t flat = 0; flat < cells; ++flat) {
      std::vector<NodeId> idx(U);
      std::size_t offset = 0;
      for (std::size_t u = 0; u < U; ++u) {
        idx[u] = static_cast<NodeId>(offset + j[u]);
        offset += shape[u];
      }
      EXPECT_EQ(net.weight(HyperIndex(idx)), values[flat]);
      EXPECT_TRUE(net.in_index_set(HyperIndex(idx)));
      for (std::size_t u = U; u-- > 0;) {
        if (++j[u] < shape[u]) break;
        j[u] = 0;
      }
    }
  }
}

TEST(FromTensor, ShapeErrors) {
  EXPECT_THROW(from_tensor(DenseTensor{{2, 2}, {1, 2, 3}}), ShapeError);
  EXPECT_THROW(from_tensor(DenseTensor{{}, {}}), ShapeError);
  TempDir dir;
  const auto t = load_tensor_json(dir.write("t.json", R"({"shape": [2, 1], "values": [1, 2]})"));
  EXPECT_EQ(t.shape, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(from_tensor(t).weight({1, 2}), 2.0);
}

TEST(Hypernetwork, InducedSubnetworkRelabels) {
  Hypernetwork net(4, 1, 2, {0, 1, 2, 3}, IndexPolicy::IncreasingOnly);
  net.set_weight({1, 3}, 1.0);
  net.set_weight({0, 1}, 2.0);
  const std::vector<NodeId> keep{3, 1};
  const auto sub = induced_subnetwork(net, keep);
  EXPECT_EQ(sub.n(), 2u);
  EXPECT_EQ(sub.vector(0)[0], 3.0);
  EXPECT_EQ(sub.weight({0, 1}), 1.0);
  EXPECT_EQ(sub.weights().size(), 1u);
}

TEST(Hypernetwork, DistinctPermutations) {
  EXPECT_EQ(distinct_permutations({0, 0, 1}).size(), 3u);
  EXPECT_EQ(distinct_permutations({0, 1, 2}).size(), 6u);
}

TEST(FormatDouble, RoundTrips) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}
