#include "bhlr/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "bhlr/errors.hpp"
#include "counting.hpp"

namespace bhlr {
namespace {

// Calls f on every non-decreasing (strict = false) or strictly increasing
// U-tuple over [0, n), lexicographically.
template <class F>
void for_each_canonical(std::size_t n, std::size_t U, bool strict, F&& f) {
  if (U == 0 || n == 0) return;
  if (strict && n < U) return;
  std::vector<NodeId> idx(U);
  for (std::size_t k = 0; k < U; ++k) idx[k] = strict ? static_cast<NodeId>(k) : 0;
  while (true) {
    f(idx);
    std::size_t k = U;
    while (k > 0) {
      --k;
      const std::size_t limit = strict ? n - (U - k) : n - 1;
      if (idx[k] < limit) {
        ++idx[k];
        for (std::size_t r = k + 1; r < U; ++r) idx[r] = strict ? idx[r - 1] + 1 : idx[k];
        break;
      }
      if (k == 0) return;
    }
  }
}

void check_range(const PlantedModel& planted) {
  const Interval r = link_range(planted.true_model.link());
  switch (planted.noise.kind) {
    case NoiseKind::Bernoulli:
      if (r.lo < 0.0 || r.hi > 1.0) throw ConfigError("Bernoulli noise needs a link with range inside [0, 1] (sigmoid)");
      break;
    case NoiseKind::Poisson:
      if (r.lo < 0.0) throw ConfigError("Poisson noise needs a non-negative link (sigmoid or exp)");
      break;
    case NoiseKind::Gaussian:
      if (!(planted.noise.sigma >= 0.0)) throw ConfigError("Gaussian noise sigma must be non-negative");
      break;
  }
}

}  // namespace

Noise parse_noise(std::string_view key) {
  if (key == "bernoulli") return {NoiseKind::Bernoulli, 0.0};
  if (key == "poisson") return {NoiseKind::Poisson, 0.0};
  if (key == "gaussian") return {NoiseKind::Gaussian, 1.0};
  if (key.starts_with("gaussian:")) {
    const auto text = key.substr(9);
    double sigma = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), sigma);
    if (ec != std::errc() || ptr != text.data() + text.size() || !(sigma >= 0.0))
      throw ConfigError("bad Gaussian sigma in '" + std::string(key) + "'");
    return {NoiseKind::Gaussian, sigma};
  }
  throw ConfigError("unknown noise '" + std::string(key) + "' (bernoulli|poisson|gaussian:<sigma>)");
}

VectorLaw parse_vector_law(std::string_view key) {
  if (key == "uniform") return VectorLaw::UniformCube;
  if (key == "gaussian") return VectorLaw::Gaussian;
  throw ConfigError("unknown vector law '" + std::string(key) + "' (uniform|gaussian)");
}

LiftMode parse_lift_mode(std::string_view key) {
  if (key == "connected" || key == "a") return LiftMode::Connected;
  if (key == "fully_connected" || key == "b") return LiftMode::FullyConnected;
  throw ConfigError("unknown lift mode '" + std::string(key) + "' (connected|fully_connected)");
}

std::vector<double> draw_vectors(VectorLaw law, std::size_t n, std::size_t p, Rng& rng) {
  std::vector<double> x(n * p);
  for (double& v : x) v = law == VectorLaw::UniformCube ? rng.uniform(-1.0, 1.0) : rng.normal();
  return x;
}

Hypernetwork generate_on(const PlantedModel& planted, std::size_t n, std::vector<double> vectors, IndexPolicy policy,
                         Rng& rng) {
  check_range(planted);
  const SimilarityModel& truth = planted.true_model;
  const std::size_t U = truth.order();
  if (policy == IndexPolicy::Explicit) throw ConfigError("generate needs an enumerable index policy, not explicit");
  if (n < U) throw ConfigError("generate needs n >= U");
  Hypernetwork net(n, truth.embedding().p, U, std::move(vectors), policy);

  SimilarityEvaluator ev(truth);
  std::vector<std::span<const double>> rows;
  const bool strict = policy != IndexPolicy::AllTuples;
  for_each_canonical(n, U, strict, [&](const std::vector<NodeId>& idx) {
    rows.clear();
    for (NodeId v : idx) rows.push_back(net.vector(v));
    const double mu = ev.forward(rows);
    double w = 0.0;
    switch (planted.noise.kind) {
      case NoiseKind::Bernoulli: w = rng.bernoulli(mu) ? 1.0 : 0.0; break;
      case NoiseKind::Poisson: w = static_cast<double>(rng.poisson(mu)); break;
      case NoiseKind::Gaussian: w = planted.noise.sigma == 0.0 ? mu : mu + planted.noise.sigma * rng.normal(); break;
    }
    if (w != 0.0) net.set_weight(HyperIndex(idx), w);
  });
  return net;
}

Hypernetwork generate(const PlantedModel& planted, std::size_t n, IndexPolicy policy, std::uint64_t seed) {
  Rng vec_rng(seed, 0);
  Rng weight_rng(seed, 1);
  auto vectors = draw_vectors(planted.vector_law, n, planted.true_model.embedding().p, vec_rng);
  return generate_on(planted, n, std::move(vectors), policy, weight_rng);
}

Hypernetwork lift_links_to_hyperlinks(const Hypernetwork& net2, LiftMode mode) {
  if (net2.order() != 2) throw ConfigError("lift expects a U = 2 network");
  const std::size_t n = net2.n();
  std::vector<char> adj(n * n, 0);
  for (const auto& [index, w] : net2.weights()) {
    if (w != 0.0 && w != 1.0) throw NonBinaryWeights("weight " + std::to_string(w) + " at " + index.to_string() + " is not binary");
    if (w == 1.0 && index[0] != index[1]) {
      adj[index[0] * n + index[1]] = 1;
      adj[index[1] * n + index[0]] = 1;
    }
  }
  const IndexPolicy policy = net2.policy() == IndexPolicy::Explicit ? IndexPolicy::DistinctEntries : net2.policy();
  Hypernetwork out(n, net2.dim(), 3, std::vector<double>(net2.vectors().begin(), net2.vectors().end()), policy);
  const int need = mode == LiftMode::Connected ? 2 : 3;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const int ab = adj[a * n + b];
      for (std::size_t c = b + 1; c < n; ++c) {
        if (ab + adj[b * n + c] + adj[a * n + c] >= need)
          out.set_weight(HyperIndex{static_cast<NodeId>(a), static_cast<NodeId>(b), static_cast<NodeId>(c)}, 1.0);
      }
    }
  }
  return out;
}

EvaluationSet negative_candidate_protocol(const Hypernetwork& net, std::size_t per_anchor, std::uint64_t seed) {
  const std::size_t n = net.n();
  const std::size_t U = net.order();
  Rng rng(seed, 3);
  EvaluationSet out;
  std::set<HyperIndex> chosen;

  std::vector<std::uint64_t> positives_at(n, 0);
  std::vector<HyperIndex> positives;
  for (const auto& [index, w] : net.weights()) {
    if (w == 0.0) continue;
    positives.push_back(index);
    bool distinct = std::adjacent_find(index.begin(), index.end()) == index.end();
    if (!distinct) continue;
    for (NodeId v : index) ++positives_at[v];
  }
  std::sort(positives.begin(), positives.end());

  auto is_zero = [&](const HyperIndex& idx) { return net.weight(idx) == 0.0; };

  for (std::size_t a = 0; a < n && per_anchor > 0 && n >= U; ++a) {
    const std::uint64_t total = detail::binom(n - 1, U - 1);
    const std::uint64_t available = total - std::min(total, positives_at[a]);
    const auto anchor = static_cast<NodeId>(a);
    if (available <= 2 * per_anchor) {
      // Few zero tuples: enumerate them all and pick without replacement.
      std::vector<HyperIndex> pool;
      std::vector<NodeId> others;
      for (std::size_t v = 0; v < n; ++v)
        if (v != a) others.push_back(static_cast<NodeId>(v));
      for_each_canonical(others.size(), U - 1, true, [&](const std::vector<NodeId>& pick) {
        std::vector<NodeId> e{anchor};
        for (NodeId k : pick) e.push_back(others[k]);
        HyperIndex idx = HyperIndex(std::move(e)).sorted();
        if (is_zero(idx)) pool.push_back(std::move(idx));
      });
      if (pool.size() < per_anchor) out.insufficient = true;
      const std::size_t take = std::min(per_anchor, pool.size());
      for (std::size_t k = 0; k < take; ++k) {
        const std::size_t r = k + static_cast<std::size_t>(rng.uniform_index(pool.size() - k));
        std::swap(pool[k], pool[r]);
        chosen.insert(pool[k]);
      }
      continue;
    }
    std::set<HyperIndex> mine;
    while (mine.size() < per_anchor) {
      std::vector<NodeId> e{anchor};
      while (e.size() < U) {
        const auto x = static_cast<NodeId>(rng.uniform_index(n));
        if (std::find(e.begin(), e.end(), x) == e.end()) e.push_back(x);
      }
      HyperIndex idx = HyperIndex(std::move(e)).sorted();
      if (is_zero(idx)) mine.insert(std::move(idx));
    }
    chosen.insert(mine.begin(), mine.end());
  }

  for (const auto& idx : chosen) {
    out.indices.push_back(idx);
    out.labels.push_back(0);
  }
  for (const auto& idx : positives) {
    out.indices.push_back(idx);
    out.labels.push_back(1);
  }
  return out;
}

}  // namespace bhlr
