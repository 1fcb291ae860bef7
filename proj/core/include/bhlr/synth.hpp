#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bhlr/hypernet.hpp"
#include "bhlr/random.hpp"
#include "bhlr/simfn.hpp"

namespace bhlr {

enum class NoiseKind { Bernoulli, Poisson, Gaussian };

struct Noise {
  NoiseKind kind = NoiseKind::Bernoulli;
  double sigma = 0.0;  // Gaussian only
};

Noise parse_noise(std::string_view key);  // "bernoulli", "poisson", "gaussian:<sigma>"

enum class VectorLaw { UniformCube, Gaussian };

VectorLaw parse_vector_law(std::string_view key);  // "uniform", "gaussian"

/// Ground truth for synthetic data: vectors ~ vector_law, and each weight is
/// drawn from the noise law around mu*(X) = true_model(X).
struct PlantedModel {
  SimilarityModel true_model;
  Noise noise;
  VectorLaw vector_law = VectorLaw::UniformCube;
};

/// n x p row-major. UniformCube draws from [-1, 1]^p.
std::vector<double> draw_vectors(VectorLaw law, std::size_t n, std::size_t p, Rng& rng);

/// Draws one weight per canonical index of the policy (multisets for
/// AllTuples, sets otherwise) and stores the nonzero ones.
Hypernetwork generate(const PlantedModel& planted, std::size_t n, IndexPolicy policy, std::uint64_t seed);

/// Same, with vectors supplied by the caller.
Hypernetwork generate_on(const PlantedModel& planted, std::size_t n, std::vector<double> vectors, IndexPolicy policy,
                         Rng& rng);

enum class LiftMode { Connected, FullyConnected };

LiftMode parse_lift_mode(std::string_view key);  // "connected", "fully_connected"

/// U = 3 weights from binary U = 2 links: w(a,b,c) = 1 when the induced
/// subgraph on {a,b,c} is connected (Connected) or a triangle (FullyConnected).
Hypernetwork lift_links_to_hyperlinks(const Hypernetwork& net2, LiftMode mode);

struct EvaluationSet {
  std::vector<HyperIndex> indices;  // canonical
  std::vector<int> labels;          // 1 for a nonzero weight
  /// Some anchor had fewer zero-weight tuples than requested; all of its
  /// available ones were used.
  bool insufficient = false;
};

/// For every anchor node, `per_anchor` distinct zero-weight tuples containing
/// it (drawn uniformly, no repeated entries), plus every positive tuple.
/// Duplicates across anchors are kept once.
EvaluationSet negative_candidate_protocol(const Hypernetwork& net, std::size_t per_anchor, std::uint64_t seed);

}  // namespace bhlr
