#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/random.hpp"
#include "bhlr/simfn.hpp"

namespace bhlr {

enum class JDistribution { Uniform, Custom };

struct SamplerConfig {
  /// Number of fixed index positions, in [0, U).
  std::size_t v = 0;
  /// The fixed positions (0-based, strictly increasing); size v.
  std::vector<std::size_t> u;
  JDistribution j_distribution = JDistribution::Uniform;
  /// Probabilities over support_set(net, u) in its enumeration order.
  std::vector<double> j_weights;
  std::size_t m_plus = 1;
  std::size_t m_minus = 1;
  std::uint64_t seed = 0;

  /// Take the whole slice instead of m+/m- draws; both scales become 1.
  bool exhaustive = false;
  /// s+ = s- = 1 regardless of slice sizes.
  bool practical_scaling = false;
  /// Keep a slice without positive tuples (empty positive batch, s+ = 0)
  /// rather than redrawing j.
  bool allow_empty_positive = false;
  std::size_t max_retries = 100;

  void validate(std::size_t order) const;
};

struct Minibatch {
  std::vector<HyperIndex> positives;
  std::vector<HyperIndex> candidates;
  double s_plus = 0.0;
  double s_minus = 0.0;
  std::optional<std::vector<NodeId>> fixed_j;
};

/// Indices of the index set whose u-th entries equal j.
IndexRange fixed_slice(const Hypernetwork& net, const std::vector<std::size_t>& u, const std::vector<NodeId>& j);

/// Every j in [n]^v whose slice is nonempty, in lexicographic order. With
/// v = 0 this is the single empty vector.
std::vector<std::vector<NodeId>> support_set(const Hypernetwork& net, const std::vector<std::size_t>& u);

/// Minibatch sampler for one network.
///
/// Slice sizes and uniform draws from a slice are computed combinatorially
/// for the AllTuples, DistinctEntries and IncreasingOnly policies, so nothing
/// of size |I| is materialized. Candidates and positives are drawn with
/// replacement.
class MinibatchSampler {
 public:
  MinibatchSampler(const Hypernetwork& net, SamplerConfig cfg);

  Minibatch draw(Rng& rng) const;
  /// Builds the minibatch for a given j (no j draw).
  Minibatch draw_for(const std::vector<NodeId>& j, Rng& rng) const;

  const SamplerConfig& config() const { return cfg_; }

  /// |K_u|, or 1 when v = 0.
  std::uint64_t support_size() const { return support_size_; }
  /// |I_{n,u}(j)|.
  std::uint64_t slice_size(const std::vector<NodeId>& j) const;
  /// Nonzero-weight indices of the slice, sorted.
  const std::vector<HyperIndex>& slice_positives(const std::vector<NodeId>& j) const;
  /// Scale alpha with E[g] = alpha dQ/dtheta: |I|/|K_u|, or |I| when v = 0.
  double alpha() const;

 private:
  std::vector<NodeId> draw_j(Rng& rng) const;
  HyperIndex draw_from_slice(const std::vector<NodeId>& j, Rng& rng) const;
  std::vector<HyperIndex> whole_slice(const std::vector<NodeId>& j) const;
  HyperIndex key_of(const HyperIndex& index) const;

  const Hypernetwork* net_;
  SamplerConfig cfg_;
  std::uint64_t support_size_ = 0;
  std::unordered_map<HyperIndex, std::vector<HyperIndex>, HyperIndexHash> positives_;
  // Explicit policy only: the slice members per j, and the support list.
  std::unordered_map<HyperIndex, std::vector<HyperIndex>, HyperIndexHash> explicit_slices_;
  std::vector<std::vector<NodeId>> support_list_;
  std::vector<double> cumulative_;
};

/// s- sum over candidates of mu phi''(mu) dmu - eta s+ sum over positives of
/// w phi''(mu) dmu.
std::vector<double> stochastic_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net,
                                        const Minibatch& mb);

}  // namespace bhlr
