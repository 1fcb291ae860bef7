#pragma once

#include <cstddef>
#include <vector>

#include "bhlr/divergence.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/simfn.hpp"

namespace bhlr {

/// Indices beyond this count are refused unless `force` is set.
inline constexpr std::uint64_t kMaxIndexCount = 100'000'000;

struct LossSpec {
  GeneratingFunction divergence;
  /// Constant multiplying every hyperlink weight (the objective Q_eta).
  double eta_scale = 1.0;
  double clamp_margin = 1e-7;
  bool force = false;
  /// Worker count for the tuple sum. 1 is the sequential, deterministic path.
  unsigned threads = 1;
};

/// eta_scale > 0, clamp_margin >= 0 and narrower than dom(phi), and every
/// weight reachable through the index set (implicit zeros included) lies in
/// dom(phi) after scaling. Raises ConfigError otherwise.
void validate(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net);

/// Projects mu into dom(phi) shrunk by clamp_margin on each finite side.
/// Values already that far inside are returned unchanged.
double clamp_mu(const LossSpec& spec, double mu);

/// Mean over the index set of phi'(mu) mu - phi(mu) - eta w phi'(mu), plus the
/// constant mean phi(eta w), so the value is a true divergence.
double full_loss(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net);

/// Exact gradient of full_loss. Each tuple contributes
/// phi''(mu) (mu - eta w) d mu / d theta; the clamp is treated as identity.
std::vector<double> full_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net);

struct LossAndGradient {
  double loss;
  std::vector<double> grad;
};

LossAndGradient full_loss_and_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net);

/// Closed-form losses for Logistic, KL (epsilon = 0), Quadratic and Beta.
/// UnsupportedKind for the other generators and for KL with epsilon > 0.
double specialized_loss(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net);

}  // namespace bhlr
