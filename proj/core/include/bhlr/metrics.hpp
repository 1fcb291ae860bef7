#pragma once

#include <span>
#include <vector>

#include "bhlr/hypernet.hpp"
#include "bhlr/simfn.hpp"

namespace bhlr {

/// Probability that a random positive outscores a random negative, ties
/// counted 1/2. Rank statistic with average ranks, O(m log m).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Mean of (predicted - observed)^2.
double mse(std::span<const double> predicted, std::span<const double> observed);

/// mu_theta for each index, in order.
std::vector<double> score_tuples(const SimilarityModel& model, const Hypernetwork& net,
                                 std::span<const HyperIndex> indices);

}  // namespace bhlr
