#pragma once

// Reference computations that share as little code as possible with the
// library: brute-force enumeration, finite differences and Eigen linear
// algebra.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/random.hpp"
#include "bhlr/simfn.hpp"

namespace oracle {

double central_difference(const std::function<double(double)>& f, double x, double h);

/// Central-difference gradient of f at theta with h = 1e-5 * max(1, |theta_i|).
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta);

/// ||a - b|| / max(||a|| + ||b||, tiny).
double relative_error(std::span<const double> a, std::span<const double> b);

/// Every index of [n]^U in lexicographic order, filtered by the policy rule.
std::vector<bhlr::HyperIndex> brute_index_set(std::size_t n, std::size_t U, bhlr::IndexPolicy policy);

/// Indices of `all` whose positions u equal j.
std::vector<bhlr::HyperIndex> brute_slice(const std::vector<bhlr::HyperIndex>& all, const std::vector<std::size_t>& u,
                                          const std::vector<bhlr::NodeId>& j);

/// Mean over the index set of d_phi(eta w, clamp(mu)), tuple by tuple.
double naive_loss(const bhlr::LossSpec& spec, const bhlr::SimilarityModel& model, const bhlr::Hypernetwork& net);

/// Expected stochastic gradient over every outcome of the sampler with
/// m+ = 1 and m- = 2, j uniform over the nonempty slices.
std::vector<double> enumerated_expectation(const bhlr::LossSpec& spec, const bhlr::SimilarityModel& model,
                                           const bhlr::Hypernetwork& net, const std::vector<std::size_t>& u);

/// A small random training problem: n <= max_n nodes in [-1,1]^3, weights
/// drawn inside dom(phi), and a model with a link that fits the divergence.
/// MLP1 models keep every hidden pre-activation at least 1e-3 from zero.
struct Instance {
  bhlr::Hypernetwork net;
  bhlr::SimilarityModel model;
  bhlr::LossSpec loss;
};

bhlr::LinkKind link_for(const bhlr::GeneratingFunction& g);
Instance random_instance(const bhlr::GeneratingFunction& g, bhlr::EmbeddingKind kind, std::size_t order, bhlr::Rng& rng,
                         std::size_t max_n = 8);

/// Relative error between full_gradient and central differences of full_loss.
double gradient_check(const Instance& inst);

/// Pairwise AUC: wins + ties / 2 over every positive-negative pair.
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

/// Ordinary least squares via a QR solve.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Frobenius error of the best rank-k approximation.
double truncated_svd_error(const Eigen::MatrixXd& M, int k);

/// Is {a, b, c} connected in the undirected graph adj?
bool triple_connected(const std::vector<std::vector<bool>>& adj, std::size_t a, std::size_t b, std::size_t c);

}  // namespace oracle
