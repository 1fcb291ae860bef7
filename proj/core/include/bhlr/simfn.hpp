#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bhlr/divergence.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/random.hpp"

namespace bhlr {

enum class EmbeddingKind { Linear, MLP1 };

/// f_theta : R^p -> R^K. Linear is theta^T x; MLP1 is
/// W2 ReLU(W1 x + b1) + b2 with H hidden units.
struct EmbeddingMap {
  EmbeddingKind kind = EmbeddingKind::Linear;
  std::size_t p = 1;
  std::size_t K = 1;
  std::size_t H = 0;

  static EmbeddingMap linear(std::size_t p, std::size_t K) { return {EmbeddingKind::Linear, p, K, 0}; }
  static EmbeddingMap mlp1(std::size_t p, std::size_t H, std::size_t K) { return {EmbeddingKind::MLP1, p, K, H}; }

  /// Length of the flat parameter vector.
  ///
  /// Layout, Linear: the p x K matrix row-major (theta[j*K + k] maps x_j to
  /// output k). MLP1: W1 (H x p row-major), b1 (H), W2 (K x H row-major), b2 (K).
  std::size_t param_count() const;
  void validate() const;
};

enum class LinkKind { Identity, Sigmoid, Exp };

LinkKind parse_link(std::string_view key);
std::string to_string(LinkKind link);
std::string to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view key);

double link_apply(LinkKind link, double s);
double link_derivative(LinkKind link, double s);
/// Open range of the link's outputs.
Interval link_range(LinkKind link);

/// mu_theta(X) = link(<f(x_1), ..., f(x_U)>), symmetric in the tuple.
class SimilarityModel {
 public:
  SimilarityModel(EmbeddingMap embedding, LinkKind link, std::size_t order, std::vector<double> theta);

  /// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
  static SimilarityModel initialized(EmbeddingMap embedding, LinkKind link, std::size_t order, Rng& rng);

  const EmbeddingMap& embedding() const { return embedding_; }
  LinkKind link() const { return link_; }
  std::size_t order() const { return order_; }
  std::size_t param_count() const { return theta_.size(); }

  std::span<const double> theta() const { return theta_; }
  std::span<double> theta() { return theta_; }
  void set_theta(std::vector<double> theta);

 private:
  EmbeddingMap embedding_;
  LinkKind link_;
  std::size_t order_;
  std::vector<double> theta_;
};

using TupleRows = std::span<const std::span<const double>>;

/// sum_k prod_u y_u[k].
double multiway_inner(std::span<const std::span<const double>> ys);

std::vector<double> embed(const SimilarityModel& model, std::span<const double> x);

/// K x q row-major Jacobian of embed with respect to theta.
std::vector<double> embed_jacobian(const SimilarityModel& model, std::span<const double> x);

/// grad += scale * J(x)^T cotangent, without materializing J.
void embed_vjp(const SimilarityModel& model, std::span<const double> x, std::span<const double> cotangent, double scale,
               std::span<double> grad);

double similarity(const SimilarityModel& model, TupleRows tuple);
inline double similarity(const SimilarityModel& model, const TupleView& tuple) { return similarity(model, tuple.rows); }

struct SimilarityGrad {
  double mu;
  std::vector<double> grad;
};

SimilarityGrad similarity_grad(const SimilarityModel& model, TupleRows tuple);
inline SimilarityGrad similarity_grad(const SimilarityModel& model, const TupleView& tuple) {
  return similarity_grad(model, tuple.rows);
}

/// Reusable forward/backward workspace for one model.
///
/// forward() evaluates mu and caches what backward() needs; backward(c, g)
/// then adds c * d mu / d theta to g. Rows are processed in lexicographic
/// order of their contents, so any permutation of a tuple yields bit-identical
/// results.
class SimilarityEvaluator {
 public:
  explicit SimilarityEvaluator(const SimilarityModel& model);

  double forward(TupleRows tuple);
  void backward(double coefficient, std::span<double> grad);

  /// Inner product s of the last forward pass.
  double inner() const { return inner_; }

 private:
  void embed_row(std::size_t u, std::span<const double> x);

  const SimilarityModel* model_;
  std::size_t arity_ = 0;
  std::vector<std::span<const double>> rows_;
  std::vector<double> outputs_;  // arity x K
  std::vector<double> hidden_;   // arity x H, pre-activation
  std::vector<double> cotangent_;
  double inner_ = 0.0;
};

// ---- checkpoint -----------------------------------------------------------

/// {"kind", "p", "K", "H", "link", "U", "theta": [...]}.
std::string model_to_json(const SimilarityModel& model);
SimilarityModel model_from_json(std::string_view text);
void save_model(const std::string& path, const SimilarityModel& model);
SimilarityModel load_model(const std::string& path);

}  // namespace bhlr
