#include "bhlr/simfn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bhlr/errors.hpp"

namespace bhlr {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::size_t EmbeddingMap::param_count() const {
  switch (kind) {
    case EmbeddingKind::Linear: return p * K;
    case EmbeddingKind::MLP1: return H * p + H + K * H + K;
  }
  return 0;
}

void EmbeddingMap::validate() const {
  if (p == 0) throw ConfigError("embedding input dimension p must be >= 1");
  if (K == 0) throw ConfigError("embedding output dimension K must be >= 1");
  if (kind == EmbeddingKind::MLP1 && H == 0) throw ConfigError("MLP1 hidden width H must be >= 1");
}

LinkKind parse_link(std::string_view key) {
  if (key == "identity") return LinkKind::Identity;
  if (key == "sigmoid") return LinkKind::Sigmoid;
  if (key == "exp") return LinkKind::Exp;
  throw ConfigError("unknown link '" + std::string(key) + "' (identity|sigmoid|exp)");
}

std::string to_string(LinkKind link) {
  switch (link) {
    case LinkKind::Identity: return "identity";
    case LinkKind::Sigmoid: return "sigmoid";
    case LinkKind::Exp: return "exp";
  }
  return "?";
}

std::string to_string(EmbeddingKind kind) { return kind == EmbeddingKind::Linear ? "linear" : "mlp1"; }

EmbeddingKind parse_embedding_kind(std::string_view key) {
  if (key == "linear") return EmbeddingKind::Linear;
  if (key == "mlp1") return EmbeddingKind::MLP1;
  throw ConfigError("unknown embedding kind '" + std::string(key) + "' (linear|mlp1)");
}

double link_apply(LinkKind link, double s) {
  switch (link) {
    case LinkKind::Identity: return s;
    case LinkKind::Sigmoid: return sigmoid(s);
    case LinkKind::Exp: return std::exp(s);
  }
  return s;
}

double link_derivative(LinkKind link, double s) {
  switch (link) {
    case LinkKind::Identity: return 1.0;
    case LinkKind::Sigmoid: {
      const double v = sigmoid(s);
      return v * (1.0 - v);
    }
    case LinkKind::Exp: return std::exp(s);
  }
  return 1.0;
}

Interval link_range(LinkKind link) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (link) {
    case LinkKind::Identity: return {-inf, inf, false, false};
    case LinkKind::Sigmoid: return {0.0, 1.0, false, false};
    case LinkKind::Exp: return {0.0, inf, false, false};
  }
  return {-inf, inf, false, false};
}

SimilarityModel::SimilarityModel(EmbeddingMap embedding, LinkKind link, std::size_t order, std::vector<double> theta)
    : embedding_(embedding), link_(link), order_(order), theta_(std::move(theta)) {
  embedding_.validate();
  if (order_ == 0) throw ConfigError("model order U must be >= 1");
  if (theta_.size() != embedding_.param_count())
    throw DimMismatch("theta has " + std::to_string(theta_.size()) + " entries, model needs " +
                      std::to_string(embedding_.param_count()));
}

SimilarityModel SimilarityModel::initialized(EmbeddingMap e, LinkKind link, std::size_t order, Rng& rng) {
  e.validate();
  std::vector<double> theta(e.param_count(), 0.0);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = begin; i < begin + count; ++i) theta[i] = rng.uniform(-r, r);
  };
  if (e.kind == EmbeddingKind::Linear) {
    fill(0, e.p * e.K, e.p);
  } else {
    fill(0, e.H * e.p, e.p);
    fill(e.H * e.p + e.H, e.K * e.H, e.H);
  }
  return SimilarityModel(e, link, order, std::move(theta));
}

void SimilarityModel::set_theta(std::vector<double> theta) {
  if (theta.size() != theta_.size()) throw DimMismatch("set_theta: wrong parameter count");
  theta_ = std::move(theta);
}

double multiway_inner(std::span<const std::span<const double>> ys) {
  if (ys.empty()) throw DimMismatch("multiway_inner: no arguments");
  const std::size_t K = ys.front().size();
  for (const auto& y : ys)
    if (y.size() != K) throw DimMismatch("multiway_inner: arguments differ in dimension");
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double prod = 1.0;
    for (const auto& y : ys) prod *= y[k];
    s += prod;
  }
  return s;
}

std::vector<double> embed(const SimilarityModel& model, std::span<const double> x) {
  const auto& e = model.embedding();
  if (x.size() != e.p) throw DimMismatch("embed: input has dimension " + std::to_string(x.size()) + ", model expects " + std::to_string(e.p));
  const auto theta = model.theta();
  std::vector<double> y(e.K, 0.0);
  if (e.kind == EmbeddingKind::Linear) {
    for (std::size_t j = 0; j < e.p; ++j) {
      const double xj = x[j];
      for (std::size_t k = 0; k < e.K; ++k) y[k] += theta[j * e.K + k] * xj;
    }
    return y;
  }
  const double* W1 = theta.data();
  const double* b1 = W1 + e.H * e.p;
  const double* W2 = b1 + e.H;
  const double* b2 = W2 + e.K * e.H;
  std::vector<double> a(e.H);
  for (std::size_t h = 0; h < e.H; ++h) {
    double z = b1[h];
    for (std::size_t j = 0; j < e.p; ++j) z += W1[h * e.p + j] * x[j];
    a[h] = z > 0.0 ? z : 0.0;
  }
  for (std::size_t k = 0; k < e.K; ++k) {
    double v = b2[k];
    for (std::size_t h = 0; h < e.H; ++h) v += W2[k * e.H + h] * a[h];
    y[k] = v;
  }
  return y;
}

void embed_vjp(const SimilarityModel& model, std::span<const double> x, std::span<const double> cotangent, double scale,
               std::span<double> grad) {
  const auto& e = model.embedding();
  if (x.size() != e.p || cotangent.size() != e.K || grad.size() != model.param_count())
    throw DimMismatch("embed_vjp: dimension mismatch");
  const auto theta = model.theta();
  if (e.kind == EmbeddingKind::Linear) {
    for (std::size_t j = 0; j < e.p; ++j) {
      const double sx = scale * x[j];
      for (std::size_t k = 0; k < e.K; ++k) grad[j * e.K + k] += sx * cotangent[k];
    }
    return;
  }
  const std::size_t oW1 = 0, ob1 = e.H * e.p, oW2 = ob1 + e.H, ob2 = oW2 + e.K * e.H;
  for (std::size_t h = 0; h < e.H; ++h) {
    double z = theta[ob1 + h];
    for (std::size_t j = 0; j < e.p; ++j) z += theta[oW1 + h * e.p + j] * x[j];
    const double a = z > 0.0 ? z : 0.0;
    double da = 0.0;
    for (std::size_t k = 0; k < e.K; ++k) {
      grad[oW2 + k * e.H + h] += scale * cotangent[k] * a;
      da += cotangent[k] * theta[oW2 + k * e.H + h];
    }
    if (z > 0.0) {
      const double dz = scale * da;
      for (std::size_t j = 0; j < e.p; ++j) grad[oW1 + h * e.p + j] += dz * x[j];
      grad[ob1 + h] += dz;
    }
  }
  for (std::size_t k = 0; k < e.K; ++k) grad[ob2 + k] += scale * cotangent[k];
}

std::vector<double> embed_jacobian(const SimilarityModel& model, std::span<const double> x) {
  const std::size_t K = model.embedding().K;
  const std::size_t q = model.param_count();
  std::vector<double> jac(K * q, 0.0);
  std::vector<double> unit(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    unit[k] = 1.0;
    embed_vjp(model, x, unit, 1.0, std::span<double>(jac).subspan(k * q, q));
    unit[k] = 0.0;
  }
  return jac;
}

// ---- SimilarityEvaluator --------------------------------------------------

SimilarityEvaluator::SimilarityEvaluator(const SimilarityModel& model) : model_(&model) {}

void SimilarityEvaluator::embed_row(std::size_t u, std::span<const double> x) {
  const auto& e = model_->embedding();
  const auto theta = model_->theta();
  double* y = outputs_.data() + u * e.K;
  if (e.kind == EmbeddingKind::Linear) {
    std::fill(y, y + e.K, 0.0);
    for (std::size_t j = 0; j < e.p; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const double* row = theta.data() + j * e.K;
      for (std::size_t k = 0; k < e.K; ++k) y[k] += row[k] * xj;
    }
    return;
  }
  const double* W1 = theta.data();
  const double* b1 = W1 + e.H * e.p;
  const double* W2 = b1 + e.H;
  const double* b2 = W2 + e.K * e.H;
  double* z = hidden_.data() + u * e.H;
  for (std::size_t h = 0; h < e.H; ++h) {
    double acc = b1[h];
    const double* w = W1 + h * e.p;
    for (std::size_t j = 0; j < e.p; ++j) acc += w[j] * x[j];
    z[h] = acc;
  }
  for (std::size_t k = 0; k < e.K; ++k) {
    double acc = b2[k];
    const double* w = W2 + k * e.H;
    for (std::size_t h = 0; h < e.H; ++h)
      if (z[h] > 0.0) acc += w[h] * z[h];
    y[k] = acc;
  }
}

double SimilarityEvaluator::forward(TupleRows tuple) {
  const auto& e = model_->embedding();
  if (tuple.size() != model_->order())
    throw DimMismatch("tuple arity " + std::to_string(tuple.size()) + " != model order " + std::to_string(model_->order()));
  arity_ = tuple.size();
  rows_.assign(tuple.begin(), tuple.end());
  for (const auto& r : rows_)
    if (r.size() != e.p) throw DimMismatch("tuple vector has dimension " + std::to_string(r.size()) + ", model expects " + std::to_string(e.p));
  std::sort(rows_.begin(), rows_.end(), lex_less);

  outputs_.resize(arity_ * e.K);
  if (e.kind == EmbeddingKind::MLP1) hidden_.resize(arity_ * e.H);
  for (std::size_t u = 0; u < arity_; ++u) embed_row(u, rows_[u]);

  double s = 0.0;
  for (std::size_t k = 0; k < e.K; ++k) {
    double prod = 1.0;
    for (std::size_t u = 0; u < arity_; ++u) prod *= outputs_[u * e.K + k];
    s += prod;
  }
  inner_ = s;
  return link_apply(model_->link(), s);
}

void SimilarityEvaluator::backward(double coefficient, std::span<double> grad) {
  const auto& e = model_->embedding();
  if (grad.size() != model_->param_count()) throw DimMismatch("backward: gradient buffer has wrong length");
  const double scale = coefficient * link_derivative(model_->link(), inner_);
  if (scale == 0.0) return;
  const auto theta = model_->theta();
  cotangent_.resize(e.K);
  for (std::size_t u = 0; u < arity_; ++u) {
    for (std::size_t k = 0; k < e.K; ++k) {
      double prod = 1.0;
      for (std::size_t v = 0; v < arity_; ++v)
        if (v != u) prod *= outputs_[v * e.K + k];
      cotangent_[k] = prod;
    }
    const auto x = rows_[u];
    if (e.kind == EmbeddingKind::Linear) {
      for (std::size_t j = 0; j < e.p; ++j) {
        const double sx = scale * x[j];
        if (sx == 0.0) continue;
        double* g = grad.data() + j * e.K;
        for (std::size_t k = 0; k < e.K; ++k) g[k] += sx * cotangent_[k];
      }
      continue;
    }
    const std::size_t ob1 = e.H * e.p, oW2 = ob1 + e.H, ob2 = oW2 + e.K * e.H;
    const double* z = hidden_.data() + u * e.H;
    for (std::size_t h = 0; h < e.H; ++h) {
      if (!(z[h] > 0.0)) continue;
      double da = 0.0;
      for (std::size_t k = 0; k < e.K; ++k) {
        grad[oW2 + k * e.H + h] += scale * cotangent_[k] * z[h];
        da += cotangent_[k] * theta[oW2 + k * e.H + h];
      }
      const double dz = scale * da;
      double* g = grad.data() + h * e.p;
      for (std::size_t j = 0; j < e.p; ++j) g[j] += dz * x[j];
      grad[ob1 + h] += dz;
    }
    for (std::size_t k = 0; k < e.K; ++k) grad[ob2 + k] += scale * cotangent_[k];
  }
}

double similarity(const SimilarityModel& model, TupleRows tuple) {
  SimilarityEvaluator ev(model);
  return ev.forward(tuple);
}

SimilarityGrad similarity_grad(const SimilarityModel& model, TupleRows tuple) {
  SimilarityEvaluator ev(model);
  SimilarityGrad out{ev.forward(tuple), std::vector<double>(model.param_count(), 0.0)};
  ev.backward(1.0, out.grad);
  return out;
}

// ---- checkpoint -----------------------------------------------------------

std::string model_to_json(const SimilarityModel& model) {
  const auto& e = model.embedding();
  nlohmann::json j;
  j["kind"] = to_string(e.kind);
  j["p"] = e.p;
  j["K"] = e.K;
  j["H"] = e.H;
  j["link"] = to_string(model.link());
  j["U"] = model.order();
  j["theta"] = std::vector<double>(model.theta().begin(), model.theta().end());
  return j.dump();
}

SimilarityModel model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EmbeddingMap e;
    e.kind = parse_embedding_kind(j.at("kind").get<std::string>());
    e.p = j.at("p").get<std::size_t>();
    e.K = j.at("K").get<std::size_t>();
    e.H = j.value("H", std::size_t{0});
    const LinkKind link = parse_link(j.at("link").get<std::string>());
    const std::size_t order = j.value("U", std::size_t{2});
    return SimilarityModel(e, link, order, j.at("theta").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed model checkpoint: ") + ex.what());
  }
}

void save_model(const std::string& path, const SimilarityModel& model) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << model_to_json(model) << '\n';
}

SimilarityModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace bhlr
