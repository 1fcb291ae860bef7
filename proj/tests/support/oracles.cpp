#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "bhlr/divergence.hpp"
#include "bhlr/sampler.hpp"

namespace oracle {

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta) {
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    const double h = 1e-5 * std::max(1.0, std::abs(x0));
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), 1e-12);
}

std::vector<bhlr::HyperIndex> brute_index_set(std::size_t n, std::size_t U, bhlr::IndexPolicy policy) {
  std::vector<bhlr::HyperIndex> out;
  std::size_t total = 1;
  for (std::size_t k = 0; k < U; ++k) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<bhlr::NodeId> e(U);
    std::size_t c = code;
    for (std::size_t k = U; k-- > 0;) {
      e[k] = static_cast<bhlr::NodeId>(c % n);
      c /= n;
    }
    bool keep = true;
    for (std::size_t a = 0; a < U && keep; ++a)
      for (std::size_t b = a + 1; b < U && keep; ++b) {
        if (policy == bhlr::IndexPolicy::DistinctEntries && e[a] == e[b]) keep = false;
        if (policy == bhlr::IndexPolicy::IncreasingOnly && e[a] >= e[b]) keep = false;
      }
    if (keep) out.emplace_back(std::move(e));
  }
  return out;
}

std::vector<bhlr::HyperIndex> brute_slice(const std::vector<bhlr::HyperIndex>& all, const std::vector<std::size_t>& u,
                                          const std::vector<bhlr::NodeId>& j) {
  std::vector<bhlr::HyperIndex> out;
  for (const auto& idx : all) {
    bool match = true;
    for (std::size_t k = 0; k < u.size(); ++k) match = match && idx[u[k]] == j[k];
    if (match) out.push_back(idx);
  }
  return out;
}

double naive_loss(const bhlr::LossSpec& spec, const bhlr::SimilarityModel& model, const bhlr::Hypernetwork& net) {
  std::vector<double> a, b;
  const auto indices = net.policy() == bhlr::IndexPolicy::Explicit
                           ? net.explicit_indices()
                           : brute_index_set(net.n(), net.order(), net.policy());
  for (const auto& idx : indices) {
    a.push_back(spec.eta_scale * net.weight(idx));
    b.push_back(bhlr::clamp_mu(spec, bhlr::similarity(model, net.tuple(idx))));
  }
  return bhlr::big_D(spec.divergence, a, b);
}

std::vector<double> enumerated_expectation(const bhlr::LossSpec& spec, const bhlr::SimilarityModel& model,
                                           const bhlr::Hypernetwork& net, const std::vector<std::size_t>& u) {
  const auto all = net.policy() == bhlr::IndexPolicy::Explicit ? net.explicit_indices()
                                                               : brute_index_set(net.n(), net.order(), net.policy());
  std::set<std::vector<bhlr::NodeId>> keys;
  for (const auto& idx : all) {
    std::vector<bhlr::NodeId> j;
    for (std::size_t pos : u) j.push_back(idx[pos]);
    keys.insert(j);
  }
  std::vector<double> mean(model.param_count(), 0.0);
  const double pj = 1.0 / static_cast<double>(keys.size());
  for (const auto& j : keys) {
    const auto slice = brute_slice(all, u, j);
    std::vector<bhlr::HyperIndex> pos;
    for (const auto& idx : slice)
      if (net.weight(idx) != 0.0) pos.push_back(idx);
    const double m = static_cast<double>(slice.size());
    const double pc = 1.0 / (m * m);
    const double pp = pos.empty() ? 1.0 : 1.0 / static_cast<double>(pos.size());
    for (const auto& a : slice)
      for (const auto& b : slice)
        for (std::size_t k = 0; k < std::max<std::size_t>(pos.size(), 1); ++k) {
          bhlr::Minibatch mb;
          mb.candidates = {a, b};
          mb.s_minus = m / 2.0;
          if (!pos.empty()) {
            mb.positives = {pos[k]};
            mb.s_plus = static_cast<double>(pos.size());
          }
          const auto g = bhlr::stochastic_gradient(spec, model, net, mb);
          for (std::size_t i = 0; i < g.size(); ++i) mean[i] += pj * pc * pp * g[i];
        }
  }
  return mean;
}

bhlr::LinkKind link_for(const bhlr::GeneratingFunction& g) {
  using bhlr::GeneratorKind;
  switch (g.kind) {
    case GeneratorKind::Logistic: return bhlr::LinkKind::Sigmoid;
    case GeneratorKind::KL:
    case GeneratorKind::Beta:
    case GeneratorKind::ItakuraSaito:
    case GeneratorKind::Inverse: return bhlr::LinkKind::Exp;
    default: return bhlr::LinkKind::Identity;
  }
}

namespace {

double draw_weight(const bhlr::GeneratingFunction& g, bhlr::Rng& rng) {
  using bhlr::GeneratorKind;
  switch (g.kind) {
    case GeneratorKind::Logistic: return rng.bernoulli(0.4) ? 1.0 : 0.0;
    case GeneratorKind::KL:
    case GeneratorKind::Beta: return static_cast<double>(rng.poisson(1.2));
    case GeneratorKind::ItakuraSaito:
    case GeneratorKind::Inverse: return rng.uniform(0.2, 2.0);
    default: return rng.uniform(-1.0, 1.5);
  }
}

}  // namespace

Instance random_instance(const bhlr::GeneratingFunction& g, bhlr::EmbeddingKind kind, std::size_t order, bhlr::Rng& rng,
                         std::size_t max_n) {
  const std::size_t p = 3, H = 4, K = 2;
  const bool explicit_set = !bhlr::in_domain(g, 0.0);
  while (true) {
    const std::size_t n = order + rng.uniform_index(max_n - order + 1);
    std::vector<double> x(n * p);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const auto policy = explicit_set ? bhlr::IndexPolicy::Explicit : bhlr::IndexPolicy::DistinctEntries;
    bhlr::Hypernetwork net(n, p, order, x, policy);
    const auto all = brute_index_set(n, order, bhlr::IndexPolicy::DistinctEntries);
    for (const auto& idx : all)
      if (idx.is_canonical()) net.set_weight(idx, draw_weight(g, rng));
    if (explicit_set) net.set_explicit_indices(all);

    const auto e = kind == bhlr::EmbeddingKind::Linear ? bhlr::EmbeddingMap::linear(p, K) : bhlr::EmbeddingMap::mlp1(p, H, K);
    bhlr::Rng init = rng.split(rng.next_u64());
    auto model = bhlr::SimilarityModel::initialized(e, link_for(g), order, init);
    if (kind == bhlr::EmbeddingKind::MLP1) {
      std::vector<double> theta(model.theta().begin(), model.theta().end());
      for (std::size_t h = 0; h < H; ++h) theta[H * p + h] = rng.uniform(-0.3, 0.3);
      model.set_theta(theta);
      // Reject points near a ReLU kink, and nodes whose hidden layer is fully
      // off (their embedding is the zero output bias, a saddle for U >= 3).
      bool degenerate = false;
      for (std::size_t i = 0; i < n && !degenerate; ++i) {
        bool any_active = false;
        for (std::size_t h = 0; h < H; ++h) {
          double z = theta[H * p + h];
          for (std::size_t j = 0; j < p; ++j) z += theta[h * p + j] * x[i * p + j];
          degenerate = degenerate || std::abs(z) < 1e-3;
          any_active = any_active || z > 0.0;
        }
        degenerate = degenerate || !any_active;
      }
      if (degenerate) continue;
    }
    bhlr::LossSpec loss;
    loss.divergence = g;
    return {std::move(net), std::move(model), loss};
  }
}

double gradient_check(const Instance& inst) {
  const auto grad = bhlr::full_gradient(inst.loss, inst.model, inst.net);
  bhlr::SimilarityModel probe = inst.model;
  auto f = [&](std::span<const double> th) {
    probe.set_theta(std::vector<double>(th.begin(), th.end()));
    return bhlr::full_loss(inst.loss, probe, inst.net);
  };
  const auto fd = numeric_gradient(f, inst.model.theta());
  return relative_error(grad, fd);
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (labels[a] != 1) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (labels[b] != 0) continue;
      pairs += 1.0;
      if (scores[a] > scores[b]) wins += 1.0;
      else if (scores[a] == scores[b]) wins += 0.5;
    }
  }
  return wins / pairs;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

double truncated_svd_error(const Eigen::MatrixXd& M, int k) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  double tail = 0.0;
  for (int i = k; i < s.size(); ++i) tail += s[i] * s[i];
  return std::sqrt(tail);
}

bool triple_connected(const std::vector<std::vector<bool>>& adj, std::size_t a, std::size_t b, std::size_t c) {
  const std::size_t nodes[3] = {a, b, c};
  bool seen[3] = {true, false, false};
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int x = queue.front();
    queue.pop_front();
    for (int y = 0; y < 3; ++y)
      if (!seen[y] && adj[nodes[x]][nodes[y]]) {
        seen[y] = true;
        queue.push_back(y);
      }
  }
  return seen[1] && seen[2];
}

}  // namespace oracle
