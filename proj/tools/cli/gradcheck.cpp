#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "bhlr/divergence.hpp"
#include "bhlr/errors.hpp"
#include "bhlr/hypernet.hpp"
#include "bhlr/loss.hpp"
#include "bhlr/sampler.hpp"
#include "bhlr/simfn.hpp"
#include "commands.hpp"

namespace bhlr::cli {
namespace {

struct Instance {
  Hypernetwork net;
  SimilarityModel model;
  LossSpec loss;
};

LinkKind link_for(const GeneratingFunction& g) {
  switch (g.kind) {
    case GeneratorKind::Logistic: return LinkKind::Sigmoid;
    case GeneratorKind::KL:
    case GeneratorKind::Beta:
    case GeneratorKind::ItakuraSaito:
    case GeneratorKind::Inverse: return LinkKind::Exp;
    default: return LinkKind::Identity;
  }
}

double draw_weight(const GeneratingFunction& g, Rng& rng) {
  switch (g.kind) {
    case GeneratorKind::Logistic: return rng.bernoulli(0.4) ? 1.0 : 0.0;
    case GeneratorKind::KL:
    case GeneratorKind::Beta: return static_cast<double>(rng.poisson(1.2));
    case GeneratorKind::ItakuraSaito:
    case GeneratorKind::Inverse: return rng.uniform(0.2, 2.0);
    default: return rng.uniform(-1.0, 1.5);
  }
}

// n <= 8 nodes in [0,1]^3 with weights in dom(phi), and a model whose
// hidden units stay clear of the ReLU kink on every tuple.
Instance random_instance(const GeneratingFunction& g, EmbeddingKind kind, std::size_t order, Rng& rng) {
  const std::size_t p = 3;
  const bool explicit_set = !in_domain(g, 0.0);
  while (true) {
    const std::size_t n = order + rng.uniform_index(9 - order);
    std::vector<double> x(n * p);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    Hypernetwork net(n, p, order, std::move(x), explicit_set ? IndexPolicy::Explicit : IndexPolicy::DistinctEntries);
    std::vector<HyperIndex> all;
    Hypernetwork probe = net;
    probe.set_policy(IndexPolicy::DistinctEntries);
    for (const auto& idx : enumerate_index_set(probe)) all.push_back(idx);
    for (const auto& idx : all)
      if (idx.is_canonical()) net.set_weight(idx, draw_weight(g, rng));
    if (explicit_set) net.set_explicit_indices(all);

    const EmbeddingMap e = kind == EmbeddingKind::Linear ? EmbeddingMap::linear(p, 2) : EmbeddingMap::mlp1(p, 4, 2);
    Rng init = rng.split(rng.next_u64());
    SimilarityModel model = SimilarityModel::initialized(e, link_for(g), order, init);
    if (kind == EmbeddingKind::MLP1) {
      std::vector<double> theta(model.theta().begin(), model.theta().end());
      for (std::size_t h = 0; h < 4; ++h) theta[4 * p + h] = rng.uniform(-0.3, 0.3);
      model.set_theta(std::move(theta));
      bool near_kink = false;
      const auto th = model.theta();
      for (std::size_t i = 0; i < n && !near_kink; ++i) {
        const auto xi = net.vector(static_cast<NodeId>(i));
        for (std::size_t h = 0; h < 4; ++h) {
          double z = th[4 * p + h];
          for (std::size_t j = 0; j < p; ++j) z += th[h * p + j] * xi[j];
          if (std::abs(z) < 1e-3) near_kink = true;
        }
      }
      if (near_kink) continue;
    }
    LossSpec loss;
    loss.divergence = g;
    return {std::move(net), std::move(model), loss};
  }
}

double finite_difference_error(const Instance& inst) {
  const auto grad = full_gradient(inst.loss, inst.model, inst.net);
  SimilarityModel probe = inst.model;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    std::vector<double> theta(inst.model.theta().begin(), inst.model.theta().end());
    const double h = 1e-5 * std::max(1.0, std::abs(theta[i]));
    theta[i] += h;
    probe.set_theta(theta);
    const double up = full_loss(inst.loss, probe, inst.net);
    theta[i] -= 2.0 * h;
    probe.set_theta(theta);
    const double down = full_loss(inst.loss, probe, inst.net);
    const double fd = (up - down) / (2.0 * h);
    num += (grad[i] - fd) * (grad[i] - fd);
    den += grad[i] * grad[i] + fd * fd;
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

// Probability-weighted mean of the stochastic gradient over every outcome of
// the sampler with m+ = 1 and m- = 2: each j, each ordered candidate pair and
// each positive.
std::vector<double> enumerated_expectation(const Instance& inst, const std::vector<std::size_t>& u) {
  const auto support = support_set(inst.net, u);
  std::vector<double> mean(inst.model.param_count(), 0.0);
  const double pj = 1.0 / static_cast<double>(support.size());
  for (const auto& j : support) {
    std::vector<HyperIndex> slice;
    for (const auto& idx : fixed_slice(inst.net, u, j)) slice.push_back(idx);
    std::vector<HyperIndex> pos;
    for (const auto& idx : slice)
      if (inst.net.weight(idx) != 0.0) pos.push_back(idx);
    const double pc = 1.0 / static_cast<double>(slice.size() * slice.size());
    const double pp = pos.empty() ? 1.0 : 1.0 / static_cast<double>(pos.size());
    const std::size_t npos = std::max<std::size_t>(pos.size(), 1);
    for (const auto& a : slice) {
      for (const auto& b : slice) {
        for (std::size_t k = 0; k < npos; ++k) {
          Minibatch mb;
          mb.candidates = {a, b};
          mb.s_minus = static_cast<double>(slice.size()) / 2.0;
          if (!pos.empty()) {
            mb.positives = {pos[k]};
            mb.s_plus = static_cast<double>(pos.size());
          }
          const auto g = stochastic_gradient(inst.loss, inst.model, inst.net, mb);
          for (std::size_t i = 0; i < g.size(); ++i) mean[i] += pj * pc * pp * g[i];
        }
      }
    }
  }
  return mean;
}

}  // namespace

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Rng rng(args.seed, 5);
    bool all_ok = true;
    const GeneratingFunction divergences[] = {
        GeneratingFunction::logistic(), GeneratingFunction::kl(1e-4), GeneratingFunction::beta_div(0.5),
        GeneratingFunction::itakura_saito(), GeneratingFunction::inverse(), GeneratingFunction::quadratic(),
        GeneratingFunction::exponential(), GeneratingFunction::dual_logistic()};
    for (const auto& g : divergences) {
      for (EmbeddingKind kind : {EmbeddingKind::Linear, EmbeddingKind::MLP1}) {
        for (std::size_t order = 1; order <= 3; ++order) {
          double worst = 0.0;
          for (std::size_t t = 0; t < args.trials; ++t)
            worst = std::max(worst, finite_difference_error(random_instance(g, kind, order, rng)));
          const bool ok = worst <= 1e-5;
          all_ok = all_ok && ok;
          out << (ok ? "PASS" : "FAIL") << " gradient " << to_key(g) << " " << to_string(kind) << " U=" << order
              << " rel_err=" << worst << '\n';
        }
      }
    }

    const std::pair<std::size_t, std::vector<std::size_t>> cases[] = {
        {2, {}}, {2, {0}}, {3, {1}}, {3, {0, 2}}};
    for (const auto& [order, u] : cases) {
      Instance inst = random_instance(GeneratingFunction::kl(1e-4), EmbeddingKind::Linear, order, rng);
      // Five nodes keep |I| small enough to enumerate every outcome.
      while (inst.net.n() != 5) inst = random_instance(GeneratingFunction::kl(1e-4), EmbeddingKind::Linear, order, rng);
      const auto expected = enumerated_expectation(inst, u);
      const auto full = full_gradient(inst.loss, inst.model, inst.net);
      const double total = static_cast<double>(inst.net.index_count());
      const double alpha = u.empty() ? total : total / static_cast<double>(support_set(inst.net, u).size());
      double worst = 0.0;
      for (std::size_t i = 0; i < full.size(); ++i) worst = std::max(worst, std::abs(expected[i] - alpha * full[i]));
      const bool ok = worst <= 1e-10;
      all_ok = all_ok && ok;
      out << (ok ? "PASS" : "FAIL") << " unbiasedness U=" << order << " v=" << u.size() << " max_abs_err=" << worst << '\n';
    }
    return all_ok ? kOk : kNumericError;
  });
}

}  // namespace bhlr::cli
