#include "bhlr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "bhlr/errors.hpp"

namespace bhlr {
namespace {

struct Partial {
  double terms = 0.0;     // sum of phi'(mu) mu - phi(mu) - eta w phi'(mu)
  double constant = 0.0;  // sum of phi(eta w)
  std::uint64_t count = 0;
  std::vector<double> grad;
};

void guard_size(const LossSpec& spec, const Hypernetwork& net) {
  const std::uint64_t count = net.index_count();
  if (count > kMaxIndexCount && !spec.force)
    throw ConfigError("index set has " + std::to_string(count) + " tuples (> 1e8); pass force to proceed");
}

[[noreturn]] void rethrow_for(const HyperIndex& index, const DomainError& e) {
  throw DomainError("tuple " + index.to_string() + ": " + e.what());
}

// Walks every `stride`-th index of the index set, starting at `offset`.
Partial accumulate(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net, bool want_grad,
                   unsigned offset, unsigned stride) {
  const GeneratingFunction& g = spec.divergence;
  Partial out;
  if (want_grad) out.grad.assign(model.param_count(), 0.0);
  SimilarityEvaluator ev(model);
  std::vector<std::span<const double>> rows;
  IndexCursor cursor(net);
  HyperIndex index;
  std::uint64_t k = 0;
  while (cursor.next(index)) {
    if (k++ % stride != offset) continue;
    net.fill_rows(index, rows);
    const double ew = spec.eta_scale * net.weight(index);
    try {
      const double mu = clamp_mu(spec, ev.forward(rows));
      const double grad_phi = phi_grad(g, mu);
      out.terms += grad_phi * mu - phi(g, mu) - ew * grad_phi;
      out.constant += phi(g, ew);
      if (want_grad) ev.backward(phi_hess(g, mu) * (mu - ew), out.grad);
    } catch (const DomainError& e) {
      rethrow_for(index, e);
    }
    ++out.count;
  }
  return out;
}

Partial reduce(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net, bool want_grad) {
  guard_size(spec, net);
  const unsigned workers = std::max(1u, spec.threads);
  if (workers == 1) return accumulate(spec, model, net, want_grad, 0, 1);

  std::vector<Partial> parts(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        parts[w] = accumulate(spec, model, net, want_grad, w, workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Partial total = std::move(parts[0]);
  for (unsigned w = 1; w < workers; ++w) {
    total.terms += parts[w].terms;
    total.constant += parts[w].constant;
    total.count += parts[w].count;
    if (want_grad)
      for (std::size_t i = 0; i < total.grad.size(); ++i) total.grad[i] += parts[w].grad[i];
  }
  return total;
}

double finish_loss(const Partial& p) {
  if (p.count == 0) throw ConfigError("index set is empty");
  const double n = static_cast<double>(p.count);
  const double value = p.terms / n + p.constant / n;
  if (!std::isfinite(value)) throw DomainError("loss is not finite");
  return value;
}

void finish_grad(Partial& p) {
  if (p.count == 0) throw ConfigError("index set is empty");
  const double inv = 1.0 / static_cast<double>(p.count);
  for (double& v : p.grad) v *= inv;
}

double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace

void validate(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net) {
  if (!(spec.eta_scale > 0.0) || !std::isfinite(spec.eta_scale)) throw ConfigError("eta_scale must be positive");
  if (!(spec.clamp_margin >= 0.0)) throw ConfigError("clamp_margin must be non-negative");
  const Interval d = domain(spec.divergence);
  if (std::isfinite(d.lo) && std::isfinite(d.hi) && 2.0 * spec.clamp_margin >= d.hi - d.lo)
    throw ConfigError("clamp_margin leaves no room inside dom(phi)");
  const Interval r = link_range(model.link());
  // With no margin, an open domain side must not be reachable by the link.
  if (spec.clamp_margin == 0.0) {
    if (std::isfinite(d.lo) && !d.lo_closed && r.lo < d.lo)
      throw ConfigError("link " + to_string(model.link()) + " can leave dom(phi) of " + to_key(spec.divergence) +
                        "; set clamp_margin > 0");
    if (std::isfinite(d.hi) && !d.hi_closed && r.hi > d.hi)
      throw ConfigError("link " + to_string(model.link()) + " can leave dom(phi) of " + to_key(spec.divergence) +
                        "; set clamp_margin > 0");
  }
  if (model.order() != net.order()) throw ConfigError("model order U differs from the network's");
  if (model.embedding().p != net.dim()) throw ConfigError("model input dimension differs from the network's");
  if (net.policy() != IndexPolicy::Explicit && !in_domain(spec.divergence, 0.0))
    throw ConfigError("divergence " + to_key(spec.divergence) +
                      " is undefined at weight 0, which every unobserved tuple carries; use an explicit index set");
  for (const auto& [index, w] : net.weights()) {
    if (!in_domain(spec.divergence, spec.eta_scale * w))
      throw ConfigError("weight " + std::to_string(w) + " of " + index.to_string() + " lies outside dom(phi) of " +
                        to_key(spec.divergence));
  }
}

double clamp_mu(const LossSpec& spec, double mu) {
  const Interval d = domain(spec.divergence);
  if (std::isfinite(d.lo) && mu < d.lo + spec.clamp_margin) mu = d.lo + spec.clamp_margin;
  if (std::isfinite(d.hi) && mu > d.hi - spec.clamp_margin) mu = d.hi - spec.clamp_margin;
  return mu;
}

double full_loss(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net) {
  return finish_loss(reduce(spec, model, net, false));
}

std::vector<double> full_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net) {
  Partial p = reduce(spec, model, net, true);
  finish_grad(p);
  return std::move(p.grad);
}

LossAndGradient full_loss_and_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net) {
  Partial p = reduce(spec, model, net, true);
  const double loss = finish_loss(p);
  finish_grad(p);
  return {loss, std::move(p.grad)};
}

double specialized_loss(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net) {
  const GeneratingFunction& g = spec.divergence;
  switch (g.kind) {
    case GeneratorKind::Logistic:
    case GeneratorKind::Quadratic:
    case GeneratorKind::Beta:
      break;
    case GeneratorKind::KL:
      if (g.epsilon != 0.0) throw UnsupportedKind("closed-form KL loss requires epsilon = 0");
      break;
    default:
      throw UnsupportedKind("no closed-form loss for " + to_key(g));
  }
  guard_size(spec, net);

  SimilarityEvaluator ev(model);
  std::vector<std::span<const double>> rows;
  IndexCursor cursor(net);
  HyperIndex index;
  double terms = 0.0;
  double constant = 0.0;
  std::uint64_t count = 0;
  while (cursor.next(index)) {
    net.fill_rows(index, rows);
    const double w = spec.eta_scale * net.weight(index);
    if (!in_domain(g, w)) throw DomainError("tuple " + index.to_string() + ": weight outside dom(phi)");
    const double mu = clamp_mu(spec, ev.forward(rows));
    switch (g.kind) {
      case GeneratorKind::Logistic:
        terms += -w * std::log(mu) - (1.0 - w) * std::log1p(-mu);
        constant += xlogx(w) + xlogx(1.0 - w);
        break;
      case GeneratorKind::KL:
        terms += -w * std::log(mu) + mu;
        constant += xlogx(w) - w;
        break;
      case GeneratorKind::Quadratic: {
        const double r = w - mu;
        terms += 0.5 * r * r;
        break;
      }
      case GeneratorKind::Beta: {
        const double b = g.beta;
        terms += -w * std::pow(mu, b) / b + std::pow(mu, 1.0 + b) / (1.0 + b);
        constant += std::pow(w, 1.0 + b) / (b * (1.0 + b));
        break;
      }
      default:
        break;
    }
    ++count;
  }
  if (count == 0) throw ConfigError("index set is empty");
  const double n = static_cast<double>(count);
  return terms / n + constant / n;
}

}  // namespace bhlr
