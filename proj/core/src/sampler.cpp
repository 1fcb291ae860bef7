#include "bhlr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bhlr/errors.hpp"
#include "counting.hpp"

namespace bhlr {
namespace {

using detail::binom;
using detail::falling;
using detail::sat_mul;

// Uniform r-subset of [0, N), sorted (Floyd's algorithm).
std::vector<std::uint64_t> uniform_subset(std::uint64_t N, std::size_t r, Rng& rng) {
  std::vector<std::uint64_t> chosen;
  chosen.reserve(r);
  for (std::uint64_t j = N - r; j < N; ++j) {
    const std::uint64_t t = rng.uniform_index(j + 1);
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
      chosen.push_back(t);
    else
      chosen.push_back(j);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

// A run of free positions [first, first+count) that must take strictly
// increasing values in [lo, hi).
struct Segment {
  std::size_t first;
  std::size_t count;
  std::int64_t lo;
  std::int64_t hi;
};

std::vector<Segment> increasing_segments(std::size_t order, std::size_t n, const std::vector<std::size_t>& u,
                                         const std::vector<NodeId>& j) {
  std::vector<Segment> segs;
  std::int64_t prev_pos = -1;
  std::int64_t prev_val = -1;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto pos = static_cast<std::int64_t>(u[k]);
    const auto val = static_cast<std::int64_t>(j[k]);
    segs.push_back({static_cast<std::size_t>(prev_pos + 1), static_cast<std::size_t>(pos - prev_pos - 1), prev_val + 1, val});
    prev_pos = pos;
    prev_val = val;
  }
  segs.push_back({static_cast<std::size_t>(prev_pos + 1), static_cast<std::size_t>(static_cast<std::int64_t>(order) - 1 - prev_pos),
                  prev_val + 1, static_cast<std::int64_t>(n)});
  return segs;
}

const std::vector<HyperIndex>& empty_list() {
  static const std::vector<HyperIndex> empty;
  return empty;
}

}  // namespace

void SamplerConfig::validate(std::size_t order) const {
  if (v >= order) throw ConfigError("sampler.v must lie in [0, U)");
  if (u.size() != v) throw ConfigError("sampler.u must hold exactly v positions");
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] >= order) throw ConfigError("sampler.u entries must lie in [0, U)");
    if (k > 0 && u[k] <= u[k - 1]) throw ConfigError("sampler.u must be strictly increasing");
  }
  if (!exhaustive && (m_plus == 0 || m_minus == 0)) throw ConfigError("sampler.m_plus and sampler.m_minus must be >= 1");
  if (j_distribution == JDistribution::Custom) {
    if (v == 0) throw ConfigError("custom j distribution needs v >= 1");
    for (double p : j_weights)
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("j weights must be finite and non-negative");
  }
}

IndexRange fixed_slice(const Hypernetwork& net, const std::vector<std::size_t>& u, const std::vector<NodeId>& j) {
  if (u.size() != j.size()) throw LengthMismatch("fixed_slice: u and j differ in length");
  return IndexRange(net, FixedEntries{u, j});
}

std::vector<std::vector<NodeId>> support_set(const Hypernetwork& net, const std::vector<std::size_t>& u) {
  const std::size_t v = u.size();
  std::vector<std::vector<NodeId>> out;
  if (v == 0) {
    HyperIndex any;
    IndexCursor c(net);
    if (c.next(any)) out.emplace_back();
    return out;
  }
  if (net.policy() == IndexPolicy::Explicit) {
    for (const auto& idx : net.explicit_indices()) {
      std::vector<NodeId> j(v);
      for (std::size_t k = 0; k < v; ++k) j[k] = idx[u[k]];
      out.push_back(std::move(j));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  std::vector<NodeId> j(v, 0);
  const auto n = static_cast<NodeId>(net.n());
  if (n == 0) return out;
  HyperIndex probe;
  while (true) {
    IndexCursor c(net, FixedEntries{u, j});
    if (c.next(probe)) out.push_back(j);
    std::size_t k = v;
    while (k > 0 && ++j[k - 1] == n) j[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

MinibatchSampler::MinibatchSampler(const Hypernetwork& net, SamplerConfig cfg) : net_(&net), cfg_(std::move(cfg)) {
  cfg_.validate(net.order());
  const std::size_t U = net.order();
  const std::size_t v = cfg_.v;
  const std::uint64_t n = net.n();

  for (const auto& idx : net.positive_indices()) positives_[key_of(idx)].push_back(idx);

  if (net.policy() == IndexPolicy::Explicit) {
    for (const auto& idx : net.explicit_indices()) explicit_slices_[key_of(idx)].push_back(idx);
    support_size_ = explicit_slices_.size();
  } else if (v == 0) {
    support_size_ = net.index_count() > 0 ? 1 : 0;
  } else {
    switch (net.policy()) {
      case IndexPolicy::AllTuples: support_size_ = detail::sat_pow(n, v); break;
      case IndexPolicy::DistinctEntries: support_size_ = n >= U ? falling(n, v) : 0; break;
      case IndexPolicy::IncreasingOnly: support_size_ = n >= U ? binom(n - U + v, v) : 0; break;
      case IndexPolicy::Explicit: break;
    }
  }
  if (support_size_ == 0) throw ConfigError("sampler support set is empty");

  const bool need_list = v > 0 && (net.policy() == IndexPolicy::Explicit || cfg_.j_distribution == JDistribution::Custom);
  if (need_list) support_list_ = support_set(net, cfg_.u);

  if (cfg_.j_distribution == JDistribution::Custom) {
    if (cfg_.j_weights.size() != support_list_.size())
      throw ConfigError("j weights have " + std::to_string(cfg_.j_weights.size()) + " entries, support set has " +
                        std::to_string(support_list_.size()));
    const double total = std::accumulate(cfg_.j_weights.begin(), cfg_.j_weights.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("j weights sum to zero");
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("j weights must sum to 1");
    cumulative_.resize(cfg_.j_weights.size());
    std::partial_sum(cfg_.j_weights.begin(), cfg_.j_weights.end(), cumulative_.begin());
  }
}

HyperIndex MinibatchSampler::key_of(const HyperIndex& index) const {
  std::vector<NodeId> key(cfg_.v);
  for (std::size_t k = 0; k < cfg_.v; ++k) key[k] = index[cfg_.u[k]];
  return HyperIndex(std::move(key));
}

std::vector<NodeId> MinibatchSampler::draw_j(Rng& rng) const {
  const std::size_t v = cfg_.v;
  if (v == 0) return {};
  if (cfg_.j_distribution == JDistribution::Custom) {
    const double r = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    if (it == cumulative_.end()) --it;
    // Skip trailing zero-probability entries that upper_bound can land on.
    while (cfg_.j_weights[static_cast<std::size_t>(it - cumulative_.begin())] == 0.0 && it != cumulative_.begin()) --it;
    return support_list_[static_cast<std::size_t>(it - cumulative_.begin())];
  }
  if (!support_list_.empty()) return support_list_[rng.uniform_index(support_list_.size())];

  const std::uint64_t n = net_->n();
  const std::size_t U = net_->order();
  std::vector<NodeId> j(v);
  switch (net_->policy()) {
    case IndexPolicy::AllTuples:
      for (auto& x : j) x = static_cast<NodeId>(rng.uniform_index(n));
      break;
    case IndexPolicy::DistinctEntries:
      for (std::size_t k = 0; k < v; ++k) {
        NodeId x;
        do {
          x = static_cast<NodeId>(rng.uniform_index(n));
        } while (std::find(j.begin(), j.begin() + static_cast<std::ptrdiff_t>(k), x) != j.begin() + static_cast<std::ptrdiff_t>(k));
        j[k] = x;
      }
      break;
    case IndexPolicy::IncreasingOnly: {
      // j_k - u_k is a non-decreasing sequence in [0, n-U]; shifting by k
      // turns it into a v-subset of [0, n-U+v).
      const auto s = uniform_subset(n - U + v, v, rng);
      for (std::size_t k = 0; k < v; ++k) j[k] = static_cast<NodeId>(s[k] - k + cfg_.u[k]);
      break;
    }
    case IndexPolicy::Explicit:
      break;
  }
  return j;
}

std::uint64_t MinibatchSampler::slice_size(const std::vector<NodeId>& j) const {
  if (j.size() != cfg_.v) throw LengthMismatch("slice_size: j must have v entries");
  const std::uint64_t n = net_->n();
  const std::size_t U = net_->order();
  const std::size_t v = cfg_.v;
  for (NodeId x : j)
    if (x >= n) throw OutOfRange("fixed value " + std::to_string(x) + " >= n");
  switch (net_->policy()) {
    case IndexPolicy::AllTuples:
      return detail::sat_pow(n, U - v);
    case IndexPolicy::DistinctEntries: {
      for (std::size_t a = 0; a < v; ++a)
        for (std::size_t b = a + 1; b < v; ++b)
          if (j[a] == j[b]) return 0;
      return falling(n - v, U - v);
    }
    case IndexPolicy::IncreasingOnly: {
      std::uint64_t size = 1;
      for (const auto& s : increasing_segments(U, n, cfg_.u, j)) {
        if (s.hi < s.lo) return 0;
        size = sat_mul(size, binom(static_cast<std::uint64_t>(s.hi - s.lo), s.count));
      }
      return size;
    }
    case IndexPolicy::Explicit: {
      auto it = explicit_slices_.find(HyperIndex(j));
      return it == explicit_slices_.end() ? 0 : it->second.size();
    }
  }
  return 0;
}

const std::vector<HyperIndex>& MinibatchSampler::slice_positives(const std::vector<NodeId>& j) const {
  auto it = positives_.find(HyperIndex(j));
  return it == positives_.end() ? empty_list() : it->second;
}

double MinibatchSampler::alpha() const {
  const double total = static_cast<double>(net_->index_count());
  return cfg_.v == 0 ? total : total / static_cast<double>(support_size_);
}

HyperIndex MinibatchSampler::draw_from_slice(const std::vector<NodeId>& j, Rng& rng) const {
  const std::uint64_t n = net_->n();
  const std::size_t U = net_->order();
  std::vector<NodeId> idx(U, 0);
  std::vector<bool> fixed(U, false);
  for (std::size_t k = 0; k < cfg_.v; ++k) {
    idx[cfg_.u[k]] = j[k];
    fixed[cfg_.u[k]] = true;
  }
  switch (net_->policy()) {
    case IndexPolicy::AllTuples:
      for (std::size_t pos = 0; pos < U; ++pos)
        if (!fixed[pos]) idx[pos] = static_cast<NodeId>(rng.uniform_index(n));
      break;
    case IndexPolicy::DistinctEntries: {
      std::vector<NodeId> used(j.begin(), j.end());
      for (std::size_t pos = 0; pos < U; ++pos) {
        if (fixed[pos]) continue;
        NodeId x;
        do {
          x = static_cast<NodeId>(rng.uniform_index(n));
        } while (std::find(used.begin(), used.end(), x) != used.end());
        idx[pos] = x;
        used.push_back(x);
      }
      break;
    }
    case IndexPolicy::IncreasingOnly:
      for (const auto& s : increasing_segments(U, n, cfg_.u, j)) {
        if (s.count == 0) continue;
        const auto vals = uniform_subset(static_cast<std::uint64_t>(s.hi - s.lo), s.count, rng);
        for (std::size_t k = 0; k < s.count; ++k) idx[s.first + k] = static_cast<NodeId>(s.lo + static_cast<std::int64_t>(vals[k]));
      }
      break;
    case IndexPolicy::Explicit: {
      const auto& list = explicit_slices_.at(HyperIndex(j));
      return list[rng.uniform_index(list.size())];
    }
  }
  return HyperIndex(std::move(idx));
}

std::vector<HyperIndex> MinibatchSampler::whole_slice(const std::vector<NodeId>& j) const {
  if (net_->policy() == IndexPolicy::Explicit) return explicit_slices_.at(HyperIndex(j));
  std::vector<HyperIndex> out;
  for (const auto& idx : fixed_slice(*net_, cfg_.u, j)) out.push_back(idx);
  return out;
}

Minibatch MinibatchSampler::draw_for(const std::vector<NodeId>& j, Rng& rng) const {
  const std::uint64_t size = slice_size(j);
  if (size == 0) throw OutOfRange("j lies outside the support set (empty slice)");
  const auto& pos = slice_positives(j);

  Minibatch mb;
  if (cfg_.v > 0) mb.fixed_j = j;
  if (cfg_.exhaustive) {
    mb.candidates = whole_slice(j);
    mb.positives = pos;
    mb.s_minus = 1.0;
    mb.s_plus = pos.empty() ? 0.0 : 1.0;
    return mb;
  }
  mb.candidates.reserve(cfg_.m_minus);
  for (std::size_t k = 0; k < cfg_.m_minus; ++k) mb.candidates.push_back(draw_from_slice(j, rng));
  mb.s_minus = static_cast<double>(size) / static_cast<double>(cfg_.m_minus);
  if (!pos.empty()) {
    mb.positives.reserve(cfg_.m_plus);
    for (std::size_t k = 0; k < cfg_.m_plus; ++k) mb.positives.push_back(pos[rng.uniform_index(pos.size())]);
    mb.s_plus = static_cast<double>(pos.size()) / static_cast<double>(cfg_.m_plus);
  }
  if (cfg_.practical_scaling) {
    mb.s_minus = 1.0;
    mb.s_plus = pos.empty() ? 0.0 : 1.0;
  }
  return mb;
}

Minibatch MinibatchSampler::draw(Rng& rng) const {
  const std::size_t attempts = cfg_.v == 0 ? 1 : cfg_.max_retries + 1;
  for (std::size_t a = 0; a < attempts; ++a) {
    const auto j = draw_j(rng);
    if (slice_positives(j).empty() && !cfg_.allow_empty_positive) continue;
    return draw_for(j, rng);
  }
  throw EmptyPositiveSlice("no slice with a nonzero weight after " + std::to_string(attempts) + " draws of j");
}

std::vector<double> stochastic_gradient(const LossSpec& spec, const SimilarityModel& model, const Hypernetwork& net,
                                        const Minibatch& mb) {
  const GeneratingFunction& g = spec.divergence;
  std::vector<double> grad(model.param_count(), 0.0);
  SimilarityEvaluator ev(model);
  std::vector<std::span<const double>> rows;
  auto visit = [&](const HyperIndex& idx, bool positive) {
    net.fill_rows(idx, rows);
    try {
      const double mu = clamp_mu(spec, ev.forward(rows));
      const double h = phi_hess(g, mu);
      const double c = positive ? -spec.eta_scale * mb.s_plus * net.weight(idx) * h : mb.s_minus * mu * h;
      ev.backward(c, grad);
    } catch (const DomainError& e) {
      throw DomainError("tuple " + idx.to_string() + ": " + e.what());
    }
  };
  for (const auto& idx : mb.candidates) visit(idx, false);
  if (mb.s_plus != 0.0)
    for (const auto& idx : mb.positives) visit(idx, true);
  return grad;
}

}  // namespace bhlr
