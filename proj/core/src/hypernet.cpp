#include "bhlr/hypernet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bhlr/errors.hpp"
#include "counting.hpp"

namespace bhlr {

// ---- HyperIndex -----------------------------------------------------------

bool HyperIndex::is_canonical() const { return std::is_sorted(entries_.begin(), entries_.end()); }

HyperIndex HyperIndex::sorted() const {
  std::vector<NodeId> e = entries_;
  std::sort(e.begin(), e.end());
  return HyperIndex(std::move(e));
}

std::string HyperIndex::to_string() const {
  std::string s = "(";
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(entries_[k]);
  }
  return s + ")";
}

std::size_t HyperIndexHash::operator()(const HyperIndex& i) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (NodeId v : i) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

HyperIndex canonicalize(std::span<const NodeId> raw, std::size_t n) {
  for (NodeId v : raw) {
    if (v >= n) throw OutOfRange("node id " + std::to_string(v) + " >= n = " + std::to_string(n));
  }
  std::vector<NodeId> e(raw.begin(), raw.end());
  std::sort(e.begin(), e.end());
  return HyperIndex(std::move(e));
}

IndexPolicy parse_index_policy(std::string_view key) {
  if (key == "all") return IndexPolicy::AllTuples;
  if (key == "distinct") return IndexPolicy::DistinctEntries;
  if (key == "increasing") return IndexPolicy::IncreasingOnly;
  if (key == "explicit") return IndexPolicy::Explicit;
  throw ConfigError("unknown index policy '" + std::string(key) + "' (all|distinct|increasing|explicit)");
}

std::string to_string(IndexPolicy policy) {
  switch (policy) {
    case IndexPolicy::AllTuples: return "all";
    case IndexPolicy::DistinctEntries: return "distinct";
    case IndexPolicy::IncreasingOnly: return "increasing";
    case IndexPolicy::Explicit: return "explicit";
  }
  return "?";
}

// ---- IndexCursor ----------------------------------------------------------

IndexCursor::IndexCursor(const Hypernetwork& net, FixedEntries fixed)
    : net_(&net), order_(net.order()), n_(net.n()), fixed_(net.order()), cur_(net.order(), 0) {
  if (fixed.positions.size() != fixed.values.size()) throw LengthMismatch("fixed positions/values differ in length");
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    const std::size_t pos = fixed.positions[k];
    if (pos >= order_ || (k > 0 && pos <= fixed.positions[k - 1]))
      throw OutOfRange("fixed positions must be strictly increasing in [0, U)");
    if (fixed.values[k] >= n_) throw OutOfRange("fixed value " + std::to_string(fixed.values[k]) + " >= n");
    fixed_[pos] = fixed.values[k];
  }
  if (order_ == 0) done_ = true;
}

bool IndexCursor::admissible(std::size_t pos, NodeId v) const {
  switch (net_->policy()) {
    case IndexPolicy::AllTuples:
    case IndexPolicy::Explicit:
      return true;
    case IndexPolicy::DistinctEntries:
      for (std::size_t k = 0; k < pos; ++k)
        if (cur_[k] == v) return false;
      for (std::size_t k = pos + 1; k < order_; ++k)
        if (fixed_[k] && *fixed_[k] == v) return false;
      return true;
    case IndexPolicy::IncreasingOnly: {
      if (pos > 0 && v <= cur_[pos - 1]) return false;
      if (static_cast<std::size_t>(v) + (order_ - 1 - pos) >= n_) return false;
      for (std::size_t k = pos + 1; k < order_; ++k) {
        if (fixed_[k]) return static_cast<std::size_t>(*fixed_[k]) >= v + (k - pos);
      }
      return true;
    }
  }
  return false;
}

bool IndexCursor::find_valid(std::size_t pos, NodeId start) {
  if (fixed_[pos]) {
    const NodeId v = *fixed_[pos];
    if (v < start || !admissible(pos, v)) return false;
    cur_[pos] = v;
    return true;
  }
  for (std::size_t v = start; v < n_; ++v) {
    if (admissible(pos, static_cast<NodeId>(v))) {
      cur_[pos] = static_cast<NodeId>(v);
      return true;
    }
  }
  return false;
}

bool IndexCursor::step(std::ptrdiff_t pos, bool resume) {
  const auto last = static_cast<std::ptrdiff_t>(order_) - 1;
  while (pos >= 0) {
    const auto p = static_cast<std::size_t>(pos);
    const NodeId start = resume ? cur_[p] + 1 : 0;
    if (find_valid(p, start)) {
      if (pos == last) return true;
      ++pos;
      resume = false;
    } else {
      --pos;
      resume = true;
    }
  }
  return false;
}

bool IndexCursor::next(HyperIndex& out) {
  if (done_) return false;
  if (net_->policy() == IndexPolicy::Explicit) {
    const auto& list = net_->explicit_indices();
    while (explicit_pos_ < list.size()) {
      const HyperIndex& cand = list[explicit_pos_++];
      bool match = true;
      for (std::size_t k = 0; k < order_ && match; ++k)
        if (fixed_[k] && cand[k] != *fixed_[k]) match = false;
      if (match) {
        out = cand;
        return true;
      }
    }
    done_ = true;
    return false;
  }
  const bool ok = started_ ? step(static_cast<std::ptrdiff_t>(order_) - 1, true) : step(0, false);
  started_ = true;
  if (!ok) {
    done_ = true;
    return false;
  }
  if (out.size() != order_) {
    out = HyperIndex(cur_);
  } else {
    for (std::size_t k = 0; k < order_; ++k) out[k] = cur_[k];
  }
  return true;
}

IndexRange::iterator::iterator(std::shared_ptr<IndexCursor> cursor) : cursor_(std::move(cursor)) {
  if (!cursor_->next(current_)) cursor_.reset();
}

IndexRange::iterator& IndexRange::iterator::operator++() {
  if (cursor_ && !cursor_->next(current_)) cursor_.reset();
  return *this;
}

IndexRange::iterator IndexRange::begin() const {
  return iterator(std::make_shared<IndexCursor>(*net_, fixed_));
}

// ---- Hypernetwork ---------------------------------------------------------

Hypernetwork::Hypernetwork(std::size_t n, std::size_t p, std::size_t order, std::vector<double> vectors,
                           IndexPolicy policy)
    : n_(n), p_(p), order_(order), vectors_(std::move(vectors)), policy_(policy) {
  if (order_ == 0) throw ConfigError("tuple order U must be >= 1");
  if (vectors_.size() != n_ * p_)
    throw ShapeError("vector table holds " + std::to_string(vectors_.size()) + " values, expected n*p = " +
                     std::to_string(n_ * p_));
}

std::span<const double> Hypernetwork::vector(NodeId i) const {
  if (i >= n_) throw OutOfRange("node id " + std::to_string(i) + " >= n = " + std::to_string(n_));
  return std::span<const double>(vectors_).subspan(static_cast<std::size_t>(i) * p_, p_);
}

void Hypernetwork::set_weight(const HyperIndex& index, double w) {
  if (index.size() != order_) throw DimMismatch("index " + index.to_string() + " has arity != U");
  weights_[canonicalize(index, n_)] = w;
}

void Hypernetwork::add_edge(const HyperIndex& index, double w) {
  if (index.size() != order_) throw DimMismatch("index " + index.to_string() + " has arity != U");
  HyperIndex key = canonicalize(index, n_);
  auto [it, inserted] = weights_.try_emplace(key, w);
  if (!inserted && it->second != w) throw DuplicateEdge("conflicting weights for " + key.to_string());
}

double Hypernetwork::weight(const HyperIndex& index) const {
  if (index.is_canonical()) {
    auto it = weights_.find(index);
    return it == weights_.end() ? 0.0 : it->second;
  }
  auto it = weights_.find(index.sorted());
  return it == weights_.end() ? 0.0 : it->second;
}

bool Hypernetwork::has_weight(const HyperIndex& index) const { return weights_.count(index.sorted()) > 0; }

std::vector<HyperIndex> Hypernetwork::sorted_edges() const {
  std::vector<HyperIndex> out;
  out.reserve(weights_.size());
  for (const auto& [k, w] : weights_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

void Hypernetwork::set_explicit_indices(std::vector<HyperIndex> indices) {
  explicit_list_.clear();
  explicit_set_.clear();
  for (auto& idx : indices) {
    if (idx.size() != order_) throw DimMismatch("explicit index " + idx.to_string() + " has arity != U");
    for (NodeId v : idx)
      if (v >= n_) throw OutOfRange("explicit index " + idx.to_string() + " out of range");
    if (explicit_set_.insert(idx).second) explicit_list_.push_back(std::move(idx));
  }
}

bool Hypernetwork::in_index_set(const HyperIndex& index) const {
  if (index.size() != order_) return false;
  for (NodeId v : index)
    if (v >= n_) return false;
  switch (policy_) {
    case IndexPolicy::AllTuples:
      return true;
    case IndexPolicy::DistinctEntries: {
      HyperIndex s = index.sorted();
      return std::adjacent_find(s.begin(), s.end()) == s.end();
    }
    case IndexPolicy::IncreasingOnly:
      for (std::size_t k = 1; k < index.size(); ++k)
        if (index[k] <= index[k - 1]) return false;
      return true;
    case IndexPolicy::Explicit:
      return explicit_set_.count(index) > 0;
  }
  return false;
}

std::uint64_t Hypernetwork::index_count() const {
  switch (policy_) {
    case IndexPolicy::AllTuples:
      return detail::sat_pow(n_, order_);
    case IndexPolicy::DistinctEntries:
      return detail::falling(n_, order_);
    case IndexPolicy::IncreasingOnly:
      return detail::binom(n_, order_);
    case IndexPolicy::Explicit:
      return explicit_list_.size();
  }
  return 0;
}

TupleView Hypernetwork::tuple(const HyperIndex& index) const {
  TupleView view{index, {}};
  fill_rows(index, view.rows);
  return view;
}

void Hypernetwork::fill_rows(const HyperIndex& index, std::vector<std::span<const double>>& rows) const {
  rows.resize(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) rows[k] = vector(index[k]);
}

std::vector<HyperIndex> Hypernetwork::positive_indices() const {
  std::vector<HyperIndex> out;
  if (policy_ == IndexPolicy::Explicit) {
    for (const auto& idx : explicit_list_)
      if (weight(idx) != 0.0) out.push_back(idx);
  } else {
    for (const auto& [key, w] : weights_) {
      if (w == 0.0) continue;
      for (auto& perm : distinct_permutations(key))
        if (in_index_set(perm)) out.push_back(std::move(perm));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

IndexRange enumerate_index_set(const Hypernetwork& net) { return IndexRange(net); }

IndexRange enumerate_index_set(const Hypernetwork& net, IndexPolicy policy) {
  if (policy != net.policy()) throw ConfigError("enumerate_index_set: policy differs from the network's; use set_policy");
  return IndexRange(net);
}

std::vector<HyperIndex> distinct_permutations(const HyperIndex& index) {
  std::vector<NodeId> e(index.begin(), index.end());
  std::sort(e.begin(), e.end());
  std::vector<HyperIndex> out;
  do {
    out.emplace_back(e);
  } while (std::next_permutation(e.begin(), e.end()));
  return out;
}

Hypernetwork induced_subnetwork(const Hypernetwork& net, std::span<const NodeId> nodes) {
  constexpr auto kAbsent = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> relabel(net.n(), kAbsent);
  std::vector<double> vectors;
  vectors.reserve(nodes.size() * net.dim());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const NodeId old = nodes[k];
    if (old >= net.n()) throw OutOfRange("induced_subnetwork: node " + std::to_string(old) + " out of range");
    if (relabel[old] != kAbsent) throw ConfigError("induced_subnetwork: node listed twice");
    relabel[old] = static_cast<NodeId>(k);
    auto row = net.vector(old);
    vectors.insert(vectors.end(), row.begin(), row.end());
  }
  Hypernetwork sub(nodes.size(), net.dim(), net.order(), std::move(vectors), net.policy());
  auto map_index = [&](const HyperIndex& idx, HyperIndex& out) {
    std::vector<NodeId> e;
    e.reserve(idx.size());
    for (NodeId v : idx) {
      if (relabel[v] == kAbsent) return false;
      e.push_back(relabel[v]);
    }
    out = HyperIndex(std::move(e));
    return true;
  };
  for (const auto& key : net.sorted_edges()) {
    HyperIndex mapped;
    if (map_index(key, mapped)) sub.set_weight(mapped, net.weight(key));
  }
  if (net.policy() == IndexPolicy::Explicit) {
    std::vector<HyperIndex> kept;
    for (const auto& idx : net.explicit_indices()) {
      HyperIndex mapped;
      if (map_index(idx, mapped)) kept.push_back(std::move(mapped));
    }
    sub.set_explicit_indices(std::move(kept));
  }
  return sub;
}

// ---- file formats ---------------------------------------------------------

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_token(std::string_view tok, T& value) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

VectorTable load_vectors(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();

  VectorTable table;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto toks = split_ws(lines[ln]);
    if (toks.empty()) throw ParseError(path, ln + 1, "blank line inside vector table");
    if (ln == 0) table.p = toks.size();
    if (toks.size() != table.p)
      throw ParseError(path, ln + 1, "expected " + std::to_string(table.p) + " values, found " + std::to_string(toks.size()));
    for (auto tok : toks) {
      double v;
      if (!parse_token(tok, v) || !std::isfinite(v)) throw ParseError(path, ln + 1, "bad float '" + std::string(tok) + "'");
      table.values.push_back(v);
    }
  }
  table.n = lines.size();
  return table;
}

void save_vectors(const std::string& path, std::size_t p, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  for (std::size_t i = 0; p > 0 && i < values.size(); i += p) {
    for (std::size_t k = 0; k < p; ++k) out << (k ? " " : "") << format_double(values[i + k]);
    out << '\n';
  }
}

EdgeList load_hyperedges(const std::string& path, std::size_t order, std::size_t n) {
  auto in = open_input(path);
  EdgeList edges;
  std::size_t ln = 0;
  for (std::string line; std::getline(in, line);) {
    ++ln;
    auto toks = split_ws(line);
    if (toks.empty() || toks.front().starts_with('#')) continue;
    if (toks.size() != order + 1)
      throw ParseError(path, ln, "expected " + std::to_string(order) + " ids and a weight, found " + std::to_string(toks.size()) + " fields");
    std::vector<NodeId> ids(order);
    for (std::size_t k = 0; k < order; ++k) {
      if (!parse_token(toks[k], ids[k])) throw ParseError(path, ln, "bad node id '" + std::string(toks[k]) + "'");
      if (n > 0 && ids[k] >= n)
        throw OutOfRange(path + ":" + std::to_string(ln) + ": node id " + std::to_string(ids[k]) + " >= n = " + std::to_string(n));
    }
    double w;
    if (!parse_token(toks[order], w) || !std::isfinite(w)) throw ParseError(path, ln, "bad weight '" + std::string(toks[order]) + "'");
    std::sort(ids.begin(), ids.end());
    HyperIndex key(std::move(ids));
    auto [it, inserted] = edges.weights.try_emplace(key, w);
    if (inserted) {
      edges.order.push_back(key);
    } else if (it->second != w) {
      throw DuplicateEdge(path + ":" + std::to_string(ln) + ": conflicting weights for " + key.to_string());
    }
  }
  return edges;
}

void save_hyperedges(const std::string& path, const Hypernetwork& net) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  auto write = [&](const HyperIndex& idx, double w) {
    for (NodeId v : idx) out << v << ' ';
    out << format_double(w) << '\n';
  };
  if (net.policy() == IndexPolicy::Explicit) {
    for (const auto& idx : net.explicit_indices()) write(idx, net.weight(idx));
  } else {
    for (const auto& key : net.sorted_edges()) {
      const double w = net.weight(key);
      if (w != 0.0) write(key, w);
    }
  }
}

Hypernetwork load_hypernetwork(const std::string& vectors_path, const std::string& edges_path, std::size_t order,
                               IndexPolicy policy) {
  VectorTable table = load_vectors(vectors_path);
  EdgeList edges = load_hyperedges(edges_path, order, table.n);
  Hypernetwork net(table.n, table.p, order, std::move(table.values), policy);
  for (const auto& key : edges.order) net.set_weight(key, edges.weights.at(key));
  if (policy == IndexPolicy::Explicit) net.set_explicit_indices(edges.order);
  return net;
}

DenseTensor load_tensor_json(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
  DenseTensor t;
  try {
    t.shape = j.at("shape").get<std::vector<std::size_t>>();
    t.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(path + ": " + e.what());
  }
  return t;
}

Hypernetwork from_tensor(const DenseTensor& tensor) {
  const std::size_t order = tensor.shape.size();
  if (order == 0) throw ShapeError("tensor must have at least one mode");
  std::size_t cells = 1;
  std::size_t total = 0;
  std::vector<std::size_t> offsets(order, 0);
  for (std::size_t u = 0; u < order; ++u) {
    if (tensor.shape[u] == 0) throw ShapeError("tensor mode " + std::to_string(u) + " has size 0");
    offsets[u] = total;
    total += tensor.shape[u];
    cells *= tensor.shape[u];
  }
  if (tensor.values.size() != cells)
    throw ShapeError("tensor has " + std::to_string(tensor.values.size()) + " values, shape implies " + std::to_string(cells));

  std::vector<double> onehot(total * total, 0.0);
  for (std::size_t i = 0; i < total; ++i) onehot[i * total + i] = 1.0;
  Hypernetwork net(total, total, order, std::move(onehot), IndexPolicy::Explicit);

  std::vector<HyperIndex> cells_list;
  cells_list.reserve(cells);
  std::vector<std::size_t> j(order, 0);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    const double v = tensor.values[flat];
    if (!std::isfinite(v)) throw DomainError("tensor cell " + std::to_string(flat) + " is not finite");
    std::vector<NodeId> idx(order);
    for (std::size_t u = 0; u < order; ++u) idx[u] = static_cast<NodeId>(offsets[u] + j[u]);
    HyperIndex mapped(std::move(idx));
    if (v != 0.0) net.set_weight(mapped, v);
    cells_list.push_back(std::move(mapped));
    // row-major odometer: last mode fastest
    for (std::size_t u = order; u-- > 0;) {
      if (++j[u] < tensor.shape[u]) break;
      j[u] = 0;
    }
  }
  net.set_explicit_indices(std::move(cells_list));
  return net;
}

}  // namespace bhlr
