#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace bhlr {

using NodeId = std::uint32_t;

/// An index i = (i_1, ..., i_U) into the node set. Node ids are 0-based.
class HyperIndex {
 public:
  HyperIndex() = default;
  explicit HyperIndex(std::vector<NodeId> entries) : entries_(std::move(entries)) {}
  HyperIndex(std::initializer_list<NodeId> entries) : entries_(entries) {}

  std::size_t size() const { return entries_.size(); }
  NodeId operator[](std::size_t k) const { return entries_[k]; }
  NodeId& operator[](std::size_t k) { return entries_[k]; }
  std::span<const NodeId> entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Non-decreasing order.
  bool is_canonical() const;
  HyperIndex sorted() const;

  auto operator<=>(const HyperIndex&) const = default;
  bool operator==(const HyperIndex&) const = default;

  std::string to_string() const;

 private:
  std::vector<NodeId> entries_;
};

struct HyperIndexHash {
  std::size_t operator()(const HyperIndex& i) const noexcept;
};

/// Sorts the entries of a raw index after checking them against n.
HyperIndex canonicalize(std::span<const NodeId> raw, std::size_t n);
inline HyperIndex canonicalize(const HyperIndex& raw, std::size_t n) { return canonicalize(raw.entries(), n); }

/// Which tuples enter the loss.
enum class IndexPolicy {
  AllTuples,        // [n]^U
  DistinctEntries,  // no repeated entry
  IncreasingOnly,   // i_1 < i_2 < ... < i_U
  Explicit,         // user-supplied subset
};

IndexPolicy parse_index_policy(std::string_view key);
std::string to_string(IndexPolicy policy);

/// The U data vectors of one tuple, as views into the owning network.
struct TupleView {
  HyperIndex index;
  std::vector<std::span<const double>> rows;

  std::size_t arity() const { return rows.size(); }
};

/// Entry-fixing constraint: positions[k] of the index must equal values[k].
/// positions are strictly increasing and lie in [0, U).
struct FixedEntries {
  std::vector<std::size_t> positions;
  std::vector<NodeId> values;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

class Hypernetwork;

/// Lazy, ordered walk over an index set, optionally restricted to a slice.
class IndexCursor {
 public:
  IndexCursor(const Hypernetwork& net, FixedEntries fixed = {});

  /// Writes the next index into `out`; false once exhausted.
  bool next(HyperIndex& out);

 private:
  bool step(std::ptrdiff_t pos, bool resume);
  bool find_valid(std::size_t pos, NodeId start);
  bool admissible(std::size_t pos, NodeId v) const;

  const Hypernetwork* net_;
  std::size_t order_;
  std::size_t n_;
  std::vector<std::optional<NodeId>> fixed_;
  std::vector<NodeId> cur_;
  std::size_t explicit_pos_ = 0;
  bool started_ = false;
  bool done_ = false;
};

/// Range adaptor so an index set can drive a range-for loop.
class IndexRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = HyperIndex;
    using difference_type = std::ptrdiff_t;
    using pointer = const HyperIndex*;
    using reference = const HyperIndex&;

    iterator() = default;
    explicit iterator(std::shared_ptr<IndexCursor> cursor);
    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    bool operator==(const iterator& other) const { return cursor_ == other.cursor_; }

   private:
    std::shared_ptr<IndexCursor> cursor_;
    HyperIndex current_;
  };

  IndexRange(const Hypernetwork& net, FixedEntries fixed = {}) : net_(&net), fixed_(std::move(fixed)) {}
  iterator begin() const;
  iterator end() const { return {}; }

 private:
  const Hypernetwork* net_;
  FixedEntries fixed_;
};

/// Data vectors plus symmetric hyperlink weights over U-tuples.
///
/// Weights are stored sparsely under canonical (sorted) indices, so every
/// permutation of a stored index reads the same value. Indices of the index
/// set without a stored weight read 0.
class Hypernetwork {
 public:
  using WeightMap = std::unordered_map<HyperIndex, double, HyperIndexHash>;

  Hypernetwork(std::size_t n, std::size_t p, std::size_t order, std::vector<double> vectors,
               IndexPolicy policy = IndexPolicy::DistinctEntries);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return p_; }
  std::size_t order() const { return order_; }
  IndexPolicy policy() const { return policy_; }
  void set_policy(IndexPolicy policy) { policy_ = policy; }

  std::span<const double> vector(NodeId i) const;
  std::span<const double> vectors() const { return vectors_; }

  /// Stores w at the canonical form of `index`, replacing any previous value.
  void set_weight(const HyperIndex& index, double w);
  /// Like set_weight but raises DuplicateEdge on a conflicting earlier value.
  void add_edge(const HyperIndex& index, double w);
  double weight(const HyperIndex& index) const;
  bool has_weight(const HyperIndex& index) const;
  const WeightMap& weights() const { return weights_; }
  /// Stored canonical indices in sorted order.
  std::vector<HyperIndex> sorted_edges() const;

  /// Explicit index set, in insertion order without duplicates.
  void set_explicit_indices(std::vector<HyperIndex> indices);
  const std::vector<HyperIndex>& explicit_indices() const { return explicit_list_; }

  /// True when `index` (as ordered) belongs to the index set of the policy.
  bool in_index_set(const HyperIndex& index) const;
  /// |I_n^(U)|, saturating at UINT64_MAX.
  std::uint64_t index_count() const;

  TupleView tuple(const HyperIndex& index) const;
  /// Fills `rows` with views for `index` without reallocating when possible.
  void fill_rows(const HyperIndex& index, std::vector<std::span<const double>>& rows) const;

  /// Every ordered index of the index set with nonzero weight, sorted.
  std::vector<HyperIndex> positive_indices() const;

 private:
  std::size_t n_;
  std::size_t p_;
  std::size_t order_;
  std::vector<double> vectors_;
  IndexPolicy policy_;
  WeightMap weights_;
  std::vector<HyperIndex> explicit_list_;
  std::unordered_set<HyperIndex, HyperIndexHash> explicit_set_;
};

IndexRange enumerate_index_set(const Hypernetwork& net);
IndexRange enumerate_index_set(const Hypernetwork& net, IndexPolicy policy);

/// Distinct orderings of a multiset of node ids, in lexicographic order.
std::vector<HyperIndex> distinct_permutations(const HyperIndex& index);

/// Keeps nodes in `nodes` (relabelled 0..m-1 in the given order) and every
/// stored weight and explicit index whose entries all survive.
Hypernetwork induced_subnetwork(const Hypernetwork& net, std::span<const NodeId> nodes);

// ---- file formats --------------------------------------------------------

struct VectorTable {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> values;  // row-major n x p
};

/// One node per line, p whitespace-separated floats; line number = node id.
VectorTable load_vectors(const std::string& path);
void save_vectors(const std::string& path, std::size_t p, std::span<const double> values);

/// Parsed hyperedge file: canonical index -> weight, plus line order.
struct EdgeList {
  std::unordered_map<HyperIndex, double, HyperIndexHash> weights;
  std::vector<HyperIndex> order;
};

/// U ids then one weight per line; '#' lines and blank lines are skipped.
/// When n > 0, ids are checked against it.
EdgeList load_hyperedges(const std::string& path, std::size_t order, std::size_t n = 0);
void save_hyperedges(const std::string& path, const Hypernetwork& net);

/// Builds a network from vectors + edge files. Under Explicit the listed
/// indices (including zero weights) form the index set.
Hypernetwork load_hypernetwork(const std::string& vectors_path, const std::string& edges_path, std::size_t order,
                               IndexPolicy policy);

struct DenseTensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;  // row-major
};

/// {"shape": [...], "values": [...]}.
DenseTensor load_tensor_json(const std::string& path);

/// Tensor-to-hypernetwork reduction: N = sum(shape) one-hot vectors, cell j
/// placed at (j_1, n_1 + j_2, ..., n_1 + ... + n_{U-1} + j_U), Explicit policy
/// over exactly those indices.
Hypernetwork from_tensor(const DenseTensor& tensor);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

}  // namespace bhlr
