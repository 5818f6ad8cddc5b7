#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace txtopo {

// One raw transaction record. Amounts, currencies and locations are never
// loaded: the pipeline is topology-only.
struct Transaction {
  std::string sender;
  std::string receiver;
  std::int64_t timestamp = 0;   // UTC epoch seconds
  std::size_t source_row = 0;   // original record index, for diagnostics
};

struct Arc {
  int node = 0;    // neighbor index
  int weight = 0;  // transaction multiplicity of the ordered pair
};

// Simple directed view of a transaction multigraph: distinct ordered account
// pairs, weighted by multiplicity, no self-loops. Node ids are kept sorted so
// index order is canonical. Immutable once built.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  // `ids` must be sorted and unique; keys of `weights` are index pairs.
  static DirectedGraph from_weighted_edges(
      std::vector<std::string> ids,
      const std::map<std::pair<int, int>, int>& weights);

  int node_count() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& node_ids() const { return ids_; }
  const std::string& node_id(int v) const { return ids_[static_cast<std::size_t>(v)]; }

  // Arcs are sorted by neighbor index.
  const std::vector<Arc>& out(int v) const { return out_[static_cast<std::size_t>(v)]; }
  const std::vector<Arc>& in(int v) const { return in_[static_cast<std::size_t>(v)]; }

  // Degrees over distinct counterparties, not multiplicities.
  int out_degree(int v) const { return static_cast<int>(out_[static_cast<std::size_t>(v)].size()); }
  int in_degree(int v) const { return static_cast<int>(in_[static_cast<std::size_t>(v)].size()); }

  std::int64_t edge_count() const { return edge_count_; }      // distinct ordered pairs
  std::int64_t total_weight() const { return total_weight_; }  // sum of multiplicities

  int weight(int from, int to) const;
  bool has_edge(int from, int to) const { return weight(from, to) > 0; }

  // Induced subgraph over the given node indices; subgraph ids stay sorted.
  DirectedGraph induced(std::span<const int> members) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
  std::int64_t edge_count_ = 0;
  std::int64_t total_weight_ = 0;
};

// Symmetrized weighted adjacency: weight(u,v) + weight(v,u) per unordered
// pair. Community detection and the undirected node metrics run on this view.
std::vector<std::vector<Arc>> symmetrized_adjacency(const DirectedGraph& g);

struct MultiEdge {
  int src = 0;
  int dst = 0;
  std::int64_t timestamp = 0;
};

// Directed transaction multigraph plus its collapsed simple view.
class TransactionalGraph {
 public:
  static TransactionalGraph build(std::span<const Transaction> txs);

  const DirectedGraph& simple() const { return simple_; }
  const std::vector<MultiEdge>& multi_edges() const { return multi_; }
  std::int64_t multi_edge_count() const { return static_cast<std::int64_t>(multi_.size()); }
  bool empty() const { return simple_.node_count() == 0; }

 private:
  DirectedGraph simple_;
  std::vector<MultiEdge> multi_;
};

}  // namespace txtopo
