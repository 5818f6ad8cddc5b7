#pragma once

#include <cstdint>
#include <vector>

#include "txtopo/graph.hpp"
#include "txtopo/temporal.hpp"

namespace txtopo {

struct CommunityId {
  int snapshot = 0;
  int ordinal = 0;

  friend bool operator==(const CommunityId&, const CommunityId&) = default;
  friend auto operator<=>(const CommunityId&, const CommunityId&) = default;
};

// A detected community: the unit of labeling, feature extraction, and
// training. The subgraph is the induced simple directed view with weights.
struct Community {
  CommunityId id;
  DirectedGraph subgraph;

  int size() const { return subgraph.node_count(); }
};

struct LouvainOptions {
  double resolution = 1.0;
  // Independent seeded runs (the first from singletons, the rest from
  // random coarse partitions); the best-modularity partition wins. Small
  // graphs have local optima a single run sticks in.
  int restarts = 16;
};

// Louvain partition of the symmetrized weighted view. Returns one community
// id per node index, numbered by first appearance in node order.
// Deterministic for a fixed seed. Throws DataError on an empty graph.
std::vector<int> louvain_partition(const DirectedGraph& g, std::uint64_t seed,
                                   const LouvainOptions& opts = {});
std::vector<int> louvain_partition(const TransactionalGraph& g, std::uint64_t seed,
                                   const LouvainOptions& opts = {});

// Newman modularity of a partition on a symmetrized weighted adjacency with
// no self-loops. Zero-weight graphs score 0.
double modularity(const std::vector<std::vector<Arc>>& adj,
                  const std::vector<int>& partition, double resolution = 1.0);
double modularity(const TransactionalGraph& g, const std::vector<int>& partition,
                  double resolution = 1.0);

struct ExtractStats {
  int raw_cells = 0;
  int dropped_small = 0;
};

// Louvain cells of the snapshot as induced subgraphs, dropping cells smaller
// than min_size. Ordinals follow the cells' smallest account id.
std::vector<Community> extract_communities(const TemporalSnapshot& tts,
                                           std::uint64_t seed, int min_size = 4,
                                           const LouvainOptions& opts = {},
                                           ExtractStats* stats = nullptr);

}  // namespace txtopo
