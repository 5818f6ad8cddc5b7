#include "txtopo/graph.hpp"

#include <algorithm>
#include <cassert>

namespace txtopo {

DirectedGraph DirectedGraph::from_weighted_edges(
    std::vector<std::string> ids,
    const std::map<std::pair<int, int>, int>& weights) {
  DirectedGraph g;
  g.ids_ = std::move(ids);
  assert(std::is_sorted(g.ids_.begin(), g.ids_.end()));
  const auto n = g.ids_.size();
  g.out_.resize(n);
  g.in_.resize(n);
  for (const auto& [pair, w] : weights) {
    const auto [from, to] = pair;
    assert(from != to && w > 0);
    g.out_[static_cast<std::size_t>(from)].push_back({to, w});
    g.in_[static_cast<std::size_t>(to)].push_back({from, w});
    ++g.edge_count_;
    g.total_weight_ += w;
  }
  // map iteration is ordered, so out_ lists are already sorted; in_ needs it.
  for (auto& arcs : g.in_) {
    std::sort(arcs.begin(), arcs.end(),
              [](const Arc& a, const Arc& b) { return a.node < b.node; });
  }
  return g;
}

int DirectedGraph::weight(int from, int to) const {
  const auto& arcs = out_[static_cast<std::size_t>(from)];
  const auto it = std::lower_bound(
      arcs.begin(), arcs.end(), to,
      [](const Arc& a, int v) { return a.node < v; });
  return (it != arcs.end() && it->node == to) ? it->weight : 0;
}

DirectedGraph DirectedGraph::induced(std::span<const int> members) const {
  std::vector<int> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> local(ids_.size(), -1);
  std::vector<std::string> sub_ids;
  sub_ids.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    local[static_cast<std::size_t>(sorted[i])] = static_cast<int>(i);
    sub_ids.push_back(ids_[static_cast<std::size_t>(sorted[i])]);
  }
  std::map<std::pair<int, int>, int> weights;
  for (const int v : sorted) {
    for (const Arc& a : out_[static_cast<std::size_t>(v)]) {
      if (local[static_cast<std::size_t>(a.node)] >= 0) {
        weights[{local[static_cast<std::size_t>(v)],
                 local[static_cast<std::size_t>(a.node)]}] = a.weight;
      }
    }
  }
  return from_weighted_edges(std::move(sub_ids), weights);
}

std::vector<std::vector<Arc>> symmetrized_adjacency(const DirectedGraph& g) {
  const auto n = static_cast<std::size_t>(g.node_count());
  std::vector<std::vector<Arc>> adj(n);
  for (int v = 0; v < g.node_count(); ++v) {
    std::map<int, int> merged;
    for (const Arc& a : g.out(v)) merged[a.node] += a.weight;
    for (const Arc& a : g.in(v)) merged[a.node] += a.weight;
    auto& arcs = adj[static_cast<std::size_t>(v)];
    arcs.reserve(merged.size());
    for (const auto& [u, w] : merged) arcs.push_back({u, w});
  }
  return adj;
}

TransactionalGraph TransactionalGraph::build(std::span<const Transaction> txs) {
  std::vector<std::string> ids;
  ids.reserve(txs.size() * 2);
  for (const Transaction& t : txs) {
    ids.push_back(t.sender);
    ids.push_back(t.receiver);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const auto index_of = [&ids](const std::string& id) {
    return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };

  TransactionalGraph g;
  std::map<std::pair<int, int>, int> weights;
  g.multi_.reserve(txs.size());
  for (const Transaction& t : txs) {
    const int s = index_of(t.sender);
    const int r = index_of(t.receiver);
    g.multi_.push_back({s, r, t.timestamp});
    ++weights[{s, r}];
  }
  g.simple_ = DirectedGraph::from_weighted_edges(std::move(ids), weights);
  return g;
}

}  // namespace txtopo
