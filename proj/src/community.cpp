#include "txtopo/community.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "txtopo/errors.hpp"
#include "txtopo/rng.hpp"

namespace txtopo {

namespace {

// Working graph for one aggregation level. Uses the A_ii = 2 * loop weight
// convention so weighted degrees are plain row sums.
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;  // neighbor != self
  std::vector<double> loop;                              // self-loop weight, counted once
  double m2 = 0.0;                                       // sum of all degrees

  int size() const { return static_cast<int>(adj.size()); }

  double degree(int v) const {
    double k = 2.0 * loop[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : adj[static_cast<std::size_t>(v)]) k += w;
    return k;
  }
};

LevelGraph level_from_symmetrized(const std::vector<std::vector<Arc>>& sym) {
  LevelGraph g;
  g.adj.resize(sym.size());
  g.loop.assign(sym.size(), 0.0);
  for (std::size_t v = 0; v < sym.size(); ++v) {
    for (const Arc& a : sym[v]) {
      g.adj[v].push_back({a.node, static_cast<double>(a.weight)});
    }
  }
  for (int v = 0; v < g.size(); ++v) g.m2 += g.degree(v);
  return g;
}

// Renumber community labels by first appearance in node order.
std::vector<int> renumber(const std::vector<int>& labels) {
  std::vector<int> remap(labels.size(), -1);
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    auto& slot = remap[static_cast<std::size_t>(labels[v])];
    if (slot < 0) slot = next++;
    out[v] = slot;
  }
  return out;
}

// One round of local moving; returns true when any node changed community.
// Candidate gains compare k_{i->c} - gamma * sum_tot[c] * k_i / m2, ties
// toward the lowest community id.
bool local_moving(const LevelGraph& g, double gamma, Rng& rng, std::vector<int>& comm) {
  const int n = g.size();
  std::vector<double> k(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) k[static_cast<std::size_t>(v)] = g.degree(v);

  std::vector<double> sum_tot(static_cast<std::size_t>(n), 0.0);
  for (int v = 0; v < n; ++v) {
    sum_tot[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] +=
        k[static_cast<std::size_t>(v)];
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  bool any_move = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const int v : order) {
      const int old_c = comm[static_cast<std::size_t>(v)];
      sum_tot[static_cast<std::size_t>(old_c)] -= k[static_cast<std::size_t>(v)];

      // Weight from v into each neighboring community.
      std::map<int, double> to_comm;
      to_comm[old_c] += 0.0;
      for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
        to_comm[comm[static_cast<std::size_t>(u)]] += w;
      }

      int best_c = old_c;
      double best_gain = 0.0;
      bool first = true;
      for (const auto& [c, kvc] : to_comm) {
        const double gain =
            kvc - gamma * sum_tot[static_cast<std::size_t>(c)] *
                      k[static_cast<std::size_t>(v)] / g.m2;
        if (first || gain > best_gain || (gain == best_gain && c < best_c)) {
          best_c = c;
          best_gain = gain;
          first = false;
        }
      }

      sum_tot[static_cast<std::size_t>(best_c)] += k[static_cast<std::size_t>(v)];
      if (best_c != old_c) {
        comm[static_cast<std::size_t>(v)] = best_c;
        moved = true;
        any_move = true;
      }
    }
  }
  return any_move;
}

// Incremental modularity bookkeeping for coordinated two-node moves.
// Communities live in [0, n); empty ones can be reused as fresh targets.
struct PartitionState {
  const LevelGraph* g = nullptr;
  double gamma = 1.0;
  std::vector<int> comm;
  std::vector<double> k;
  std::vector<double> sum_tot;
  std::vector<double> sum_in;
  std::vector<int> members;
  double q = 0.0;

  double term(int c) const {
    const auto ci = static_cast<std::size_t>(c);
    const double tot = sum_tot[ci] / g->m2;
    return sum_in[ci] / g->m2 - gamma * tot * tot;
  }

  void init(const LevelGraph& graph, double resolution, const std::vector<int>& partition) {
    g = &graph;
    gamma = resolution;
    comm = partition;
    const auto n = static_cast<std::size_t>(graph.size());
    k.assign(n, 0.0);
    sum_tot.assign(n, 0.0);
    sum_in.assign(n, 0.0);
    members.assign(n, 0);
    for (int v = 0; v < graph.size(); ++v) {
      k[static_cast<std::size_t>(v)] = graph.degree(v);
      ++members[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])];
      sum_tot[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] +=
          k[static_cast<std::size_t>(v)];
      sum_in[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] +=
          2.0 * graph.loop[static_cast<std::size_t>(v)];
      for (const auto& [u, w] : graph.adj[static_cast<std::size_t>(v)]) {
        if (comm[static_cast<std::size_t>(u)] == comm[static_cast<std::size_t>(v)]) {
          sum_in[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] += w;
        }
      }
    }
    q = 0.0;
    for (int c = 0; c < graph.size(); ++c) q += term(c);
  }

  double weight_to(int v, int c) const {
    double total = 0.0;
    for (const auto& [u, w] : g->adj[static_cast<std::size_t>(v)]) {
      if (comm[static_cast<std::size_t>(u)] == c) total += w;
    }
    return total;
  }

  void remove_node(int v) {
    const int c = comm[static_cast<std::size_t>(v)];
    q -= term(c);
    sum_tot[static_cast<std::size_t>(c)] -= k[static_cast<std::size_t>(v)];
    sum_in[static_cast<std::size_t>(c)] -=
        2.0 * weight_to(v, c) + 2.0 * g->loop[static_cast<std::size_t>(v)];
    --members[static_cast<std::size_t>(c)];
    comm[static_cast<std::size_t>(v)] = -1;
    q += term(c);
  }

  void insert_node(int v, int c) {
    q -= term(c);
    sum_in[static_cast<std::size_t>(c)] +=
        2.0 * weight_to(v, c) + 2.0 * g->loop[static_cast<std::size_t>(v)];
    sum_tot[static_cast<std::size_t>(c)] += k[static_cast<std::size_t>(v)];
    ++members[static_cast<std::size_t>(c)];
    comm[static_cast<std::size_t>(v)] = c;
    q += term(c);
  }
};

// Coordinated moves of adjacent pairs, the step single-node sweeps cannot
// take: both endpoints of an edge move at once, to the same or to different
// communities. Returns true when anything improved.
bool pair_refine(const LevelGraph& g, double gamma, std::vector<int>& partition) {
  PartitionState state;
  state.init(g, gamma, partition);

  const auto candidates_of = [&](int v) {
    std::vector<int> cands;
    cands.push_back(state.comm[static_cast<std::size_t>(v)]);
    for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
      (void)w;
      cands.push_back(state.comm[static_cast<std::size_t>(u)]);
    }
    // one empty community as a fresh target
    for (int c = 0; c < g.size(); ++c) {
      if (state.members[static_cast<std::size_t>(c)] == 0) {
        cands.push_back(c);
        break;
      }
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    return cands;
  };

  bool improved_any = false;
  for (int pass = 0; pass < 20; ++pass) {
    bool improved = false;
    for (int u = 0; u < g.size(); ++u) {
      for (const auto& [v, w] : g.adj[static_cast<std::size_t>(u)]) {
        (void)w;
        if (v <= u) continue;
        const int cu_old = state.comm[static_cast<std::size_t>(u)];
        const int cv_old = state.comm[static_cast<std::size_t>(v)];
        const double q_base = state.q;

        const auto cu_cands = candidates_of(u);
        const auto cv_cands = candidates_of(v);
        double best_gain = 1e-12;
        int best_cu = cu_old, best_cv = cv_old;
        state.remove_node(u);
        state.remove_node(v);
        const double q_removed = state.q;
        for (const int cu : cu_cands) {
          state.insert_node(u, cu);
          for (const int cv : cv_cands) {
            state.insert_node(v, cv);
            const double gain = state.q - q_base;
            if (gain > best_gain) {
              best_gain = gain;
              best_cu = cu;
              best_cv = cv;
            }
            state.remove_node(v);
          }
          state.remove_node(u);
          // removal must restore the intermediate state exactly
          state.q = q_removed;
        }
        state.insert_node(u, best_cu);
        state.insert_node(v, best_cv);
        if (best_cu != cu_old || best_cv != cv_old) {
          improved = true;
          improved_any = true;
        }
      }
    }
    if (!improved) break;
  }
  if (improved_any) partition = renumber(state.comm);
  return improved_any;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& comm, int n_comms) {
  LevelGraph out;
  out.adj.resize(static_cast<std::size_t>(n_comms));
  out.loop.assign(static_cast<std::size_t>(n_comms), 0.0);
  std::vector<std::map<int, double>> merged(static_cast<std::size_t>(n_comms));
  for (int v = 0; v < g.size(); ++v) {
    const int cv = comm[static_cast<std::size_t>(v)];
    out.loop[static_cast<std::size_t>(cv)] += g.loop[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
      const int cu = comm[static_cast<std::size_t>(u)];
      if (cu == cv) {
        if (u > v) out.loop[static_cast<std::size_t>(cv)] += w;
      } else {
        merged[static_cast<std::size_t>(cv)][cu] += w;
      }
    }
  }
  for (int c = 0; c < n_comms; ++c) {
    for (const auto& [u, w] : merged[static_cast<std::size_t>(c)]) {
      out.adj[static_cast<std::size_t>(c)].push_back({u, w});
    }
  }
  for (int c = 0; c < n_comms; ++c) out.m2 += out.degree(c);
  return out;
}

// Full two-phase run plus finest-level refinement passes. `init` seeds the
// starting partition; singletons give the vanilla algorithm, randomized
// starts let restarts escape coordinated-move local optima.
std::vector<int> louvain_single(const LevelGraph& base, double gamma, Rng& rng,
                                const std::vector<int>& init) {
  std::vector<int> partition = init;

  for (int round = 0; round < 10; ++round) {
    for (int pass = 0; pass < 100; ++pass) {
      const std::vector<int> before = partition;

      // Local moving on the aggregated view of the current partition.
      const std::vector<int> labels = renumber(partition);
      const int n_comms = 1 + *std::max_element(labels.begin(), labels.end());
      const LevelGraph level = aggregate(base, labels, n_comms);
      std::vector<int> comm(static_cast<std::size_t>(n_comms));
      std::iota(comm.begin(), comm.end(), 0);
      const bool moved_coarse = local_moving(level, gamma, rng, comm);

      // Fold the coarse moves back onto the nodes, then refine at the finest
      // level so single nodes can leave a merged block.
      for (std::size_t v = 0; v < partition.size(); ++v) {
        partition[v] = comm[static_cast<std::size_t>(labels[v])];
      }
      partition = renumber(partition);
      const bool moved_fine = local_moving(base, gamma, rng, partition);
      partition = renumber(partition);

      if ((!moved_coarse && !moved_fine) || partition == before) break;
    }
    if (!pair_refine(base, gamma, partition)) break;
  }
  return partition;
}

}  // namespace

double modularity(const std::vector<std::vector<Arc>>& adj,
                  const std::vector<int>& partition, double resolution) {
  const auto n = adj.size();
  double m = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    for (const Arc& a : adj[v]) m += a.weight;
  }
  m /= 2.0;  // each undirected edge appears twice
  if (m <= 0.0) return 0.0;

  const int n_comms = 1 + *std::max_element(partition.begin(), partition.end());
  std::vector<double> internal(static_cast<std::size_t>(n_comms), 0.0);
  std::vector<double> total(static_cast<std::size_t>(n_comms), 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = static_cast<std::size_t>(partition[v]);
    for (const Arc& a : adj[v]) {
      total[c] += a.weight;
      if (partition[static_cast<std::size_t>(a.node)] == partition[v]) {
        internal[c] += a.weight;
      }
    }
  }
  double q = 0.0;
  for (int c = 0; c < n_comms; ++c) {
    const double in_c = internal[static_cast<std::size_t>(c)] / 2.0;
    const double tot_c = total[static_cast<std::size_t>(c)];
    q += in_c / m - resolution * (tot_c / (2.0 * m)) * (tot_c / (2.0 * m));
  }
  return q;
}

double modularity(const TransactionalGraph& g, const std::vector<int>& partition,
                  double resolution) {
  return modularity(symmetrized_adjacency(g.simple()), partition, resolution);
}

std::vector<int> louvain_partition(const TransactionalGraph& g, std::uint64_t seed,
                                   const LouvainOptions& opts) {
  return louvain_partition(g.simple(), seed, opts);
}

std::vector<int> louvain_partition(const DirectedGraph& g, std::uint64_t seed,
                                   const LouvainOptions& opts) {
  const int n = g.node_count();
  if (n == 0) throw DataError("louvain needs a non-empty graph");

  const auto sym = symmetrized_adjacency(g);
  const LevelGraph base = level_from_symmetrized(sym);

  std::vector<int> singletons(static_cast<std::size_t>(n));
  std::iota(singletons.begin(), singletons.end(), 0);
  if (base.m2 <= 0.0) return singletons;

  std::vector<int> best = singletons;
  double best_q = modularity(sym, best, opts.resolution);
  const int restarts = std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "louvain-restart", static_cast<std::uint64_t>(r)));
    // Restart 0 runs from singletons; later restarts from random coarse
    // partitions, which reach optima that need coordinated moves.
    std::vector<int> init = singletons;
    if (r > 0) {
      const int groups = 1 + static_cast<int>(rng.uniform_int(1, std::max(2, n / 2)));
      for (int v = 0; v < n; ++v) {
        init[static_cast<std::size_t>(v)] =
            static_cast<int>(rng.uniform_int(0, groups - 1));
      }
      init = renumber(init);
    }
    std::vector<int> part = louvain_single(base, opts.resolution, rng, init);
    const double q = modularity(sym, part, opts.resolution);
    if (q > best_q) {
      best_q = q;
      best = std::move(part);
    }
  }
  return best;
}

std::vector<Community> extract_communities(const TemporalSnapshot& tts,
                                           std::uint64_t seed, int min_size,
                                           const LouvainOptions& opts,
                                           ExtractStats* stats) {
  const auto partition = louvain_partition(tts.graph, seed, opts);
  const int n_comms = partition.empty()
                          ? 0
                          : 1 + *std::max_element(partition.begin(), partition.end());
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(n_comms));
  for (std::size_t v = 0; v < partition.size(); ++v) {
    cells[static_cast<std::size_t>(partition[v])].push_back(static_cast<int>(v));
  }
  // Cells keep ascending node indices, so ordering by first member orders by
  // smallest account id (graph ids are sorted).
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  if (stats) {
    stats->raw_cells = n_comms;
    stats->dropped_small = 0;
  }
  std::vector<Community> out;
  int ordinal = 0;
  for (const auto& cell : cells) {
    if (static_cast<int>(cell.size()) < min_size) {
      if (stats) ++stats->dropped_small;
      continue;
    }
    Community c;
    c.id = CommunityId{tts.index, ordinal++};
    c.subgraph = tts.graph.simple().induced(cell);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace txtopo
