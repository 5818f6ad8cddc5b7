#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "txtopo/community.hpp"
#include "txtopo/errors.hpp"
#include "txtopo/synthgen.hpp"
#include "txtopo/temporal.hpp"

using namespace txtopo;

namespace {

TransactionalGraph graph_from_pairs(const std::vector<std::pair<int, int>>& edges) {
  std::vector<Transaction> txs;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    txs.push_back({"n" + std::to_string(edges[i].first / 10) + std::to_string(edges[i].first % 10),
                   "n" + std::to_string(edges[i].second / 10) + std::to_string(edges[i].second % 10),
                   static_cast<std::int64_t>(i), i});
  }
  return TransactionalGraph::build(txs);
}

}  // namespace

TEST_CASE("two cliques joined by one edge resolve into the cliques") {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      edges.push_back({i, j});
      edges.push_back({i + 5, j + 5});
    }
  }
  edges.push_back({0, 5});
  const auto g = graph_from_pairs(edges);
  const auto part = louvain_partition(g, 1);
  std::set<int> left, right;
  for (int v = 0; v < 5; ++v) left.insert(part[static_cast<std::size_t>(v)]);
  for (int v = 5; v < 10; ++v) right.insert(part[static_cast<std::size_t>(v)]);
  CHECK(left.size() == 1);
  CHECK(right.size() == 1);
  CHECK(*left.begin() != *right.begin());

  const double q = modularity(g, part);
  const double best = testing::brute_force_max_modularity(symmetrized_adjacency(g.simple()));
  CHECK(q == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("edgeless graph gives singleton communities at zero modularity") {
  const DirectedGraph g = DirectedGraph::from_weighted_edges({"a", "b", "c"}, {});
  const auto part = louvain_partition(g, 9);
  CHECK(part == std::vector<int>{0, 1, 2});
  CHECK(modularity(symmetrized_adjacency(g), part) == 0.0);
}

TEST_CASE("louvain is deterministic for a fixed seed") {
  const auto txs = testing::random_transactions(30, 120, 3);
  const auto g = TransactionalGraph::build(txs);
  const auto p1 = louvain_partition(g, 42);
  const auto p2 = louvain_partition(g, 42);
  CHECK(p1 == p2);
}

TEST_CASE("louvain beats the singleton partition") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto txs = testing::random_transactions(15, 40, seed);
    const auto g = TransactionalGraph::build(txs);
    const auto part = louvain_partition(g, seed);
    std::vector<int> singletons(static_cast<std::size_t>(g.simple().node_count()));
    for (std::size_t v = 0; v < singletons.size(); ++v) singletons[v] = static_cast<int>(v);
    CHECK(modularity(g, part) >= modularity(g, singletons));
  }
}

TEST_CASE("louvain matches exhaustive enumeration on small graphs") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int nodes = 4 + static_cast<int>(seed % 5);  // 4..8
    const auto txs = testing::random_transactions(
        nodes, nodes + static_cast<int>(seed % 7), seed * 31 + 1);
    const auto g = TransactionalGraph::build(txs);
    if (g.simple().node_count() == 0) continue;
    const auto part = louvain_partition(g, seed);
    const double q = modularity(g, part);
    const double best =
        testing::brute_force_max_modularity(symmetrized_adjacency(g.simple()));
    CHECK(q == doctest::Approx(best).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("extract_communities applies the size filter") {
  // One 5-clique, one 4-path, one 3-path and an isolated pair in a window.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) edges.push_back({i, j});
  }
  edges.push_back({10, 11});
  edges.push_back({11, 12});
  edges.push_back({12, 13});
  edges.push_back({20, 21});
  edges.push_back({21, 22});
  edges.push_back({30, 31});
  const auto g = graph_from_pairs(edges);
  TemporalSnapshot snap;
  snap.index = 0;
  snap.window_start = 0;
  snap.window_end = 100;
  snap.graph = g;
  ExtractStats stats;
  const auto communities = extract_communities(snap, 5, 4, {}, &stats);
  REQUIRE(communities.size() == 2);
  CHECK(communities[0].size() + communities[1].size() == 9);
  CHECK(stats.dropped_small == 2);
  for (const Community& c : communities) {
    CHECK(c.size() >= 4);
    CHECK(c.id.snapshot == 0);
  }
  CHECK(communities[0].id.ordinal == 0);
  CHECK(communities[1].id.ordinal == 1);
}

TEST_CASE("retained communities are node-disjoint induced subgraphs") {
  const auto txs = testing::random_transactions(40, 90, 77);
  TemporalSnapshot snap;
  snap.index = 3;
  snap.graph = TransactionalGraph::build(txs);
  const auto communities = extract_communities(snap, 9, 4);
  std::set<std::string> seen;
  for (const Community& c : communities) {
    for (const std::string& id : c.subgraph.node_ids()) {
      CHECK(seen.insert(id).second);
    }
  }
}

TEST_CASE("planted disjoint components each become one community") {
  const auto templates = randomized_templates(8, 5);
  const auto corpus = generate_corpus(templates, 30, 5);
  const auto snaps = dissect(corpus.transactions, 7 * 86400);
  REQUIRE(snaps.size() == 1);
  ExtractStats stats;
  const auto communities = extract_communities(snaps[0], 1, 4, {}, &stats);
  CHECK(communities.size() == templates.size());

  // map node -> community and check each oracle component is intact
  std::map<std::string, int> comm_of;
  for (std::size_t i = 0; i < communities.size(); ++i) {
    for (const std::string& id : communities[i].subgraph.node_ids()) {
      comm_of[id] = static_cast<int>(i);
    }
  }
  for (const PlantedComponent& planted : corpus.oracle) {
    std::set<int> comms;
    for (const std::string& node : planted.nodes) {
      REQUIRE(comm_of.count(node) == 1);
      comms.insert(comm_of[node]);
    }
    CHECK(comms.size() == 1);
  }
}

TEST_CASE("louvain rejects an empty graph") {
  TransactionalGraph g;
  CHECK_THROWS_AS(louvain_partition(g, 1), DataError);
}
