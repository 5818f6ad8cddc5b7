#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "txtopo/indicators.hpp"
#include "txtopo/synthgen.hpp"

using namespace txtopo;

namespace {

// Graph over nodes 0..n-1 named a00..; index order matches name order.
DirectedGraph make_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "a%02d", i);
    ids.emplace_back(buf);
  }
  std::map<std::pair<int, int>, int> weights;
  for (const auto& e : edges) weights[e] = 1;
  return DirectedGraph::from_weighted_edges(std::move(ids), weights);
}

}  // namespace

TEST_CASE("collector indicator boundary and hand cases") {
  // star: nodes 1..8 -> 0 gives max in-degree 8; node 9 receives from 4.
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 8; ++i) edges.push_back({i, 0});
  for (int i = 1; i <= 4; ++i) edges.push_back({i, 9});
  const auto g = make_graph(10, edges);
  CHECK(collector_indicator(0, g) == 1.0);                       // at the max
  CHECK(collector_indicator(1, g) == 0.0);                       // receives nothing
  CHECK(collector_indicator(9, g) == doctest::Approx(0.9).epsilon(1e-12));  // deg 4 of 8
}

TEST_CASE("sink indicator boundary and hand cases") {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 8; ++i) edges.push_back({0, i});
  edges.push_back({9, 1});
  edges.push_back({9, 2});
  const auto g = make_graph(10, edges);
  CHECK(sink_indicator(0, g) == 1.0);
  CHECK(sink_indicator(1, g) == 0.0);
  CHECK(sink_indicator(9, g) == doctest::Approx(0.8).epsilon(1e-12));  // R=2 -> 0.8
}

TEST_CASE("collusion indicator hand cases") {
  // x=0 -> {1,2,3}; a=4 -> {1,2} is the only other funder.
  const auto g1 = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {4, 1}, {4, 2}});
  CHECK(collusion_indicator(0, g1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // recipients share no other funder
  const auto g2 = make_graph(4, {{0, 1}, {0, 2}, {3, 1}});
  CHECK(collusion_indicator(0, g2) == 0.0);

  // x and a fund exactly the same two nodes
  const auto g3 = make_graph(4, {{0, 1}, {0, 2}, {3, 1}, {3, 2}});
  CHECK(collusion_indicator(0, g3) == 1.0);
  CHECK(collusion_indicator(3, g3) == 1.0);
}

TEST_CASE("branching indicator hand cases") {
  // x=0 -> {1,2}; both children pay exactly two nodes
  const auto g1 = make_graph(7, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}});
  CHECK(branching_indicator(0, g1) == 1.0);
  CHECK(branching_indicator(3, g1) == 0.0);  // m = 0
  const auto g_m1 = make_graph(4, {{0, 1}, {1, 2}, {1, 3}});
  CHECK(branching_indicator(0, g_m1) == 0.0);  // m = 1

  // one child pays two, the other three
  const auto g2 =
      make_graph(8, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}, {2, 7}});
  CHECK(branching_indicator(0, g2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("scatter-gather indicator hand cases") {
  // perfect: 0 -> {1,2,3} -> 4
  const auto perfect = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}, {3, 4}});
  CHECK(scatter_gather_indicator(0, perfect) == 1.0);

  // out-degree guard: exactly 2 recipients scores 0
  const auto two = make_graph(5, {{0, 1}, {0, 2}, {1, 3}, {2, 4}});
  CHECK(scatter_gather_indicator(0, two) == 0.0);

  // distinct 2-step targets: 1/3
  const auto spread =
      make_graph(7, {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 5}, {3, 6}});
  CHECK(scatter_gather_indicator(0, spread) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gather-scatter indicator hand cases") {
  // 3 in, 3 out
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 3; ++i) edges.push_back({i, 0});
  for (int i = 4; i <= 6; ++i) edges.push_back({0, i});
  CHECK(gather_scatter_indicator(0, make_graph(7, edges)) == 1.0);

  // deg- = 2 fails the guard
  edges.clear();
  for (int i = 1; i <= 2; ++i) edges.push_back({i, 0});
  for (int i = 3; i <= 5; ++i) edges.push_back({0, i});
  CHECK(gather_scatter_indicator(0, make_graph(6, edges)) == 0.0);

  // 6 out, 3 in -> 1 - 3/9
  edges.clear();
  for (int i = 1; i <= 3; ++i) edges.push_back({i, 0});
  for (int i = 4; i <= 9; ++i) edges.push_back({0, i});
  CHECK(gather_scatter_indicator(0, make_graph(10, edges)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("directed 4-cycle is unlabeled") {
  const auto cycle = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto result = label_graph(cycle);
  CHECK(!result.label.labeled);
  for (const double v : result.indicator_max) CHECK(v == 0.0);
}

TEST_CASE("planted perfect branching labels as branching with score 1") {
  PatternTemplate t{Pattern::Branching, 3, 0, 1.0};
  const auto gen = generate_pattern(t, 2, 0, 600, "b");
  const auto g = TransactionalGraph::build(gen.transactions).simple();
  const auto result = label_graph(g);
  REQUIRE(result.label.labeled);
  CHECK(result.label.pattern == Pattern::Branching);
  CHECK(result.label.score == 1.0);
}

TEST_CASE("argmax rule picks the highest indicator") {
  // two fan-in hubs with disjoint sender sets: node 0 receives from 8,
  // node 9 from 4, so I1 maxes at node 0 and nothing else competes
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 8; ++i) edges.push_back({i, 0});
  for (int i = 10; i <= 13; ++i) edges.push_back({i, 9});
  const auto g = make_graph(14, edges);
  const auto result = label_graph(g);
  REQUIRE(result.label.labeled);
  CHECK(result.label.pattern == Pattern::Collector);
  CHECK(result.label.score == 1.0);
  CHECK(result.label.argmax_node == 0);
  CHECK(result.indicator_max[0] == 1.0);
  CHECK(collector_indicator(9, g) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("sink community labels as sink") {
  // hub 0 pays 1..5; nobody else has out-degree >= 2
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= 5; ++i) edges.push_back({0, i});
  const auto result = label_graph(make_graph(6, edges));
  REQUIRE(result.label.labeled);
  CHECK(result.label.pattern == Pattern::Sink);
}

TEST_CASE("indicator ranges stay in [0,1] on random graphs") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto g = testing::random_directed_graph(
        4 + static_cast<int>(seed % 12), 6 + static_cast<int>(seed % 30), seed, 3);
    for (int v = 0; v < g.node_count(); ++v) {
      const auto iv = indicator_vector(v, g);
      for (const double value : iv.values) {
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
      }
    }
  }
}

TEST_CASE("guard soundness") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto g = testing::random_directed_graph(
        4 + static_cast<int>(seed % 8), 5 + static_cast<int>(seed % 20), seed + 500);
    for (int v = 0; v < g.node_count(); ++v) {
      const auto iv = indicator_vector(v, g);
      if (g.out_degree(v) < 2) CHECK(iv.values[3] == 0.0);
      if (g.out_degree(v) <= 2) CHECK(iv.values[4] == 0.0);
      if (g.out_degree(v) <= 2 || g.in_degree(v) <= 2) CHECK(iv.values[5] == 0.0);
      if (g.in_degree(v) < 2) CHECK(iv.values[0] == 0.0);
      if (g.out_degree(v) < 2) CHECK(iv.values[1] == 0.0);
    }
  }
}

TEST_CASE("relabeling accounts leaves indicators and labels unchanged") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto g = testing::random_directed_graph(8, 18, seed + 90);
    // apply a bijection that reverses the name order
    std::map<std::pair<int, int>, int> weights;
    const int n = g.node_count();
    std::vector<std::string> new_ids;
    for (int i = 0; i < n; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "z%02d", i);
      new_ids.emplace_back(buf);
    }
    // node v becomes n-1-v under the new sorted order
    for (int v = 0; v < n; ++v) {
      for (const Arc& a : g.out(v)) {
        weights[{n - 1 - v, n - 1 - a.node}] = a.weight;
      }
    }
    const auto relabeled = DirectedGraph::from_weighted_edges(std::move(new_ids), weights);
    const auto base = label_graph(g);
    const auto mapped = label_graph(relabeled);
    CHECK(base.label.labeled == mapped.label.labeled);
    if (base.label.labeled) {
      CHECK(base.label.pattern == mapped.label.pattern);
      CHECK(base.label.score == doctest::Approx(mapped.label.score).epsilon(1e-15));
    }
    for (int v = 0; v < n; ++v) {
      const auto iv = indicator_vector(v, g);
      const auto mapped_iv = indicator_vector(n - 1 - v, relabeled);
      for (int k = 0; k < kPatternCount; ++k) {
        CHECK(iv.values[static_cast<std::size_t>(k)] ==
              doctest::Approx(mapped_iv.values[static_cast<std::size_t>(k)]).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("I1 and I2 are monotone in degree up to the community max") {
  // fan-in structure with max in-degree 8, vary deg from 1..8
  for (int max_deg : {4, 8}) {
    double prev = -1.0;
    for (int deg = 1; deg <= max_deg; ++deg) {
      std::vector<std::pair<int, int>> edges;
      int next = 2;
      for (int i = 0; i < max_deg; ++i) edges.push_back({next++, 0});
      for (int i = 0; i < deg; ++i) edges.push_back({next++, 1});
      const auto g = make_graph(next, edges);
      const double v = collector_indicator(1, g);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(prev == 1.0);
  }
}

TEST_CASE("oracle agreement: each template wins with its own indicator") {
  const auto templates = randomized_templates(10, 23);
  for (const PatternTemplate& t : templates) {
    const auto gen = generate_pattern(t, 4, 0, 3600, "t");
    const auto g = TransactionalGraph::build(gen.transactions).simple();
    const auto result = label_graph(g);
    REQUIRE(result.label.labeled);
    CHECK(result.label.pattern == t.kind);
    // the defining indicator dominates every competitor
    const auto own = static_cast<std::size_t>(t.kind);
    for (std::size_t k = 0; k < kPatternCount; ++k) {
      CHECK(result.indicator_max[own] >= result.indicator_max[k]);
    }
  }
}
