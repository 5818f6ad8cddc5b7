#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <tuple>

#include "oracles.hpp"
#include "txtopo/errors.hpp"
#include "txtopo/graph.hpp"
#include "txtopo/ingest.hpp"
#include "txtopo/synthgen.hpp"
#include "txtopo/timeutil.hpp"

using namespace txtopo;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("self-transfers are dropped and counted") {
  const auto path = temp_file("txtopo_self.csv",
                              "Sender_account,Receiver_account,Date,Time\n"
                              "a,b,2023-01-01,10:00:00\n"
                              "c,c,2023-01-01,10:05:00\n"
                              "b,a,2023-01-01,10:10:00\n");
  LoadReport report;
  const auto txs = load_transactions(path, ColumnMapping{}, report);
  CHECK(txs.size() == 2);
  CHECK(report.self_transfers == 1);
  CHECK(report.loaded == 2);
  CHECK(report.rows_read == 3);
}

TEST_CASE("empty and missing files raise data errors") {
  const auto path = temp_file("txtopo_empty.csv", "Sender_account,Receiver_account,Date,Time\n");
  LoadReport report;
  CHECK_THROWS_AS(load_transactions(path, ColumnMapping{}, report), DataError);
  CHECK_THROWS_AS(load_transactions("/nonexistent/file.csv", ColumnMapping{}, report),
                  DataError);
}

TEST_CASE("missing mapped column raises") {
  const auto path = temp_file("txtopo_cols.csv", "foo,bar\n1,2\n");
  LoadReport report;
  CHECK_THROWS_AS(load_transactions(path, ColumnMapping{}, report), DataError);
}

TEST_CASE("malformed rows are skipped by reason") {
  const auto path = temp_file("txtopo_malformed.csv",
                              "Sender_account,Receiver_account,Date,Time\n"
                              "a,b,2023-01-01,10:00:00\n"
                              "a,b,2023-99-01,10:00:00\n"
                              "a,,2023-01-01,10:00:00\n"
                              "a,b,2023-01-01\n");
  LoadReport report;
  const auto txs = load_transactions(path, ColumnMapping{}, report);
  CHECK(txs.size() == 1);
  CHECK(report.bad_timestamp == 1);
  CHECK(report.empty_endpoint == 1);
  CHECK(report.bad_field_count == 1);
}

TEST_CASE("combined timestamp column and custom delimiter") {
  const auto path = temp_file("txtopo_combined.csv",
                              "src;dst;when\n"
                              "a;b;2023-01-01 10:00:00\n");
  ColumnMapping mapping;
  mapping.sender = "src";
  mapping.receiver = "dst";
  mapping.timestamp = "when";
  mapping.delimiter = ';';
  LoadReport report;
  const auto txs = load_transactions(path, mapping, report);
  REQUIRE(txs.size() == 1);
  CHECK(txs[0].timestamp == parse_timestamp("2023-01-01 10:00:00"));
}

TEST_CASE("generator output round-trips through the loader") {
  PatternTemplate t;
  t.kind = Pattern::Sink;
  t.primary = 4;
  SynthCorpus corpus = generate_corpus(std::vector<PatternTemplate>(25, t), 0, 99);
  REQUIRE(corpus.transactions.size() == 100);
  const auto path = fs::temp_directory_path() / "txtopo_roundtrip.csv";
  write_corpus_csv(corpus, path);

  LoadReport report;
  const auto loaded = load_transactions(path, ColumnMapping{}, report);
  REQUIRE(loaded.size() == corpus.transactions.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].sender == corpus.transactions[i].sender);
    CHECK(loaded[i].receiver == corpus.transactions[i].receiver);
    CHECK(loaded[i].timestamp == corpus.transactions[i].timestamp);
  }
}

TEST_CASE("build_graph collapses duplicates into weights") {
  std::vector<Transaction> txs = {
      {"a", "b", 0, 0}, {"a", "b", 1, 1}, {"b", "a", 2, 2}};
  const auto g = TransactionalGraph::build(txs);
  CHECK(g.simple().node_count() == 2);
  CHECK(g.simple().edge_count() == 2);
  CHECK(g.multi_edge_count() == 3);
  const int a = 0, b = 1;  // sorted ids
  CHECK(g.simple().weight(a, b) == 2);
  CHECK(g.simple().weight(b, a) == 1);
}

TEST_CASE("empty transaction sequence builds an empty graph") {
  const auto g = TransactionalGraph::build(std::vector<Transaction>{});
  CHECK(g.simple().node_count() == 0);
  CHECK(g.multi_edge_count() == 0);
}

TEST_CASE("planted sink template has the expected degrees") {
  PatternTemplate t;
  t.kind = Pattern::Sink;
  t.primary = 5;
  const auto gen = generate_pattern(t, 7, 0, 3600, "s");
  const auto g = TransactionalGraph::build(gen.transactions);
  REQUIRE(g.simple().node_count() == 6);
  int hubs = 0;
  for (int v = 0; v < 6; ++v) {
    if (g.simple().out_degree(v) == 5) {
      ++hubs;
      CHECK(g.simple().in_degree(v) == 0);
    } else {
      CHECK(g.simple().in_degree(v) == 1);
      CHECK(g.simple().out_degree(v) == 0);
    }
  }
  CHECK(hubs == 1);
}

TEST_CASE("degree sums equal the simple edge count") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto txs = testing::random_transactions(12, 40, seed);
    const auto g = TransactionalGraph::build(txs);
    std::int64_t in_sum = 0, out_sum = 0;
    for (int v = 0; v < g.simple().node_count(); ++v) {
      in_sum += g.simple().in_degree(v);
      out_sum += g.simple().out_degree(v);
    }
    CHECK(in_sum == g.simple().edge_count());
    CHECK(out_sum == g.simple().edge_count());
    std::int64_t weight_sum = 0;
    for (int v = 0; v < g.simple().node_count(); ++v) {
      for (const Arc& a : g.simple().out(v)) weight_sum += a.weight;
    }
    CHECK(weight_sum == g.multi_edge_count());
  }
}

TEST_CASE("build_graph is permutation invariant") {
  auto txs = testing::random_transactions(10, 30, 5);
  const auto g1 = TransactionalGraph::build(txs);
  Rng rng(11);
  rng.shuffle(txs);
  const auto g2 = TransactionalGraph::build(txs);
  REQUIRE(g1.simple().node_count() == g2.simple().node_count());
  CHECK(g1.simple().node_ids() == g2.simple().node_ids());
  for (int v = 0; v < g1.simple().node_count(); ++v) {
    for (const Arc& a : g1.simple().out(v)) {
      CHECK(g2.simple().weight(v, a.node) == a.weight);
    }
    CHECK(g1.simple().out_degree(v) == g2.simple().out_degree(v));
  }
  // multiset of multi-edges must also match
  auto key = [](const MultiEdge& e) {
    return std::tuple(e.src, e.dst, e.timestamp);
  };
  auto m1 = g1.multi_edges();
  auto m2 = g2.multi_edges();
  std::sort(m1.begin(), m1.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  std::sort(m2.begin(), m2.end(), [&](auto& a, auto& b) { return key(a) < key(b); });
  REQUIRE(m1.size() == m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) CHECK(key(m1[i]) == key(m2[i]));
}

TEST_CASE("no self-loops in constructed graphs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto txs = testing::random_transactions(8, 25, seed);
    const auto g = TransactionalGraph::build(txs);
    for (int v = 0; v < g.simple().node_count(); ++v) {
      CHECK(g.simple().weight(v, v) == 0);
    }
  }
}
