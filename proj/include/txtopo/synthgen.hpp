#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "txtopo/graph.hpp"
#include "txtopo/pattern.hpp"

namespace txtopo {

// Size parameters for one planted component. Meaning of the fields per kind:
//   Collector       primary = number of senders (>= 3)
//   Sink            primary = number of recipients (>= 3)
//   Collusion       primary = shared recipients (>= 2), secondary = colluding
//                   senders (>= 2)
//   Branching       primary = first-level width (>= 2); every branch node
//                   then pays exactly two fresh nodes
//   ScatterGather   primary = intermediaries (>= 3)
//   GatherScatter   primary = senders = secondary = recipients (>= 3, equal)
// The bounds are chosen so every component has >= 4 nodes (it survives the
// community size filter) and, in isolation, labels as its own pattern.
struct PatternTemplate {
  Pattern kind = Pattern::Collector;
  int primary = 0;
  int secondary = 0;
  double jitter = 1.0;  // fraction of the window span timestamps may cover

  // Throws DataError when the size parameters are below the minimums above.
  void validate() const;
  int node_count() const;
};

struct PlantedComponent {
  std::string id;
  Pattern label = Pattern::Collector;
  std::vector<std::string> nodes;  // sorted
  int window = 0;
};

struct SynthCorpus {
  std::vector<Transaction> transactions;
  std::vector<PlantedComponent> oracle;
  std::uint64_t seed = 0;
};

struct CorpusOptions {
  std::int64_t origin = 0;           // UTC epoch seconds of window 0
  std::int64_t rho = 7 * 86400;      // window span in seconds
  int windows = 1;                   // components spread round-robin
};

// Edges realizing one template, with node ids drawn as `prefix` plus a
// counter and timestamps uniform inside the window. Pure function of its
// arguments.
struct GeneratedPattern {
  std::vector<Transaction> transactions;
  std::vector<std::string> nodes;  // sorted
};
GeneratedPattern generate_pattern(const PatternTemplate& t, std::uint64_t seed,
                                  std::int64_t window_start, std::int64_t window_span,
                                  const std::string& id_prefix);

// Node-disjoint planted components plus background noise in components of
// fewer than 4 nodes. Identical inputs reproduce the corpus byte for byte.
SynthCorpus generate_corpus(const std::vector<PatternTemplate>& templates,
                            int noise_edges, std::uint64_t seed,
                            const CorpusOptions& opts = {});

// Desk-scale template mix: `per_pattern` templates of each kind with sizes
// randomized inside the oracle-safe ranges.
std::vector<PatternTemplate> randomized_templates(int per_pattern, std::uint64_t seed);

// Writes the delimited file `ingest` reads (Time,Date,Sender_account,
// Receiver_account) and the oracle sidecar (component -> label, node list).
void write_corpus_csv(const SynthCorpus& corpus, const std::filesystem::path& path);
void write_oracle_json(const SynthCorpus& corpus, const std::filesystem::path& path);
std::vector<PlantedComponent> read_oracle_json(const std::filesystem::path& path);

}  // namespace txtopo
