#include "txtopo/synthgen.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "txtopo/errors.hpp"
#include "txtopo/rng.hpp"
#include "txtopo/timeutil.hpp"

namespace txtopo {

namespace {

std::string padded(const std::string& prefix, int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", k);
  return prefix + buf;
}

}  // namespace

void PatternTemplate::validate() const {
  switch (kind) {
    case Pattern::Collector:
    case Pattern::Sink:
      if (primary < 3) throw DataError("collector/sink template needs fan >= 3");
      break;
    case Pattern::Collusion:
      if (primary < 2 || secondary < 2) {
        throw DataError("collusion template needs >= 2 shared recipients and >= 2 senders");
      }
      break;
    case Pattern::Branching:
      if (primary < 2) throw DataError("branching template needs width >= 2");
      break;
    case Pattern::ScatterGather:
      if (primary < 3) throw DataError("scatter-gather template needs >= 3 intermediaries");
      break;
    case Pattern::GatherScatter:
      if (primary < 3 || secondary != primary) {
        throw DataError("gather-scatter template needs equal in/out fans >= 3");
      }
      break;
  }
  if (jitter <= 0.0 || jitter > 1.0) throw DataError("template jitter must be in (0,1]");
}

int PatternTemplate::node_count() const {
  switch (kind) {
    case Pattern::Collector:
    case Pattern::Sink: return primary + 1;
    case Pattern::Collusion: return primary + secondary;
    case Pattern::Branching: return 1 + 3 * primary;
    case Pattern::ScatterGather: return primary + 2;
    case Pattern::GatherScatter: return 1 + primary + secondary;
  }
  return 0;
}

GeneratedPattern generate_pattern(const PatternTemplate& t, std::uint64_t seed,
                                  std::int64_t window_start, std::int64_t window_span,
                                  const std::string& id_prefix) {
  t.validate();
  Rng rng(seed);
  const auto span = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(t.jitter * static_cast<double>(window_span)));

  int next_id = 0;
  const auto fresh = [&] { return padded(id_prefix, next_id++); };
  const auto stamp = [&] {
    return window_start + rng.uniform_int(0, span - 1);
  };

  GeneratedPattern out;
  const auto emit = [&](const std::string& from, const std::string& to) {
    out.transactions.push_back(Transaction{from, to, stamp(), out.transactions.size()});
  };

  switch (t.kind) {
    case Pattern::Collector: {
      const std::string hub = fresh();
      for (int i = 0; i < t.primary; ++i) emit(fresh(), hub);
      break;
    }
    case Pattern::Sink: {
      const std::string hub = fresh();
      for (int i = 0; i < t.primary; ++i) emit(hub, fresh());
      break;
    }
    case Pattern::Collusion: {
      std::vector<std::string> senders, recipients;
      for (int i = 0; i < t.secondary; ++i) senders.push_back(fresh());
      for (int i = 0; i < t.primary; ++i) recipients.push_back(fresh());
      for (const auto& s : senders) {
        for (const auto& r : recipients) emit(s, r);
      }
      break;
    }
    case Pattern::Branching: {
      const std::string root = fresh();
      for (int i = 0; i < t.primary; ++i) {
        const std::string branch = fresh();
        emit(root, branch);
        emit(branch, fresh());
        emit(branch, fresh());
      }
      break;
    }
    case Pattern::ScatterGather: {
      const std::string source = fresh();
      std::vector<std::string> mids;
      for (int i = 0; i < t.primary; ++i) {
        mids.push_back(fresh());
        emit(source, mids.back());
      }
      const std::string target = fresh();
      for (const auto& m : mids) emit(m, target);
      break;
    }
    case Pattern::GatherScatter: {
      const std::string proxy = fresh();
      for (int i = 0; i < t.primary; ++i) emit(fresh(), proxy);
      for (int i = 0; i < t.secondary; ++i) emit(proxy, fresh());
      break;
    }
  }

  out.nodes.reserve(static_cast<std::size_t>(next_id));
  for (int i = 0; i < next_id; ++i) out.nodes.push_back(padded(id_prefix, i));
  std::sort(out.nodes.begin(), out.nodes.end());
  return out;
}

SynthCorpus generate_corpus(const std::vector<PatternTemplate>& templates,
                            int noise_edges, std::uint64_t seed,
                            const CorpusOptions& opts) {
  if (opts.windows < 1) throw DataError("corpus needs at least one window");
  if (opts.rho <= 0) throw DataError("corpus window span must be positive");

  SynthCorpus corpus;
  corpus.seed = seed;
  int component = 0;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const int window = static_cast<int>(i) % opts.windows;
    const std::int64_t wstart = opts.origin + window * opts.rho;
    const std::string prefix = padded("c", component) + "n";
    auto generated = generate_pattern(templates[i], derive_seed(seed, "component", i),
                                      wstart, opts.rho, prefix);
    PlantedComponent planted;
    planted.id = padded("c", component);
    planted.label = templates[i].kind;
    planted.nodes = generated.nodes;
    planted.window = window;
    corpus.oracle.push_back(std::move(planted));
    for (auto& tx : generated.transactions) {
      tx.source_row = corpus.transactions.size();
      corpus.transactions.push_back(std::move(tx));
    }
    ++component;
  }

  // Background noise: 2- or 3-node components, below the size filter.
  Rng rng(derive_seed(seed, "noise"));
  int noise_id = 0;
  int emitted = 0;
  while (emitted < noise_edges) {
    const int window = noise_id % opts.windows;
    const std::int64_t wstart = opts.origin + window * opts.rho;
    const std::string prefix = padded("z", noise_id++) + "n";
    const auto form = rng.uniform_int(0, 2);
    const auto stamp = [&] { return wstart + rng.uniform_int(0, opts.rho - 1); };
    const auto emit = [&](int a, int b) {
      if (emitted >= noise_edges) return;
      corpus.transactions.push_back(Transaction{padded(prefix, a), padded(prefix, b),
                                                stamp(), corpus.transactions.size()});
      ++emitted;
    };
    switch (form) {
      case 0: emit(0, 1); break;                 // single transfer
      case 1: emit(0, 1); emit(1, 0); break;     // back-and-forth pair
      default: emit(0, 1); emit(0, 2); break;    // tiny fan-out
    }
  }
  return corpus;
}

std::vector<PatternTemplate> randomized_templates(int per_pattern, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "templates"));
  std::vector<PatternTemplate> out;
  out.reserve(static_cast<std::size_t>(per_pattern) * kPatternCount);
  for (int i = 0; i < per_pattern; ++i) {
    for (const Pattern p : kAllPatterns) {
      PatternTemplate t;
      t.kind = p;
      switch (p) {
        case Pattern::Collector:
        case Pattern::Sink:
          t.primary = static_cast<int>(rng.uniform_int(3, 9));
          break;
        case Pattern::Collusion:
          t.primary = static_cast<int>(rng.uniform_int(2, 5));
          t.secondary = static_cast<int>(rng.uniform_int(2, 3));
          break;
        case Pattern::Branching:
          t.primary = static_cast<int>(rng.uniform_int(2, 4));
          break;
        case Pattern::ScatterGather:
          t.primary = static_cast<int>(rng.uniform_int(3, 7));
          break;
        case Pattern::GatherScatter:
          t.primary = static_cast<int>(rng.uniform_int(3, 6));
          t.secondary = t.primary;
          break;
      }
      out.push_back(t);
    }
  }
  return out;
}

void write_corpus_csv(const SynthCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus: " + path.string());
  out << "Time,Date,Sender_account,Receiver_account\n";
  for (const Transaction& tx : corpus.transactions) {
    out << format_time_of_day(tx.timestamp) << ',' << format_date(tx.timestamp) << ','
        << tx.sender << ',' << tx.receiver << '\n';
  }
}

void write_oracle_json(const SynthCorpus& corpus, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["seed"] = corpus.seed;
  auto& comps = doc["components"];
  comps = nlohmann::json::array();
  for (const PlantedComponent& c : corpus.oracle) {
    nlohmann::json j;
    j["id"] = c.id;
    j["label"] = std::string(pattern_name(c.label));
    j["window"] = c.window;
    j["nodes"] = c.nodes;
    comps.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write oracle: " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<PlantedComponent> read_oracle_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read oracle: " + path.string());
  nlohmann::json doc;
  in >> doc;
  std::vector<PlantedComponent> out;
  for (const auto& j : doc.at("components")) {
    PlantedComponent c;
    c.id = j.at("id").get<std::string>();
    const auto label = pattern_from_name(j.at("label").get<std::string>());
    if (!label) throw DataError("unknown pattern label in oracle: " + path.string());
    c.label = *label;
    c.window = j.at("window").get<int>();
    c.nodes = j.at("nodes").get<std::vector<std::string>>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace txtopo
