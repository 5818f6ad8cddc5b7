#include "txtopo/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "txtopo/errors.hpp"
#include "txtopo/evalreport.hpp"
#include "txtopo/rng.hpp"
#include "txtopo/synthgen.hpp"
#include "txtopo/temporal.hpp"
#include "txtopo/timeutil.hpp"

namespace txtopo {

namespace fs = std::filesystem;
using nlohmann::json;

// --- config ---

namespace {

json config_to_json(const PipelineConfig& c) {
  json j;
  j["use_synth"] = c.use_synth;
  j["synth"] = {{"per_pattern", c.synth_per_pattern},
                {"noise_edges", c.synth_noise_edges},
                {"windows", c.synth_windows}};
  j["input_path"] = c.input_path;
  j["mapping"] = {{"sender", c.mapping.sender},
                  {"receiver", c.mapping.receiver},
                  {"date", c.mapping.date},
                  {"time", c.mapping.time},
                  {"timestamp", c.mapping.timestamp},
                  {"delimiter", std::string(1, c.mapping.delimiter)}};
  j["rho"] = c.rho;
  j["min_community_size"] = c.min_community_size;
  j["louvain"] = {{"resolution", c.louvain_resolution}, {"restarts", c.louvain_restarts}};
  j["dataset"] = {{"majority_train", c.majority_train}, {"ros_target", c.ros_target}};
  j["variants"] = c.variants;
  j["patterns"] = c.patterns;
  j["models_dir"] = c.models_dir;
  j["train"] = {{"max_epochs", c.train.max_epochs},
                {"early_stop_patience", c.train.early_stop_patience},
                {"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"dropout", c.train.dropout},
                {"monitor_fraction", c.train.monitor_fraction}};
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  maybe(j, "use_synth", c.use_synth);
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    maybe(s, "per_pattern", c.synth_per_pattern);
    maybe(s, "noise_edges", c.synth_noise_edges);
    maybe(s, "windows", c.synth_windows);
  }
  maybe(j, "input_path", c.input_path);
  if (j.contains("mapping")) {
    const auto& m = j.at("mapping");
    maybe(m, "sender", c.mapping.sender);
    maybe(m, "receiver", c.mapping.receiver);
    maybe(m, "date", c.mapping.date);
    maybe(m, "time", c.mapping.time);
    maybe(m, "timestamp", c.mapping.timestamp);
    std::string delim;
    maybe(m, "delimiter", delim);
    if (!delim.empty()) c.mapping.delimiter = delim[0];
  }
  maybe(j, "rho", c.rho);
  maybe(j, "min_community_size", c.min_community_size);
  if (j.contains("louvain")) {
    const auto& l = j.at("louvain");
    maybe(l, "resolution", c.louvain_resolution);
    maybe(l, "restarts", c.louvain_restarts);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    maybe(d, "majority_train", c.majority_train);
    maybe(d, "ros_target", c.ros_target);
  }
  maybe(j, "variants", c.variants);
  maybe(j, "patterns", c.patterns);
  maybe(j, "models_dir", c.models_dir);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    maybe(t, "max_epochs", c.train.max_epochs);
    maybe(t, "early_stop_patience", c.train.early_stop_patience);
    maybe(t, "batch_size", c.train.batch_size);
    maybe(t, "lr", c.train.lr);
    maybe(t, "dropout", c.train.dropout);
    maybe(t, "monitor_fraction", c.train.monitor_fraction);
  }
  maybe(j, "seed", c.seed);
  maybe(j, "out_dir", c.out_dir);
  maybe(j, "jobs", c.jobs);
  return c;
}

std::uint64_t fnv1a_bytes(const char* data, std::size_t count, std::uint64_t h) {
  for (std::size_t i = 0; i < count; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal index-sharded parallel map; each job touches only its own slots,
// so results are independent of scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, jobs);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < count;
           i += static_cast<std::size_t>(workers)) {
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad config json in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_pipeline_config(const PipelineConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config: " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

std::string config_hash(const PipelineConfig& cfg) {
  // Execution knobs do not change artifact bytes, so they do not take part
  // in artifact identity.
  json j = config_to_json(cfg);
  j.erase("jobs");
  j.erase("models_dir");
  const std::string dump = j.dump();
  return hex64(fnv1a_bytes(dump.data(), dump.size(), 0xcbf29ce484222325ULL));
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a_bytes(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

std::uint64_t hash_directory(const fs::path& dir, const std::vector<std::string>& exclude) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir).generic_string();
    if (std::find(exclude.begin(), exclude.end(), rel) != exclude.end()) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const fs::path& f : files) {
    const auto rel = fs::relative(f, dir).generic_string();
    h = fnv1a_bytes(rel.data(), rel.size(), h);
    const std::uint64_t fh = hash_file(f);
    h = fnv1a_bytes(reinterpret_cast<const char*>(&fh), sizeof(fh), h);
  }
  return h;
}

// --- stage plumbing ---

namespace {

fs::path stage_dir(const PipelineConfig& cfg, const std::string& stage) {
  return fs::path(cfg.out_dir) / stage;
}

// The config fields one stage's outputs actually depend on. Upstream
// identity travels through the recorded input hashes, so each stage hashes
// only its own knobs; execution knobs (jobs, models_dir) stay out entirely.
json stage_relevant_config(const std::string& stage, const PipelineConfig& c) {
  const json full = config_to_json(c);
  json out;
  out["stage"] = stage;
  if (stage == "synth") {
    out["synth"] = full.at("synth");
    out["rho"] = full.at("rho");
    out["seed"] = full.at("seed");
  } else if (stage == "ingest") {
    out["use_synth"] = full.at("use_synth");
    out["input_path"] = full.at("input_path");
    out["mapping"] = full.at("mapping");
  } else if (stage == "dissect") {
    out["rho"] = full.at("rho");
  } else if (stage == "communities") {
    out["min_community_size"] = full.at("min_community_size");
    out["louvain"] = full.at("louvain");
    out["seed"] = full.at("seed");
  } else if (stage == "datasets") {
    out["dataset"] = full.at("dataset");
    out["seed"] = full.at("seed");
  } else if (stage == "train") {
    out["variants"] = full.at("variants");
    out["patterns"] = full.at("patterns");
    out["train"] = full.at("train");
    out["seed"] = full.at("seed");
  } else if (stage == "evaluate") {
    out["variants"] = full.at("variants");
  }
  // label, features, report: pure functions of their inputs
  return out;
}

std::string stage_config_hash(const std::string& stage, const PipelineConfig& cfg) {
  const std::string dump = stage_relevant_config(stage, cfg).dump();
  return hex64(fnv1a_bytes(dump.data(), dump.size(), 0xcbf29ce484222325ULL));
}

// Requires the prerequisite stage to exist, carry the same stage-relevant
// config, and hash to what its manifest recorded.
json require_stage(const PipelineConfig& cfg, const std::string& stage) {
  const fs::path dir = stage_dir(cfg, stage);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw DataError("missing prerequisite stage '" + stage + "' (run it first)");
  }
  std::ifstream in(manifest_path);
  json manifest;
  in >> manifest;
  if (manifest.at("config_hash").get<std::string>() != stage_config_hash(stage, cfg)) {
    throw DataError("stage '" + stage + "' was produced with a different config");
  }
  const auto recorded = manifest.at("output_hash").get<std::string>();
  const auto actual = hex64(hash_directory(dir));
  if (recorded != actual) {
    throw DataError("stage '" + stage + "' outputs do not match their manifest hash");
  }
  return manifest;
}

// Writes outputs under a temp dir, then swaps it in and seals the manifest.
void commit_stage(const PipelineConfig& cfg, const std::string& stage,
                  const std::map<std::string, std::string>& input_hashes,
                  const std::function<void(const fs::path&)>& producer) {
  const fs::path final_dir = stage_dir(cfg, stage);
  const fs::path tmp_dir = fs::path(cfg.out_dir) / (".tmp_" + stage);
  fs::create_directories(fs::path(cfg.out_dir));
  fs::remove_all(tmp_dir);
  fs::create_directories(tmp_dir);

  producer(tmp_dir);
  save_pipeline_config(cfg, tmp_dir / "config.json");

  json manifest;
  manifest["stage"] = stage;
  manifest["config_hash"] = stage_config_hash(stage, cfg);
  manifest["inputs"] = input_hashes;
  manifest["output_hash"] = hex64(hash_directory(tmp_dir));
  {
    std::ofstream out(tmp_dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  fs::remove_all(final_dir);
  fs::rename(tmp_dir, final_dir);
}

std::map<std::string, std::string> input_hashes_of(const PipelineConfig& cfg,
                                                   const std::vector<std::string>& stages) {
  std::map<std::string, std::string> hashes;
  for (const std::string& s : stages) {
    require_stage(cfg, s);
    hashes[s] = hex64(hash_directory(stage_dir(cfg, s)));
  }
  return hashes;
}

std::string community_stem(const CommunityId& id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d_%05d", id.snapshot, id.ordinal);
  return buf;
}

// --- stages ---

void stage_synth(const PipelineConfig& cfg) {
  commit_stage(cfg, "synth", {}, [&](const fs::path& dir) {
    const auto templates =
        randomized_templates(cfg.synth_per_pattern, derive_seed(cfg.seed, "synth"));
    CorpusOptions opts;
    opts.rho = parse_duration(cfg.rho);
    opts.windows = cfg.synth_windows;
    const SynthCorpus corpus = generate_corpus(templates, cfg.synth_noise_edges,
                                               derive_seed(cfg.seed, "synth"), opts);
    write_corpus_csv(corpus, dir / "transactions.csv");
    write_oracle_json(corpus, dir / "oracle.json");
  });
}

void stage_ingest(const PipelineConfig& cfg) {
  fs::path input;
  std::map<std::string, std::string> inputs;
  ColumnMapping mapping = cfg.mapping;
  if (cfg.use_synth) {
    inputs = input_hashes_of(cfg, {"synth"});
    input = stage_dir(cfg, "synth") / "transactions.csv";
    mapping = ColumnMapping{};  // the generator writes the default schema
  } else {
    if (cfg.input_path.empty()) throw DataError("config has no input_path");
    input = cfg.input_path;
  }
  commit_stage(cfg, "ingest", inputs, [&](const fs::path& dir) {
    LoadReport report;
    const auto txs = load_transactions(input, mapping, report);
    write_load_report(report, dir / "load_report.txt");
    std::ofstream out(dir / "transactions.norm.csv");
    out << "sender,receiver,timestamp\n";
    for (const Transaction& t : txs) {
      out << t.sender << ',' << t.receiver << ',' << t.timestamp << '\n';
    }
  });
}

std::vector<Transaction> read_normalized_transactions(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read " + file.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<Transaction> txs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Transaction t;
    std::string ts;
    std::getline(ss, t.sender, ',');
    std::getline(ss, t.receiver, ',');
    std::getline(ss, ts, ',');
    t.timestamp = std::stoll(ts);
    t.source_row = row++;
    txs.push_back(std::move(t));
  }
  return txs;
}

void stage_dissect(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"ingest"});
  const auto txs =
      read_normalized_transactions(stage_dir(cfg, "ingest") / "transactions.norm.csv");
  const std::int64_t rho = parse_duration(cfg.rho);
  const auto snapshots = dissect(txs, rho);
  commit_stage(cfg, "dissect", inputs, [&](const fs::path& dir) {
    fs::create_directories(dir / "snapshots");
    json index;
    index["rho_seconds"] = rho;
    auto& windows = index["windows"];
    windows = json::array();
    for (const TemporalSnapshot& snap : snapshots) {
      char name[32];
      std::snprintf(name, sizeof(name), "window_%05d.csv", snap.index);
      const fs::path file = dir / "snapshots" / name;
      std::ofstream out(file);
      out << "sender,receiver,timestamp\n";
      const auto& g = snap.graph;
      for (const MultiEdge& e : g.multi_edges()) {
        out << g.simple().node_id(e.src) << ',' << g.simple().node_id(e.dst) << ','
            << e.timestamp << '\n';
      }
      windows.push_back({{"index", snap.index},
                         {"start", snap.window_start},
                         {"end", snap.window_end},
                         {"file", std::string("snapshots/") + name},
                         {"transactions", g.multi_edge_count()}});
    }
    std::ofstream out(dir / "index.json");
    out << index.dump(2) << '\n';
  });
}

std::vector<TemporalSnapshot> read_snapshots(const fs::path& dissect_dir) {
  std::ifstream in(dissect_dir / "index.json");
  if (!in) throw DataError("cannot read snapshot index");
  json index;
  in >> index;
  std::vector<TemporalSnapshot> snaps;
  for (const auto& w : index.at("windows")) {
    TemporalSnapshot snap;
    snap.index = w.at("index").get<int>();
    snap.window_start = w.at("start").get<std::int64_t>();
    snap.window_end = w.at("end").get<std::int64_t>();
    const auto txs =
        read_normalized_transactions(dissect_dir / w.at("file").get<std::string>());
    snap.graph = TransactionalGraph::build(txs);
    snaps.push_back(std::move(snap));
  }
  return snaps;
}

void stage_communities(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"dissect"});
  const auto snapshots = read_snapshots(stage_dir(cfg, "dissect"));
  commit_stage(cfg, "communities", inputs, [&](const fs::path& dir) {
    fs::create_directories(dir / "communities");
    const LouvainOptions opts{cfg.louvain_resolution, cfg.louvain_restarts};
    const std::uint64_t seed = derive_seed(cfg.seed, "communities");

    std::vector<std::vector<Community>> per_snap(snapshots.size());
    std::vector<ExtractStats> stats(snapshots.size());
    parallel_for(snapshots.size(), cfg.jobs, [&](std::size_t i) {
      per_snap[i] = extract_communities(
          snapshots[i], derive_seed(seed, "snapshot", static_cast<std::uint64_t>(snapshots[i].index)),
          cfg.min_community_size, opts, &stats[i]);
    });

    json manifest;
    int raw = 0, dropped = 0;
    auto& list = manifest["communities"];
    list = json::array();
    for (std::size_t i = 0; i < per_snap.size(); ++i) {
      raw += stats[i].raw_cells;
      dropped += stats[i].dropped_small;
      for (const Community& c : per_snap[i]) {
        const std::string stem = community_stem(c.id);
        const fs::path file = dir / "communities" / (stem + ".csv");
        std::ofstream out(file);
        out << "from,to,weight\n";
        const auto& g = c.subgraph;
        for (int v = 0; v < g.node_count(); ++v) {
          for (const Arc& a : g.out(v)) {
            out << g.node_id(v) << ',' << g.node_id(a.node) << ',' << a.weight << '\n';
          }
        }
        list.push_back({{"snapshot", c.id.snapshot},
                        {"ordinal", c.id.ordinal},
                        {"size", c.size()},
                        {"nodes", g.node_ids()},
                        {"file", "communities/" + stem + ".csv"}});
      }
    }
    manifest["raw_cells"] = raw;
    manifest["dropped_small"] = dropped;
    std::ofstream out(dir / "communities.json");
    out << manifest.dump(2) << '\n';
  });
}

void stage_label(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"communities"});
  auto communities = read_communities(stage_dir(cfg, "communities"));
  commit_stage(cfg, "label", inputs, [&](const fs::path& dir) {
    std::vector<LabelResult> results(communities.size());
    parallel_for(communities.size(), cfg.jobs,
                 [&](std::size_t i) { results[i] = label_community(communities[i]); });
    json doc;
    auto& entries = doc["entries"];
    entries = json::array();
    for (std::size_t i = 0; i < communities.size(); ++i) {
      const LabelResult& r = results[i];
      json e;
      e["snapshot"] = communities[i].id.snapshot;
      e["ordinal"] = communities[i].id.ordinal;
      e["labeled"] = r.label.labeled;
      e["pattern"] = r.label.labeled ? std::string(pattern_name(r.label.pattern)) : "unlabeled";
      e["score"] = r.label.score;
      e["argmax_account"] = r.label.argmax_account;
      e["indicator_max"] = r.indicator_max;
      entries.push_back(std::move(e));
    }
    std::ofstream out(dir / "labels.json");
    out << doc.dump(2) << '\n';
  });
}

void stage_features(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"communities"});
  auto communities = read_communities(stage_dir(cfg, "communities"));
  commit_stage(cfg, "features", inputs, [&](const fs::path& dir) {
    fs::create_directories(dir / "features");
    std::vector<NodeFeatureMatrix> mats(communities.size());
    parallel_for(communities.size(), cfg.jobs,
                 [&](std::size_t i) { mats[i] = node_features(communities[i]); });
    json manifest;
    manifest["schema_version"] = kFeatureSchemaVersion;
    manifest["columns"] = kFeatureNames;
    auto& list = manifest["matrices"];
    list = json::array();
    for (const NodeFeatureMatrix& m : mats) {
      const std::string stem = community_stem(m.community);
      const fs::path file = dir / "features" / (stem + ".txt");
      std::ofstream out(file);
      for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
          if (c) out << ' ';
          out << fmt_double(m.values(r, c));
        }
        out << '\n';
      }
      list.push_back({{"snapshot", m.community.snapshot},
                      {"ordinal", m.community.ordinal},
                      {"rows", m.values.rows()},
                      {"file", "features/" + stem + ".txt"}});
    }
    std::ofstream out(dir / "features.json");
    out << manifest.dump(2) << '\n';
  });
}

void stage_datasets(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"label"});
  const auto labels = read_labels(stage_dir(cfg, "label"));
  std::vector<std::pair<CommunityId, Pattern>> labeled;
  for (const auto& [id, result] : labels) {
    if (result.label.labeled) labeled.push_back({id, result.label.pattern});
  }
  commit_stage(cfg, "datasets", inputs, [&](const fs::path& dir) {
    const auto sets = build_pattern_sets(labeled);
    const std::uint64_t seed = derive_seed(cfg.seed, "datasets");
    json doc;
    auto& splits = doc["splits"];
    splits = json::array();
    for (const PatternSet& ps : sets) {
      json entry;
      entry["label"] = std::string(pattern_name(ps.label));
      entry["overall"] = ps.members.size();
      if (ps.members.size() < 2) {
        entry["skipped"] = "fewer than 2 members";
        splits.push_back(std::move(entry));
        continue;
      }
      TrainValSplit split = split_pattern_set(ps, seed, cfg.majority_train);
      const bool minority = !is_majority_regime(ps.members.size(), cfg.majority_train);
      if (minority && static_cast<int>(split.train.size()) < cfg.ros_target) {
        split = oversample(split, cfg.ros_target, seed);
      }
      entry["seed"] = seed;
      entry["ros_applied"] = split.ros_applied;
      auto ids_json = [](const std::vector<CommunityId>& ids) {
        json arr = json::array();
        for (const CommunityId& id : ids) arr.push_back({id.snapshot, id.ordinal});
        return arr;
      };
      entry["train"] = ids_json(split.train);
      entry["val"] = ids_json(split.val);
      splits.push_back(std::move(entry));
    }
    std::ofstream out(dir / "splits.json");
    out << doc.dump() << '\n';
  });
}

struct CorpusIndex {
  std::vector<Community> communities;
  std::vector<Matrix> features;
  std::map<CommunityId, std::size_t> by_id;
};

CorpusIndex load_corpus(const PipelineConfig& cfg) {
  CorpusIndex idx;
  idx.communities = read_communities(stage_dir(cfg, "communities"));
  idx.features.resize(idx.communities.size());
  std::ifstream in(stage_dir(cfg, "features") / "features.json");
  if (!in) throw DataError("cannot read features manifest");
  json manifest;
  in >> manifest;
  std::map<CommunityId, std::string> files;
  for (const auto& m : manifest.at("matrices")) {
    files[CommunityId{m.at("snapshot").get<int>(), m.at("ordinal").get<int>()}] =
        m.at("file").get<std::string>();
  }
  for (std::size_t i = 0; i < idx.communities.size(); ++i) {
    const CommunityId id = idx.communities[i].id;
    const auto it = files.find(id);
    if (it == files.end()) throw DataError("feature matrix missing for a community");
    idx.features[i] = read_feature_matrix(stage_dir(cfg, "features") / it->second);
    idx.by_id[id] = i;
  }
  return idx;
}

void stage_train(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"communities", "features", "datasets"});
  const CorpusIndex corpus = load_corpus(cfg);
  const auto splits = read_splits(stage_dir(cfg, "datasets"));

  struct Job {
    nn::Variant variant;
    const TrainValSplit* split;
  };
  std::vector<Job> jobs;
  for (const std::string& vname : cfg.variants) {
    const auto variant = nn::variant_from_name(vname);
    if (!variant) throw DataError("unknown variant in config: " + vname);
    for (const TrainValSplit& split : splits) {
      const auto pname = std::string(pattern_name(split.label));
      if (std::find(cfg.patterns.begin(), cfg.patterns.end(), pname) ==
          cfg.patterns.end()) {
        continue;
      }
      if (!split.train.empty()) jobs.push_back({*variant, &split});
    }
  }

  commit_stage(cfg, "train", inputs, [&](const fs::path& dir) {
    fs::create_directories(dir / "models");
    std::vector<std::string> errors(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
      try {
        const Job& job = jobs[i];
        std::vector<TrainSample> seq;
        seq.reserve(job.split->train.size());
        for (const CommunityId& id : job.split->train) {
          const auto it = corpus.by_id.find(id);
          if (it == corpus.by_id.end()) throw DataError("split references unknown community");
          seq.push_back({&corpus.communities[it->second], &corpus.features[it->second]});
        }
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(derive_seed(cfg.seed, "train"),
                              std::string(nn::variant_name(job.variant)) + "/" +
                                  std::string(pattern_name(job.split->label)));
        GaeModel model = train_gae(seq, job.split->label, job.variant, tc);
        const std::string name = std::string(nn::variant_name(job.variant)) + "_" +
                                 std::string(pattern_name(job.split->label)) + ".bin";
        save_model(model, dir / "models" / name);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    for (const std::string& err : errors) {
      if (!err.empty()) throw NumericalError("training job failed: " + err);
    }
  });
}

void stage_evaluate(const PipelineConfig& cfg) {
  std::vector<std::string> prerequisites = {"communities", "features", "datasets"};
  if (cfg.models_dir.empty()) prerequisites.push_back("train");
  const auto inputs = input_hashes_of(cfg, prerequisites);
  const fs::path models_dir = cfg.models_dir.empty()
                                  ? stage_dir(cfg, "train") / "models"
                                  : fs::path(cfg.models_dir);
  const CorpusIndex corpus = load_corpus(cfg);
  const auto splits = read_splits(stage_dir(cfg, "datasets"));

  commit_stage(cfg, "evaluate", inputs, [&](const fs::path& dir) {
    json doc;
    auto& reports_json = doc["reports"];
    reports_json = json::array();
    for (const std::string& vname : cfg.variants) {
      const auto variant = nn::variant_from_name(vname);
      if (!variant) throw DataError("unknown variant in config: " + vname);

      std::array<GaeModel, kPatternCount> models;
      bool complete = true;
      for (int p = 0; p < kPatternCount; ++p) {
        const std::string name =
            vname + "_" + std::string(pattern_name(static_cast<Pattern>(p))) + ".bin";
        const fs::path path = models_dir / name;
        if (!fs::exists(path)) {
          complete = false;
          break;
        }
        models[static_cast<std::size_t>(p)] = load_model(path);
      }
      if (!complete) continue;

      std::array<std::vector<ValSample>, kPatternCount> val_sets;
      for (const TrainValSplit& split : splits) {
        auto& set = val_sets[static_cast<std::size_t>(split.label)];
        for (const CommunityId& id : split.val) {
          const auto it = corpus.by_id.find(id);
          if (it == corpus.by_id.end()) throw DataError("split references unknown community");
          set.push_back({&corpus.communities[it->second], &corpus.features[it->second]});
        }
      }

      const ReconstructionReport report = cross_evaluate(models, val_sets);
      json r;
      r["variant"] = vname;
      r["matrix"] = json::array();
      r["counts"] = json::array();
      for (int p = 0; p < kPatternCount; ++p) {
        json row = json::array(), crow = json::array();
        for (int q = 0; q < kPatternCount; ++q) {
          const auto pi = static_cast<std::size_t>(p);
          const auto qi = static_cast<std::size_t>(q);
          if (report.absent(p, q)) {
            row.push_back(nullptr);
          } else {
            row.push_back(report.matrix[pi][qi]);
          }
          crow.push_back(report.counts[pi][qi]);
        }
        r["matrix"].push_back(std::move(row));
        r["counts"].push_back(std::move(crow));
      }
      reports_json.push_back(std::move(r));
    }
    std::ofstream out(dir / "raw.json");
    out << doc.dump(2) << '\n';
  });
}

std::vector<ReconstructionReport> read_eval_reports(const fs::path& eval_dir) {
  std::ifstream in(eval_dir / "raw.json");
  if (!in) throw DataError("cannot read evaluation output");
  json doc;
  in >> doc;
  std::vector<ReconstructionReport> out;
  for (const auto& r : doc.at("reports")) {
    ReconstructionReport report;
    const auto variant = nn::variant_from_name(r.at("variant").get<std::string>());
    if (!variant) throw DataError("unknown variant in evaluation output");
    report.variant = *variant;
    for (int p = 0; p < kPatternCount; ++p) {
      for (int q = 0; q < kPatternCount; ++q) {
        const auto pi = static_cast<std::size_t>(p);
        const auto qi = static_cast<std::size_t>(q);
        const auto& cell = r.at("matrix").at(pi).at(qi);
        report.counts[pi][qi] = r.at("counts").at(pi).at(qi).get<std::int64_t>();
        report.matrix[pi][qi] = cell.is_null() ? std::nan("") : cell.get<double>();
      }
    }
    // diag flags are pure functions of the matrix; recompute them
    for (int p = 0; p < kPatternCount; ++p) {
      const auto pi = static_cast<std::size_t>(p);
      bool is_min = !report.absent(p, p);
      for (int q = 0; q < kPatternCount && is_min; ++q) {
        if (q == p || report.absent(p, q)) continue;
        if (report.matrix[pi][static_cast<std::size_t>(q)] < report.matrix[pi][pi]) {
          is_min = false;
        }
      }
      report.diag_min[pi] = is_min;
    }
    out.push_back(report);
  }
  return out;
}

void stage_report(const PipelineConfig& cfg) {
  const auto inputs = input_hashes_of(cfg, {"evaluate"});
  const auto reports = read_eval_reports(stage_dir(cfg, "evaluate"));
  commit_stage(cfg, "report", inputs,
               [&](const fs::path& dir) { emit_report(reports, dir); });
}

}  // namespace

void run_stage(const std::string& stage, const PipelineConfig& cfg) {
  if (stage == "synth") {
    stage_synth(cfg);
  } else if (stage == "ingest") {
    stage_ingest(cfg);
  } else if (stage == "dissect") {
    stage_dissect(cfg);
  } else if (stage == "communities") {
    stage_communities(cfg);
  } else if (stage == "label") {
    stage_label(cfg);
  } else if (stage == "features") {
    stage_features(cfg);
  } else if (stage == "datasets") {
    stage_datasets(cfg);
  } else if (stage == "train") {
    stage_train(cfg);
  } else if (stage == "evaluate") {
    stage_evaluate(cfg);
  } else if (stage == "report") {
    stage_report(cfg);
  } else {
    throw std::invalid_argument("unknown stage: " + stage);
  }
}

std::vector<std::string> run_all(const PipelineConfig& cfg, const RunAllOptions& opts) {
  std::vector<std::string> plan;
  bool started = !opts.from.has_value();
  for (const std::string& stage : kStageOrder) {
    if (!started && stage == *opts.from) started = true;
    if (!started) continue;
    if (stage == "synth" && !cfg.use_synth) continue;
    plan.push_back(stage);
  }
  if (!started) throw std::invalid_argument("unknown stage: " + *opts.from);
  if (opts.dry_run) return plan;
  for (const std::string& stage : plan) {
    try {
      run_stage(stage, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError("stage '" + stage + "' failed: " + e.what());
    } catch (const std::runtime_error& e) {
      throw DataError("stage '" + stage + "' failed: " + e.what());
    }
  }
  return plan;
}

// --- artifact readers ---

std::vector<Community> read_communities(const fs::path& dir) {
  std::ifstream in(dir / "communities.json");
  if (!in) throw DataError("cannot read communities manifest in " + dir.string());
  json manifest;
  in >> manifest;
  std::vector<Community> out;
  for (const auto& entry : manifest.at("communities")) {
    Community c;
    c.id = CommunityId{entry.at("snapshot").get<int>(), entry.at("ordinal").get<int>()};
    auto ids = entry.at("nodes").get<std::vector<std::string>>();
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);

    std::ifstream edges_in(dir / entry.at("file").get<std::string>());
    if (!edges_in) throw DataError("cannot read community edges");
    std::string line;
    std::getline(edges_in, line);  // header
    std::map<std::pair<int, int>, int> weights;
    while (std::getline(edges_in, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string from, to, w;
      std::getline(ss, from, ',');
      std::getline(ss, to, ',');
      std::getline(ss, w, ',');
      weights[{index.at(from), index.at(to)}] = std::stoi(w);
    }
    c.subgraph = DirectedGraph::from_weighted_edges(std::move(ids), weights);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::pair<CommunityId, LabelResult>> read_labels(const fs::path& dir) {
  std::ifstream in(dir / "labels.json");
  if (!in) throw DataError("cannot read labels in " + dir.string());
  json doc;
  in >> doc;
  std::vector<std::pair<CommunityId, LabelResult>> out;
  for (const auto& e : doc.at("entries")) {
    LabelResult r;
    r.label.labeled = e.at("labeled").get<bool>();
    if (r.label.labeled) {
      const auto p = pattern_from_name(e.at("pattern").get<std::string>());
      if (!p) throw DataError("unknown pattern in labels");
      r.label.pattern = *p;
    }
    r.label.score = e.at("score").get<double>();
    r.label.argmax_account = e.at("argmax_account").get<std::string>();
    r.indicator_max = e.at("indicator_max").get<std::array<double, kPatternCount>>();
    out.push_back({CommunityId{e.at("snapshot").get<int>(), e.at("ordinal").get<int>()}, r});
  }
  return out;
}

Matrix read_feature_matrix(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read feature matrix " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty feature matrix " + file.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

std::vector<TrainValSplit> read_splits(const fs::path& dir) {
  std::ifstream in(dir / "splits.json");
  if (!in) throw DataError("cannot read splits in " + dir.string());
  json doc;
  in >> doc;
  std::vector<TrainValSplit> out;
  for (const auto& e : doc.at("splits")) {
    if (e.contains("skipped")) continue;
    TrainValSplit split;
    const auto p = pattern_from_name(e.at("label").get<std::string>());
    if (!p) throw DataError("unknown pattern in splits");
    split.label = *p;
    split.seed = e.at("seed").get<std::uint64_t>();
    split.ros_applied = e.at("ros_applied").get<bool>();
    for (const auto& id : e.at("train")) {
      split.train.push_back(CommunityId{id.at(0).get<int>(), id.at(1).get<int>()});
    }
    for (const auto& id : e.at("val")) {
      split.val.push_back(CommunityId{id.at(0).get<int>(), id.at(1).get<int>()});
    }
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace txtopo
