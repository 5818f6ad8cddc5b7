#include "txtopo/gae.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "txtopo/errors.hpp"

namespace txtopo {

nn::Matrix binary_symmetric_adjacency(const DirectedGraph& g) {
  const int n = g.node_count();
  nn::Matrix a = nn::Matrix::Zero(n, n);
  for (int v = 0; v < n; ++v) {
    for (const Arc& arc : g.out(v)) {
      a(v, arc.node) = 1.0;
      a(arc.node, v) = 1.0;
    }
  }
  return a;
}

BatchInput batch_communities(const std::vector<TrainSample>& samples,
                             const TrainingStats& stats) {
  if (samples.empty()) throw DataError("cannot batch zero communities");
  Eigen::Index total = 0;
  for (const TrainSample& s : samples) total += s.community->size();

  BatchInput batch;
  batch.graph.a_bin = nn::Matrix::Zero(total, total);
  batch.features = nn::Matrix::Zero(total, kFeatureCount);
  batch.graph.graph_of.assign(static_cast<std::size_t>(total), 0);
  batch.graph.graph_count = static_cast<int>(samples.size());

  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& c = *samples[k].community;
    const Eigen::Index n = c.size();
    batch.graph.a_bin.block(offset, offset, n, n) =
        binary_symmetric_adjacency(c.subgraph);
    batch.features.block(offset, 0, n, kFeatureCount) =
        standardize(*samples[k].raw_features, stats);
    for (Eigen::Index i = 0; i < n; ++i) {
      batch.graph.graph_of[static_cast<std::size_t>(offset + i)] = static_cast<int>(k);
    }
    offset += n;
  }
  batch.graph.a_hat = nn::normalize_adjacency(batch.graph.a_bin);
  batch.graph.mean_agg = batch.graph.a_bin;
  for (Eigen::Index i = 0; i < total; ++i) {
    const double deg = batch.graph.a_bin.row(i).sum();
    if (deg > 0.0) batch.graph.mean_agg.row(i) /= deg;
  }
  return batch;
}

namespace {

struct ParamSnapshot {
  std::vector<nn::Matrix> values;
  std::vector<nn::Vector> running_stats;  // mean/var pairs per batch norm
};

ParamSnapshot snapshot(nn::Encoder& enc) {
  ParamSnapshot snap;
  for (nn::Param* p : enc.params()) snap.values.push_back(p->value);
  for (int i = 0; i < 2; ++i) {
    snap.running_stats.push_back(enc.batch_norm(i).running_mean);
    snap.running_stats.push_back(enc.batch_norm(i).running_var);
  }
  return snap;
}

void restore(nn::Encoder& enc, const ParamSnapshot& snap) {
  const auto params = enc.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap.values[i];
  for (int i = 0; i < 2; ++i) {
    enc.batch_norm(i).running_mean = snap.running_stats[static_cast<std::size_t>(2 * i)];
    enc.batch_norm(i).running_var = snap.running_stats[static_cast<std::size_t>(2 * i + 1)];
  }
}

double eval_mean_loss(nn::Encoder& enc, const std::vector<TrainSample>& samples,
                      const TrainingStats& stats, int batch_size) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t at = 0; at < samples.size(); at += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(samples.size(), at + static_cast<std::size_t>(batch_size));
    const std::vector<TrainSample> chunk(samples.begin() + static_cast<std::ptrdiff_t>(at),
                                         samples.begin() + static_cast<std::ptrdiff_t>(end));
    BatchInput batch = batch_communities(chunk, stats);
    const nn::Matrix z = enc.forward(batch.graph, batch.features, nn::Mode::Eval, nullptr);
    for (const double l : nn::reconstruction_loss_per_graph(z, batch.graph)) {
      total += l;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

GaeModel train_gae(const std::vector<TrainSample>& train_seq, Pattern pattern,
                   nn::Variant variant, const TrainConfig& cfg,
                   const nn::EncoderConfig& encoder_cfg) {
  if (train_seq.empty()) throw DataError("empty training sequence");

  GaeModel model;
  model.variant = variant;
  model.pattern = pattern;
  model.encoder_cfg = encoder_cfg;
  model.encoder_cfg.dropout = cfg.dropout;
  model.train_cfg = cfg;

  // Feature statistics come from the training corpus the model will see,
  // oversampling multiplicity included.
  std::vector<const Matrix*> feature_ptrs;
  feature_ptrs.reserve(train_seq.size());
  for (const TrainSample& s : train_seq) feature_ptrs.push_back(s.raw_features);
  model.feature_stats = fit_training_stats(feature_ptrs);

  model.encoder = std::make_unique<nn::Encoder>(
      variant, model.encoder_cfg, derive_seed(cfg.seed, "init"));
  nn::Encoder& enc = *model.encoder;

  // Hold out the monitor slice once, then stream the rest per epoch.
  std::vector<std::size_t> order(train_seq.size());
  std::iota(order.begin(), order.end(), 0);
  Rng monitor_rng(derive_seed(cfg.seed, "monitor"));
  monitor_rng.shuffle(order);
  std::size_t n_monitor = 0;
  if (train_seq.size() >= 2) {
    n_monitor = static_cast<std::size_t>(
        cfg.monitor_fraction * static_cast<double>(train_seq.size()));
    n_monitor = std::clamp<std::size_t>(n_monitor, 1, train_seq.size() - 1);
  }
  std::vector<TrainSample> monitor, sgd;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_monitor ? monitor : sgd).push_back(train_seq[order[i]]);
  }
  if (monitor.empty()) monitor = sgd;  // degenerate single-sample set

  nn::Adam adam(nn::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  const auto params = enc.params();
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));

  double best_loss = std::numeric_limits<double>::infinity();
  ParamSnapshot best;
  int stale_epochs = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(sgd);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t at = 0; at < sgd.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(sgd.size(), at + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<TrainSample> chunk(sgd.begin() + static_cast<std::ptrdiff_t>(at),
                                           sgd.begin() + static_cast<std::ptrdiff_t>(end));
      BatchInput batch = batch_communities(chunk, model.feature_stats);
      enc.zero_grads();
      const nn::Matrix z =
          enc.forward(batch.graph, batch.features, nn::Mode::Train, &dropout_rng);
      nn::Matrix grad_z;
      const double loss = nn::reconstruction_loss(z, batch.graph, grad_z);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite training loss (pattern " +
                             std::string(pattern_name(pattern)) + ")");
      }
      enc.backward(batch.graph, grad_z);
      adam.step(params);
      epoch_loss += loss;
      ++batches;
    }

    EpochStats stats;
    stats.train_loss = batches > 0 ? epoch_loss / batches : 0.0;
    stats.monitor_loss = eval_mean_loss(enc, monitor, model.feature_stats, cfg.batch_size);
    model.curve.push_back(stats);

    if (stats.monitor_loss < best_loss) {
      best_loss = stats.monitor_loss;
      best = snapshot(enc);
      model.best_epoch = epoch;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= cfg.early_stop_patience) break;
    }
  }

  if (model.best_epoch >= 0) restore(enc, best);
  return model;
}

double reconstruction_error(GaeModel& model, const Community& c,
                            const Matrix& raw_features) {
  if (c.size() < 2) {
    throw DataError("reconstruction error undefined for a single-node community");
  }
  const std::vector<TrainSample> one = {{&c, &raw_features}};
  BatchInput batch = batch_communities(one, model.feature_stats);
  const nn::Matrix z =
      model.encoder->forward(batch.graph, batch.features, nn::Mode::Eval, nullptr);
  return nn::reconstruction_loss_per_graph(z, batch.graph)[0];
}

// --- serialization ---
// Layout: magic "TXGM", u32 version, u64 JSON header length, JSON header,
// then every numeric blob as little-endian doubles in header order.

namespace {

constexpr char kMagic[4] = {'T', 'X', 'G', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    write_u64(out, std::bit_cast<std::uint64_t>(data[i]));
  }
}

void read_doubles(std::istream& in, double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<double>(read_u64(in));
  }
}

}  // namespace

void save_model(const GaeModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["variant"] = std::string(nn::variant_name(model.variant));
  header["pattern"] = std::string(pattern_name(model.pattern));
  header["best_epoch"] = model.best_epoch;
  header["encoder"] = {{"input_dim", model.encoder_cfg.input_dim},
                       {"widths", model.encoder_cfg.widths},
                       {"dropout", model.encoder_cfg.dropout},
                       {"lrelu_slope", model.encoder_cfg.lrelu_slope},
                       {"attn_slope", model.encoder_cfg.attn_slope},
                       {"bn_momentum", model.encoder_cfg.bn_momentum},
                       {"bn_eps", model.encoder_cfg.bn_eps}};
  header["train"] = {{"max_epochs", model.train_cfg.max_epochs},
                     {"early_stop_patience", model.train_cfg.early_stop_patience},
                     {"batch_size", model.train_cfg.batch_size},
                     {"lr", model.train_cfg.lr},
                     {"dropout", model.train_cfg.dropout},
                     {"monitor_fraction", model.train_cfg.monitor_fraction},
                     {"seed", model.train_cfg.seed}};
  header["feature_stats_version"] = model.feature_stats.schema_version;
  auto& curve = header["curve"];
  curve = nlohmann::json::array();
  for (const EpochStats& e : model.curve) {
    curve.push_back({{"train", e.train_loss}, {"monitor", e.monitor_loss}});
  }
  auto& blobs = header["blobs"];
  blobs = nlohmann::json::array();
  const auto params = model.encoder->params();
  for (const nn::Param* p : params) {
    blobs.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  for (int i = 0; i < 2; ++i) {
    const auto& bn = model.encoder->batch_norm(i);
    blobs.push_back({{"name", "bn" + std::to_string(i + 1) + ".running_mean"},
                     {"rows", bn.running_mean.size()},
                     {"cols", 1}});
    blobs.push_back({{"name", "bn" + std::to_string(i + 1) + ".running_var"},
                     {"rows", bn.running_var.size()},
                     {"cols", 1}});
  }
  blobs.push_back({{"name", "feature_stats.mean"}, {"rows", kFeatureCount}, {"cols", 1}});
  blobs.push_back({{"name", "feature_stats.stddev"}, {"rows", kFeatureCount}, {"cols", 1}});

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kModelVersion);
  write_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const nn::Param* p : params) {
    // Eigen default storage is column-major; serialize in that order.
    write_doubles(out, p->value.data(), static_cast<std::size_t>(p->value.size()));
  }
  for (int i = 0; i < 2; ++i) {
    const auto& bn = model.encoder->batch_norm(i);
    write_doubles(out, bn.running_mean.data(), static_cast<std::size_t>(bn.running_mean.size()));
    write_doubles(out, bn.running_var.data(), static_cast<std::size_t>(bn.running_var.size()));
  }
  write_doubles(out, model.feature_stats.mean.data(), kFeatureCount);
  write_doubles(out, model.feature_stats.stddev.data(), kFeatureCount);
}

GaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw DataError("bad model magic: " + path.string());
  }
  const std::uint32_t version = read_u32(in);
  if (version != kModelVersion) {
    throw DataError("unsupported model version in " + path.string());
  }
  const std::uint64_t header_len = read_u64(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  const auto header = nlohmann::json::parse(header_text);

  GaeModel model;
  const auto variant = nn::variant_from_name(header.at("variant").get<std::string>());
  const auto pattern = pattern_from_name(header.at("pattern").get<std::string>());
  if (!variant || !pattern) throw DataError("bad model header in " + path.string());
  model.variant = *variant;
  model.pattern = *pattern;
  model.best_epoch = header.at("best_epoch").get<int>();

  const auto& enc = header.at("encoder");
  model.encoder_cfg.input_dim = enc.at("input_dim").get<int>();
  model.encoder_cfg.widths = enc.at("widths").get<std::array<int, 3>>();
  model.encoder_cfg.dropout = enc.at("dropout").get<double>();
  model.encoder_cfg.lrelu_slope = enc.at("lrelu_slope").get<double>();
  model.encoder_cfg.attn_slope = enc.at("attn_slope").get<double>();
  model.encoder_cfg.bn_momentum = enc.at("bn_momentum").get<double>();
  model.encoder_cfg.bn_eps = enc.at("bn_eps").get<double>();

  const auto& tr = header.at("train");
  model.train_cfg.max_epochs = tr.at("max_epochs").get<int>();
  model.train_cfg.early_stop_patience = tr.at("early_stop_patience").get<int>();
  model.train_cfg.batch_size = tr.at("batch_size").get<int>();
  model.train_cfg.lr = tr.at("lr").get<double>();
  model.train_cfg.dropout = tr.at("dropout").get<double>();
  model.train_cfg.monitor_fraction = tr.at("monitor_fraction").get<double>();
  model.train_cfg.seed = tr.at("seed").get<std::uint64_t>();

  for (const auto& e : header.at("curve")) {
    model.curve.push_back({e.at("train").get<double>(), e.at("monitor").get<double>()});
  }

  model.encoder = std::make_unique<nn::Encoder>(model.variant, model.encoder_cfg, 0);
  const auto params = model.encoder->params();
  const auto& blobs = header.at("blobs");
  std::size_t blob_index = 0;
  for (nn::Param* p : params) {
    const auto& meta = blobs.at(blob_index++);
    if (meta.at("rows").get<Eigen::Index>() != p->value.rows() ||
        meta.at("cols").get<Eigen::Index>() != p->value.cols()) {
      throw DataError("model shape manifest mismatch for " + p->name);
    }
    read_doubles(in, p->value.data(), static_cast<std::size_t>(p->value.size()));
  }
  for (int i = 0; i < 2; ++i) {
    auto& bn = model.encoder->batch_norm(i);
    blob_index += 2;
    read_doubles(in, bn.running_mean.data(), static_cast<std::size_t>(bn.running_mean.size()));
    read_doubles(in, bn.running_var.data(), static_cast<std::size_t>(bn.running_var.size()));
  }
  read_doubles(in, model.feature_stats.mean.data(), kFeatureCount);
  read_doubles(in, model.feature_stats.stddev.data(), kFeatureCount);
  if (!in) throw DataError("truncated model file: " + path.string());
  return model;
}

}  // namespace txtopo
