#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "txtopo/community.hpp"
#include "txtopo/features.hpp"
#include "txtopo/nn.hpp"
#include "txtopo/pattern.hpp"

namespace txtopo {

struct TrainConfig {
  int max_epochs = 100;
  int early_stop_patience = 3;
  int batch_size = 25;
  double lr = 1e-3;
  double dropout = 0.2;
  // Share of the training sequence held out to monitor early stopping; the
  // validation sets stay untouched for cross-pattern evaluation.
  double monitor_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct EpochStats {
  double train_loss = 0.0;
  double monitor_loss = 0.0;
};

// A trained per-pattern autoencoder: encoder parameters, the feature
// statistics it standardizes with, and its training curve.
struct GaeModel {
  nn::Variant variant = nn::Variant::GCN;
  Pattern pattern = Pattern::Collector;
  nn::EncoderConfig encoder_cfg;
  TrainConfig train_cfg;
  std::unique_ptr<nn::Encoder> encoder;
  TrainingStats feature_stats;
  std::vector<EpochStats> curve;
  int best_epoch = -1;
};

// Symmetric 0/1 adjacency of the community subgraph (direction is dropped;
// it lives in the degree and reciprocity features).
nn::Matrix binary_symmetric_adjacency(const DirectedGraph& g);

struct TrainSample {
  const Community* community = nullptr;
  const Matrix* raw_features = nullptr;
};

// Block-diagonal merge of up to batch_size communities: no cross-community
// edges, with a membership index for per-graph losses.
struct BatchInput {
  nn::GraphBatch graph;
  nn::Matrix features;
};
BatchInput batch_communities(const std::vector<TrainSample>& samples,
                             const TrainingStats& stats);

// Trains one (variant, pattern) autoencoder on the training sequence
// (duplicates from oversampling included). Stops when the monitor loss
// fails to improve for `early_stop_patience` consecutive epochs and
// restores the best-epoch parameters. Throws NumericalError on a
// non-finite loss.
GaeModel train_gae(const std::vector<TrainSample>& train_seq, Pattern pattern,
                   nn::Variant variant, const TrainConfig& cfg,
                   const nn::EncoderConfig& encoder_cfg = {});

// Eval-mode mean off-diagonal BCE of the model on one community. Rejects
// single-node communities.
double reconstruction_error(GaeModel& model, const Community& c,
                            const Matrix& raw_features);

void save_model(const GaeModel& model, const std::filesystem::path& path);
GaeModel load_model(const std::filesystem::path& path);

}  // namespace txtopo
