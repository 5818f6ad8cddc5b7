#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "txtopo/dataset.hpp"
#include "txtopo/gae.hpp"
#include "txtopo/indicators.hpp"
#include "txtopo/ingest.hpp"

namespace txtopo {

// Resolved configuration for a pipeline run. Every run writes the resolved
// config next to its outputs; a master seed feeds labeled per-stage seeds.
struct PipelineConfig {
  // input: either a synthetic corpus or an external delimited file
  bool use_synth = true;
  int synth_per_pattern = 600;
  int synth_noise_edges = 400;
  int synth_windows = 8;
  std::string input_path;
  ColumnMapping mapping;

  std::string rho = "7d";

  int min_community_size = 4;
  double louvain_resolution = 1.0;
  int louvain_restarts = 16;

  int majority_train = 10000;
  int ros_target = 10000;

  std::vector<std::string> variants = {"gcn", "sage", "gat"};
  std::vector<std::string> patterns = {"collector",      "sink",
                                       "collusion",      "branching",
                                       "scatter_gather", "gather_scatter"};
  // Evaluate models from this directory instead of the train stage.
  std::string models_dir;
  TrainConfig train;

  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int jobs = 1;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void save_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path);
std::string config_hash(const PipelineConfig& cfg);

inline const std::vector<std::string> kStageOrder = {
    "synth",    "ingest", "dissect", "communities", "label",
    "features", "datasets", "train", "evaluate",    "report",
};

// Runs one stage: validates prerequisite manifests, writes outputs
// atomically (temp dir + rename), and records the stage manifest. Throws
// DataError / NumericalError on failure.
void run_stage(const std::string& stage, const PipelineConfig& cfg);

struct RunAllOptions {
  std::optional<std::string> from;  // resume at this stage
  bool dry_run = false;
};
// Executes the stages in order, stopping at the first failure. Returns the
// list of stages executed (or planned, under dry_run).
std::vector<std::string> run_all(const PipelineConfig& cfg, const RunAllOptions& opts = {});

// --- artifact access (shared by stages, tests, and the acceptance suite) ---

struct LabeledCommunity {
  Community community;
  LabelResult label;
};

std::vector<Community> read_communities(const std::filesystem::path& stage_dir);
std::vector<std::pair<CommunityId, LabelResult>> read_labels(
    const std::filesystem::path& stage_dir);
Matrix read_feature_matrix(const std::filesystem::path& file);
std::vector<TrainValSplit> read_splits(const std::filesystem::path& stage_dir);

// 64-bit FNV-1a over a file or over a whole directory tree (sorted relative
// paths, path and content both hashed). Used for manifest provenance.
std::uint64_t hash_file(const std::filesystem::path& path);
std::uint64_t hash_directory(const std::filesystem::path& dir,
                             const std::vector<std::string>& exclude = {"manifest.json"});

}  // namespace txtopo
