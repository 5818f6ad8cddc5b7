#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "txtopo/community.hpp"

namespace txtopo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kFeatureCount = 9;

// Fixed, versioned column order of the node feature matrix.
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "in_degree",  "out_degree", "closeness",  "betweenness", "harmonic",
    "second_order", "laplacian", "constraint", "reciprocity",
};
inline constexpr int kFeatureSchemaVersion = 1;

struct NodeFeatureMatrix {
  CommunityId community;
  std::vector<std::string> order;  // node ids, sorted (row order)
  Matrix values;                   // n x 9
};

// Directed simple-view degrees.
Vector in_degree_column(const DirectedGraph& g);
Vector out_degree_column(const DirectedGraph& g);

// Wasserman-Faust closeness on the undirected view; disconnected-safe,
// isolated nodes score 0.
Vector closeness_column(const DirectedGraph& g);

// Brandes betweenness on the undirected view, normalized by (n-1)(n-2)/2.
Vector betweenness_column(const DirectedGraph& g);

// Harmonic centrality normalized by (n-1); unreachable pairs add 0.
Vector harmonic_column(const DirectedGraph& g);

// Standard deviation of the first return time of the weighted random walk
// on each node's undirected connected component. Computed exactly by
// first-step analysis: (I-Q)h = 1 gives mean hitting times and
// (I-Q)s = 1 + 2Qh their second moments; the return-time moments follow by
// one more step from the node itself. Degree-0 nodes score 0.
Vector second_order_return_std(const DirectedGraph& g);

// The return-time stds min-max scaled inside the community (the raw values
// grow without bound in the component size).
Vector second_order_column(const DirectedGraph& g);

// Laplacian energy drop when removing the node: (E - E_v)/E on the weighted
// undirected view, E = trace(L^2). A zero-energy graph gives all zeros.
Vector laplacian_centrality_column(const DirectedGraph& g);

// Burt's constraint from weighted undirected proportions; isolated nodes
// score 0.
Vector burt_constraint_column(const DirectedGraph& g);

// Share of the node's incident directed edges whose reverse also exists.
Vector reciprocity_column(const DirectedGraph& g);

// All nine columns in the fixed order.
NodeFeatureMatrix node_features(const Community& c);
Matrix node_feature_values(const DirectedGraph& g);

// Per-column z-score statistics fitted on a training corpus.
struct TrainingStats {
  Vector mean = Vector::Zero(kFeatureCount);
  Vector stddev = Vector::Ones(kFeatureCount);
  int schema_version = kFeatureSchemaVersion;
};

// Mean/std over all rows of all matrices; stddev is floored at 1e-12.
TrainingStats fit_training_stats(const std::vector<const Matrix*>& matrices);

Matrix standardize(const Matrix& values, const TrainingStats& stats);
Matrix destandardize(const Matrix& standardized, const TrainingStats& stats);

}  // namespace txtopo
