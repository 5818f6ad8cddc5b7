#pragma once

#include <array>
#include <string>

#include "txtopo/community.hpp"
#include "txtopo/pattern.hpp"

namespace txtopo {

// Node-level indicator values, one per pattern, each in [0,1]. Pure
// functions of the community's simple directed subgraph.
struct IndicatorVector {
  int node = 0;  // index into the community subgraph
  std::array<double, kPatternCount> values{};
};

struct PatternLabel {
  bool labeled = false;  // false => Unlabeled (all indicators zero)
  Pattern pattern = Pattern::Collector;
  double score = 0.0;
  int argmax_node = -1;
  std::string argmax_account;
};

struct LabelResult {
  PatternLabel label;
  // Highest value each indicator reaches over the community's nodes.
  std::array<double, kPatternCount> indicator_max{};
};

// I1: in-degree proximity to the community maximum. Zero for in-degree < 2
// (a collector receives from at least two counterparties), 1 at the maximum.
double collector_indicator(int node, const DirectedGraph& g);

// I2: mirror of I1 on the out-degree.
double sink_indicator(int node, const DirectedGraph& g);

// I3: mean multiplicity of other funders shared across the node's
// recipients, normalized by its out-degree. The node itself is excluded
// from the funder count; funders seen only once are dropped.
double collusion_indicator(int node, const DirectedGraph& g);

// I4: fraction of the node's recipients that pay out to exactly two nodes.
// Zero when the node has fewer than two recipients.
double branching_indicator(int node, const DirectedGraph& g);

// I5: mean two-step path concentration; Y is the set of nodes reachable by
// a directed path of length exactly two, the node itself excluded. Zero
// unless out-degree > 2.
double scatter_gather_indicator(int node, const DirectedGraph& g);

// I6: in/out degree balance; zero unless both degrees exceed 2.
double gather_scatter_indicator(int node, const DirectedGraph& g);

IndicatorVector indicator_vector(int node, const DirectedGraph& g);

// Weak label: the (node, indicator) pair with the highest value wins; a
// label is assigned only for a strictly positive score. Ties prefer the
// higher indicator index, then the lower node id.
LabelResult label_community(const Community& c);
LabelResult label_graph(const DirectedGraph& g);

}  // namespace txtopo
