#include "txtopo/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace txtopo {

namespace {

// Shared core of I1/I2. R = |log2(deg/max_deg)| is squeezed into [0,1] by
// dividing by 10 times the digit count of R's integer part (at least one
// digit, so R in (0,1) stays on the same branch as [1,10)). Degrees below 2
// score 0: each pattern is defined over at least two counterparties. The
// result is clamped at 0 for the extreme ratios where the squeeze overflows.
double degree_proximity(int deg, int max_deg) {
  if (deg < 2) return 0.0;
  if (deg == max_deg) return 1.0;
  const double r = std::abs(std::log2(static_cast<double>(deg) / max_deg));
  const double digits = std::max(1.0, std::floor(std::log10(r)) + 1.0);
  return std::max(0.0, 1.0 - r / (10.0 * digits));
}

}  // namespace

double collector_indicator(int node, const DirectedGraph& g) {
  int max_in = 0;
  for (int v = 0; v < g.node_count(); ++v) max_in = std::max(max_in, g.in_degree(v));
  return degree_proximity(g.in_degree(node), max_in);
}

double sink_indicator(int node, const DirectedGraph& g) {
  int max_out = 0;
  for (int v = 0; v < g.node_count(); ++v) max_out = std::max(max_out, g.out_degree(v));
  return degree_proximity(g.out_degree(node), max_out);
}

double collusion_indicator(int node, const DirectedGraph& g) {
  const int out_deg = g.out_degree(node);
  if (out_deg == 0) return 0.0;
  // Count how often each other account funds the node's recipients.
  std::map<int, int> occurrences;
  for (const Arc& to : g.out(node)) {
    for (const Arc& funder : g.in(to.node)) {
      if (funder.node != node) ++occurrences[funder.node];
    }
  }
  double sum = 0.0;
  int shared = 0;
  for (const auto& [funder, count] : occurrences) {
    if (count >= 2) {
      sum += static_cast<double>(count) / out_deg;
      ++shared;
    }
  }
  return shared == 0 ? 0.0 : sum / shared;
}

double branching_indicator(int node, const DirectedGraph& g) {
  const int m = g.out_degree(node);
  if (m < 2) return 0.0;
  int exact_two = 0;
  for (const Arc& to : g.out(node)) {
    if (g.out_degree(to.node) == 2) ++exact_two;
  }
  return static_cast<double>(exact_two) / m;
}

double scatter_gather_indicator(int node, const DirectedGraph& g) {
  if (g.out_degree(node) <= 2) return 0.0;
  // Directed paths of length exactly two, the start node excluded.
  std::map<int, int> two_step_paths;
  for (const Arc& mid : g.out(node)) {
    for (const Arc& target : g.out(mid.node)) {
      if (target.node != node) ++two_step_paths[target.node];
    }
  }
  if (two_step_paths.empty()) return 0.0;
  const double deg = g.out_degree(node) + g.in_degree(node);
  double r = 0.0;
  for (const auto& [target, paths] : two_step_paths) r += paths / deg;
  return r / static_cast<double>(two_step_paths.size());
}

double gather_scatter_indicator(int node, const DirectedGraph& g) {
  const int out_deg = g.out_degree(node);
  const int in_deg = g.in_degree(node);
  if (out_deg <= 2 || in_deg <= 2) return 0.0;
  return 1.0 - std::abs(static_cast<double>(out_deg - in_deg)) / (out_deg + in_deg);
}

IndicatorVector indicator_vector(int node, const DirectedGraph& g) {
  IndicatorVector iv;
  iv.node = node;
  iv.values = {collector_indicator(node, g),      sink_indicator(node, g),
               collusion_indicator(node, g),      branching_indicator(node, g),
               scatter_gather_indicator(node, g), gather_scatter_indicator(node, g)};
  return iv;
}

LabelResult label_graph(const DirectedGraph& g) {
  LabelResult result;
  for (int v = 0; v < g.node_count(); ++v) {
    const IndicatorVector iv = indicator_vector(v, g);
    for (int k = 0; k < kPatternCount; ++k) {
      const double value = iv.values[static_cast<std::size_t>(k)];
      result.indicator_max[static_cast<std::size_t>(k)] =
          std::max(result.indicator_max[static_cast<std::size_t>(k)], value);
      if (value <= 0.0) continue;
      auto& label = result.label;
      // Nodes are visited in ascending id order, so on a full tie the
      // earlier node keeps the win.
      const bool wins = !label.labeled || value > label.score ||
                        (value == label.score && k > static_cast<int>(label.pattern));
      if (wins) {
        label.labeled = true;
        label.pattern = static_cast<Pattern>(k);
        label.score = value;
        label.argmax_node = v;
        label.argmax_account = g.node_id(v);
      }
    }
  }
  return result;
}

LabelResult label_community(const Community& c) { return label_graph(c.subgraph); }

}  // namespace txtopo
