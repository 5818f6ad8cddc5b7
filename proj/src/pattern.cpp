#include "txtopo/pattern.hpp"

namespace txtopo {

std::string_view pattern_name(Pattern p) {
  switch (p) {
    case Pattern::Collector: return "collector";
    case Pattern::Sink: return "sink";
    case Pattern::Collusion: return "collusion";
    case Pattern::Branching: return "branching";
    case Pattern::ScatterGather: return "scatter_gather";
    case Pattern::GatherScatter: return "gather_scatter";
  }
  return "unknown";
}

std::optional<Pattern> pattern_from_name(std::string_view name) {
  for (const Pattern p : kAllPatterns) {
    if (pattern_name(p) == name) return p;
  }
  return std::nullopt;
}

}  // namespace txtopo
