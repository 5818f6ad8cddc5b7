#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace txtopo {

// The six suspicious-activity topologies, in the fixed order used everywhere
// (indicator indices, dataset rows, report rows).
enum class Pattern : int {
  Collector = 0,
  Sink = 1,
  Collusion = 2,
  Branching = 3,
  ScatterGather = 4,
  GatherScatter = 5,
};

inline constexpr int kPatternCount = 6;

inline constexpr std::array<Pattern, kPatternCount> kAllPatterns = {
    Pattern::Collector,     Pattern::Sink,          Pattern::Collusion,
    Pattern::Branching,     Pattern::ScatterGather, Pattern::GatherScatter,
};

std::string_view pattern_name(Pattern p);
std::optional<Pattern> pattern_from_name(std::string_view name);

}  // namespace txtopo
