#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "txtopo/community.hpp"
#include "txtopo/pattern.hpp"

namespace txtopo {

struct PatternSet {
  Pattern label = Pattern::Collector;
  std::vector<CommunityId> members;
};

struct TrainValSplit {
  Pattern label = Pattern::Collector;
  std::vector<CommunityId> train;  // may repeat after oversampling
  std::vector<CommunityId> val;
  bool ros_applied = false;
  std::uint64_t seed = 0;
};

// Groups labeled communities into the six pattern sets; unlabeled
// communities are excluded.
std::array<PatternSet, kPatternCount> build_pattern_sets(
    const std::vector<std::pair<CommunityId, Pattern>>& labeled);

// Majority sets (80% of the set reaches 10,000) contribute a fixed uniform
// sample of `majority_train` communities; the rest split 80/20. The split
// always happens before any oversampling. Throws DataError for sets smaller
// than 2.
TrainValSplit split_pattern_set(const PatternSet& ps, std::uint64_t seed,
                                int majority_train = 10000);

// Random oversampling: the training sequence becomes exactly `target` draws
// with replacement from the original distinct train ids. Validation ids are
// untouched.
TrainValSplit oversample(const TrainValSplit& split, int target, std::uint64_t seed);

// Whether the set falls in the fixed-sample (majority) regime.
bool is_majority_regime(std::size_t set_size, int majority_train = 10000);

}  // namespace txtopo
