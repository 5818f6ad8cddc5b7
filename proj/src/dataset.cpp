#include "txtopo/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "txtopo/errors.hpp"
#include "txtopo/rng.hpp"

namespace txtopo {

std::array<PatternSet, kPatternCount> build_pattern_sets(
    const std::vector<std::pair<CommunityId, Pattern>>& labeled) {
  std::array<PatternSet, kPatternCount> sets;
  for (int k = 0; k < kPatternCount; ++k) {
    sets[static_cast<std::size_t>(k)].label = static_cast<Pattern>(k);
  }
  for (const auto& [id, pattern] : labeled) {
    sets[static_cast<std::size_t>(pattern)].members.push_back(id);
  }
  return sets;
}

bool is_majority_regime(std::size_t set_size, int majority_train) {
  // 80% of the set reaches the fixed sample size (exact integer arithmetic).
  return 4 * set_size >= 5 * static_cast<std::size_t>(majority_train);
}

TrainValSplit split_pattern_set(const PatternSet& ps, std::uint64_t seed,
                                int majority_train) {
  if (ps.members.size() < 2) {
    throw DataError("pattern set too small to split (need >= 2 members)");
  }
  TrainValSplit split;
  split.label = ps.label;
  split.seed = seed;

  std::vector<std::size_t> order(ps.members.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(ps.label)));
  rng.shuffle(order);

  const std::size_t n_train = is_majority_regime(ps.members.size(), majority_train)
                                  ? static_cast<std::size_t>(majority_train)
                                  : ps.members.size() * 4 / 5;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.val).push_back(ps.members[order[i]]);
  }
  return split;
}

TrainValSplit oversample(const TrainValSplit& split, int target, std::uint64_t seed) {
  if (split.train.empty()) throw DataError("cannot oversample an empty training set");
  TrainValSplit out = split;
  out.ros_applied = true;
  Rng rng(derive_seed(seed, "ros", static_cast<std::uint64_t>(split.label)));
  std::vector<CommunityId> resampled;
  resampled.reserve(static_cast<std::size_t>(target));
  for (int i = 0; i < target; ++i) {
    resampled.push_back(
        split.train[static_cast<std::size_t>(rng.uniform_u64(split.train.size()))]);
  }
  out.train = std::move(resampled);
  return out;
}

}  // namespace txtopo
