#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "txtopo/graph.hpp"

namespace txtopo {

// One Temporal Transaction Snapshot: the transactional graph restricted to a
// half-open window [start, start + rho).
struct TemporalSnapshot {
  int index = 0;  // 0-based window index counted from the origin
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  TransactionalGraph graph;
};

// Splits transactions into fixed-duration snapshots. Window 0 starts at
// `origin`, or at midnight UTC of the earliest transaction's day when origin
// is not given. Every transaction lands in exactly one window; windows with
// no transactions are omitted. Throws DataError on an empty input and
// invalid rho.
std::vector<TemporalSnapshot> dissect(std::span<const Transaction> txs,
                                      std::int64_t rho,
                                      std::optional<std::int64_t> origin = std::nullopt);

}  // namespace txtopo
