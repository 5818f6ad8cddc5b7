#include "txtopo/temporal.hpp"

#include <algorithm>
#include <map>

#include "txtopo/errors.hpp"
#include "txtopo/timeutil.hpp"

namespace txtopo {

std::vector<TemporalSnapshot> dissect(std::span<const Transaction> txs,
                                      std::int64_t rho,
                                      std::optional<std::int64_t> origin) {
  if (rho <= 0) throw DataError("rho must be positive");
  if (txs.empty()) throw DataError("cannot dissect an empty transaction sequence");

  std::int64_t start = 0;
  if (origin) {
    start = *origin;
  } else {
    std::int64_t earliest = txs.front().timestamp;
    for (const Transaction& t : txs) earliest = std::min(earliest, t.timestamp);
    start = floor_to_day(earliest);
  }

  // Floor division keeps windows correct for timestamps before the origin.
  const auto window_of = [&](std::int64_t t) {
    std::int64_t k = (t - start) / rho;
    if ((t - start) % rho < 0) --k;
    return k;
  };

  std::map<std::int64_t, std::vector<Transaction>> buckets;
  for (const Transaction& t : txs) {
    buckets[window_of(t.timestamp)].push_back(t);
  }

  std::vector<TemporalSnapshot> out;
  out.reserve(buckets.size());
  for (const auto& [k, bucket] : buckets) {
    TemporalSnapshot snap;
    snap.index = static_cast<int>(k);
    snap.window_start = start + k * rho;
    snap.window_end = snap.window_start + rho;
    snap.graph = TransactionalGraph::build(bucket);
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace txtopo
