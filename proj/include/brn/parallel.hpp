#pragma once

#include <cstdint>
#include <functional>

namespace brn {

/// Worker count: BRN_THREADS if set and positive, else the hardware concurrency.
int thread_count();

/**
 * Runs body(shard) for shard in [0, shards) on up to thread_count() threads.
 * Callers merge per-shard results in shard order so the outcome does not
 * depend on scheduling.
 */
void parallel_shards(std::int64_t shards, const std::function<void(std::int64_t)>& body);

} // namespace brn
