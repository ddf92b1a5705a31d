#pragma once

#include <cstdint>
#include <functional>

namespace lapcert {

// Resolves a worker count: explicit request wins, then LAPCERT_THREADS, then
// hardware concurrency. Always >= 1.
int resolve_threads(int requested);

// Runs fn(i) for i in [0, n). Work is split into static chunks; fn must write
// only into pre-assigned slots so results do not depend on the schedule.
// Exceptions thrown by fn are collected and the first one is rethrown.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace lapcert
