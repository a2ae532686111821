#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace binica {

/// Worker count: hardware concurrency, capped by the BLICA_THREADS
/// environment variable when it holds a positive integer.
unsigned worker_count();

/// Calls body(i) for i in [0, count) across up to `workers` threads
/// (0 means worker_count()). Tasks must be independent. The first exception
/// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned workers = 0);

/// SplitMix64-style mixing of a base seed with stream coordinates, so that
/// independent tasks get decorrelated, reproducible seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace binica
