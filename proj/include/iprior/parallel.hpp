#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>

namespace iprior {

/// Worker count: `requested` if positive, else IPRIOR_THREADS if set,
/// else the hardware concurrency (at least 1).
std::size_t resolve_threads(int requested = 0);

/// Runs task(i) for i in [0, count) on up to `threads` workers. Each index
/// is run exactly once; callers write results into slot i so the outcome
/// does not depend on scheduling. The first exception thrown by a task is
/// rethrown after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for a sub-stream identified by a sequence of integers.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace iprior
