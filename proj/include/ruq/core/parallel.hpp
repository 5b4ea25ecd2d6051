#pragma once

#include <cstddef>
#include <functional>

namespace ruq {

/// Number of worker threads used when a caller asks for "auto" (jobs <= 0).
int default_jobs() noexcept;

/// Runs fn(i) for every i in [0, n) on up to `jobs` threads (jobs <= 0 means default_jobs()).
/// Work items must write to disjoint outputs. If any call throws, the exception
/// of the lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace ruq
