#pragma once

#include <cstddef>
#include <functional>

namespace phnmf {

/// Worker count: PHNMF_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Calls made
/// from inside a worker run serially on that worker, so nesting never
/// oversubscribes. The first exception thrown by any body is rethrown after
/// all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace phnmf
