#pragma once

#include <cstddef>
#include <functional>

namespace famle {

/// Worker cap for data-parallel loops. 1 means strictly sequential.
/// Initialized from FINSLER_AMLE_THREADS when set, otherwise 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over contiguous chunks of [0, n). Each chunk is
/// processed by exactly one worker; chunk boundaries depend only on n and
/// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace famle
