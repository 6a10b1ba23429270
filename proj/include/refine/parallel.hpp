#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace refine {

/// Runs f(i) for i in [0, n) over `workers` threads using contiguous static
/// chunks. The first exception thrown by any worker is rethrown after join.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    const std::size_t per_chunk = (n + chunks - 1) / chunks;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> threads;
        threads.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t begin = c * per_chunk;
            const std::size_t end = std::min(n, begin + per_chunk);
            if (begin >= end) break;
            threads.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) {
                        f(i);
                    }
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace refine
