#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace snnconv {

/// Runs fn(i) for i in [0, n) across up to `jobs` threads. Each index is
/// processed exactly once; callers write into preallocated slots so the
/// result is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (std::thread& t : threads) t.join();
}

}  // namespace snnconv
