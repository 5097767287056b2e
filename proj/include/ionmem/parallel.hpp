#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace ionmem {

/// Worker count for shot fan-out, from IONMEM_WORKERS (default 1).
inline int worker_count() {
    const char* env = std::getenv("IONMEM_WORKERS");
    if (!env) return 1;
    const long n = std::strtol(env, nullptr, 10);
    if (n < 1) return 1;
    return static_cast<int>(n > 64 ? 64 : n);
}

/// Runs fn(i) for i in [0, n). Each index writes only its own preassigned
/// slot, so the result is identical at every worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int workers = worker_count();
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / static_cast<std::size_t>(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace ionmem
