#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gfacs {

/// Worker cap: GFACS_THREADS if set (clamped to [1, 256]), else the hardware
/// concurrency. Results never depend on this value; only wall time does.
inline int worker_count() {
    if (const char* env = std::getenv("GFACS_THREADS")) {
        int v = std::atoi(env);
        if (v < 1) v = 1;
        if (v > 256) v = 256;
        return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n). Each index must be self-contained (own RNG
/// stream, own output slot); the dispatch order is unspecified, so any
/// reduction has to happen afterwards in index order.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    if (n <= 0) return;
    int workers = worker_count();
    if (workers > n) workers = n;
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gfacs
