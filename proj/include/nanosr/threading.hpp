#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace nanosr {

// Worker cap: NANOSR_THREADS env var, defaulting to the hardware count.
inline int max_threads() {
    static const int cached = [] {
        if (const char* env = std::getenv("NANOSR_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? static_cast<int>(hw) : 1;
    }();
    return cached;
}

// Runs fn(i) for i in [0, count). Chunks are contiguous and every index is
// visited exactly once, so kernels that write disjoint outputs per index
// stay bitwise deterministic for any thread count.
inline void parallel_for(int count, const std::function<void(int)>& fn) {
    int threads = std::min(max_threads(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int lo = t * chunk;
        int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace nanosr
