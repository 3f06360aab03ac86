#pragma once
#include <functional>
#include <thread>
#include <vector>

namespace adsched {

// Runs fn(begin, end) over a fixed contiguous partition of [0, n).
// The partition depends only on (n, threads), never on scheduling, so any
// computation that writes disjoint slots is deterministic under concurrency.
inline void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
    if (threads <= 1 || n <= 1) {
        fn(0, n);
        return;
    }
    int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int lo = w * chunk;
        int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(fn, lo, hi);
    }
    for (auto& t : pool) t.join();
}

inline int default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

}  // namespace adsched
