#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace adir {

// Worker count: ADIR_WORKERS env var if set, else hardware concurrency.
inline int default_worker_count() {
    if (const char* env = std::getenv("ADIR_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs f(i) for i in [0, n). Each call must write only to its own output
// slot, so results are identical for any worker count.
template <class F>
void parallel_for(int n, F&& f, int workers = -1) {
    if (workers < 0) workers = default_worker_count();
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    auto run = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) break;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    int spawn = std::min(workers, n);
    pool.reserve(spawn - 1);
    for (int w = 1; w < spawn; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

} // namespace adir
