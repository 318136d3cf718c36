#include "flex/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace flex {

namespace {
std::atomic<int> g_max_threads{0};

// chunk count is fixed so that per-chunk reductions merge identically
// regardless of how many workers execute them
constexpr int kChunks = 16;

// nested regions run serially inside their worker thread
thread_local bool tl_in_parallel = false;
} // namespace

int max_threads() {
    int v = g_max_threads.load(std::memory_order_relaxed);
    if (v > 0) return v;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_max_threads(int n) { g_max_threads.store(n, std::memory_order_relaxed); }

void parallel_chunks(int n, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    const int threads = std::min(max_threads(), n);
    if (threads <= 1 || tl_in_parallel) {
        fn(0, n);
        return;
    }
    const int chunks = std::min(kChunks, n);
    const int step = (n + chunks - 1) / chunks;
    std::atomic<int> next{0};
    auto worker = [&] {
        tl_in_parallel = true;
        for (;;) {
            int c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) break;
            const int lo = c * step;
            const int hi = std::min(n, lo + step);
            if (lo < hi) fn(lo, hi);
        }
        tl_in_parallel = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    parallel_chunks(n, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) fn(i);
    });
}

} // namespace flex
