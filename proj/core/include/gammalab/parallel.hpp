#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace gammalab {

// Worker cap shared by every data-parallel loop. Results never depend on it:
// tasks own disjoint RNG streams and are reduced in index order.
inline std::atomic<int>& max_threads_setting() {
    static std::atomic<int> value{0}; // 0 = hardware concurrency
    return value;
}

inline void set_max_threads(int n) { max_threads_setting().store(n); }

inline int effective_threads(int tasks) {
    int cap = max_threads_setting().load();
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0) cap = 1;
    return std::max(1, std::min(cap, tasks));
}

// Runs fn(0..tasks-1), each index exactly once. Exceptions are rethrown on
// the calling thread.
inline void parallel_for(int tasks, const std::function<void(int)>& fn) {
    const int workers = effective_threads(tasks);
    if (workers == 1) {
        for (int i = 0; i < tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= tasks || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

} // namespace gammalab
