#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cpslab {

// Global cap used by the CLI --threads flag. 0 means hardware concurrency.
inline std::size_t& thread_cap() {
    static std::size_t cap = 0;
    return cap;
}

inline std::size_t effective_threads(std::size_t n_items) {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    std::size_t cap = thread_cap() == 0 ? hw : thread_cap();
    return std::max<std::size_t>(1, std::min(cap, n_items));
}

// Index-parallel loop. Each index is processed exactly once; results must be
// written to pre-allocated per-index slots so the outcome is independent of
// the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t n_threads = effective_threads(n);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&] {
            constexpr std::size_t chunk = 16;
            for (;;) {
                const std::size_t begin = next.fetch_add(chunk);
                if (begin >= n) return;
                const std::size_t end = std::min(n, begin + chunk);
                try {
                    for (std::size_t i = begin; i < end; ++i) fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace cpslab
