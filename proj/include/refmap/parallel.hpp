#pragma once
// Minimal fork-join loop. Work items must write only to their own slot so the
// result never depends on the thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace refmap {

/// 0 means "hardware concurrency".
void set_thread_count(unsigned n);
unsigned thread_count();

namespace detail {
/// Set while a thread is executing a parallel_for body; nested loops then run serially.
inline thread_local bool in_parallel_region = false;
}  // namespace detail

template <class F>
void parallel_for(std::size_t n, F&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        detail::in_parallel_region = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
        detail::in_parallel_region = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace refmap
