#pragma once

// Worker cap and a blocking parallel loop. Results are written by index, so
// the outcome never depends on the schedule.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace indefshoot {

namespace detail {
inline std::atomic<unsigned>& thread_cap_storage() {
    static std::atomic<unsigned> cap{0};
    return cap;
}
} // namespace detail

/// 0 restores the default (INDEFSHOOT_THREADS, else hardware concurrency).
inline void set_thread_cap(unsigned n) { detail::thread_cap_storage() = n; }

inline unsigned thread_cap() {
    if (unsigned n = detail::thread_cap_storage().load(); n > 0) return n;
    if (const char* env = std::getenv("INDEFSHOOT_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0,n). The first exception thrown by a worker is
/// rethrown after all workers have joined.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = thread_cap();
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!err) err = std::current_exception();
                next = n;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace indefshoot
