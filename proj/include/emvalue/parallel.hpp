#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace emvalue {

namespace detail {

inline std::atomic<unsigned>& thread_override() {
    static std::atomic<unsigned> value{0};
    return value;
}

inline bool& inside_parallel_region() {
    thread_local bool flag = false;
    return flag;
}

}  // namespace detail

/// Worker count: set_thread_count() if called, else EMVALUE_THREADS, else all cores.
inline unsigned thread_count() {
    if (const unsigned forced = detail::thread_override().load(); forced != 0) {
        return forced;
    }
    if (const char* env = std::getenv("EMVALUE_THREADS"); env != nullptr && *env != '\0') {
        try {
            const long requested = std::stol(env);
            if (requested >= 1) {
                return static_cast<unsigned>(requested);
            }
        } catch (const std::exception&) {
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

/// 0 restores the default.
inline void set_thread_count(unsigned count) { detail::thread_override().store(count); }

/// Runs body(begin, end) over contiguous chunks of [0, count). Results must be
/// written to per-index slots; chunking never affects what is computed, only
/// who computes it. Nested calls run serially on the calling thread.
template <typename Body>
void parallel_for_chunks(std::size_t count, Body&& body) {
    if (count == 0) {
        return;
    }
    const std::size_t workers = std::min<std::size_t>(thread_count(), count);
    if (workers <= 1 || detail::inside_parallel_region()) {
        body(std::size_t{0}, count);
        return;
    }

    // Small chunks handed out dynamically keep uneven work balanced.
    const std::size_t chunk = std::max<std::size_t>(1, count / (workers * 8));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        detail::inside_parallel_region() = true;
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= count) {
                break;
            }
            try {
                body(begin, std::min(count, begin + chunk));
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(count);
            }
        }
        detail::inside_parallel_region() = false;
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
    parallel_for_chunks(count, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            body(i);
        }
    });
}

}  // namespace emvalue
