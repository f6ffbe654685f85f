#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wmsim {

/// Number of workers used when a caller passes threads = 0.
inline unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs body(begin, end) over [0, n) in fixed-size chunks. Chunk boundaries
/// depend only on n and chunk, never on the worker count, so callers that
/// reduce per-chunk results in chunk order get bitwise identical output for
/// any number of threads.
template <typename Body>
void parallel_chunks(std::size_t n, std::size_t chunk, unsigned threads, Body &&body) {
    if (n == 0) {
        return;
    }
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    if (threads == 0) {
        threads = default_thread_count();
    }
    const auto workers = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            body(c, c * chunk, std::min(n, (c + 1) * chunk));
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) {
                return;
            }
            try {
                body(c, c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(chunks);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / std::max<std::size_t>(chunk, 1); }

} // namespace wmsim
