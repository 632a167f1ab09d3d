#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

// Internal fork-join helper for simulation loops.  Not installed.

namespace pmatch::simulate::detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(run_index, worker_index) for every run in [0, n_runs),
// splitting the range into one contiguous slice per worker.  Worker w
// only ever passes worker_index == w, so per-worker accumulator slots
// need no locking.  The first exception thrown by any worker is
// rethrown on the calling thread after all workers join.
template <typename Body>
void for_each_run(std::int64_t n_runs, int workers, Body&& body) {
    workers = static_cast<int>(
        std::clamp<std::int64_t>(workers, 1, std::max<std::int64_t>(n_runs, 1)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < n_runs; ++i) body(i, 0);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::int64_t chunk = (n_runs + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = static_cast<std::int64_t>(w) * chunk;
        const std::int64_t hi = std::min(n_runs, lo + chunk);
        pool.emplace_back([&body, &errors, lo, hi, w] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) body(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace pmatch::simulate::detail
