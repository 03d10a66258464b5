// Copyright 2026 The polsfp Authors.
// Licensed under the Apache License, Version 2.0 (see LICENSE).

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <numeric>
#include <thread>
#include <vector>

namespace sfp {

namespace detail {
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}
}  // namespace detail

/// Caps the worker count used by every data-parallel loop. 0 means
/// "use the hardware concurrency".
inline void set_max_threads(int n) { detail::thread_cap().store(std::max(0, n)); }

inline int max_threads() {
    int cap = detail::thread_cap().load();
    if (cap > 0) return cap;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(row) for every row in [0, rows). Rows are split into
/// contiguous blocks, one per worker; each row is visited exactly once.
template <class Body>
void parallel_rows(int rows, Body&& body) {
    const int workers = std::min(max_threads(), std::max(rows, 1));
    if (workers <= 1 || rows < 2) {
        for (int r = 0; r < rows; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(rows) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(rows) * (w + 1) / workers);
        pool.emplace_back([&, begin, end, w] {
            try {
                for (int r = begin; r < end; ++r) body(r);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Sum of row_value(row) over all rows. Partial sums are kept per row and
/// added in row order, so the result does not depend on the thread count.
template <class RowValue>
double parallel_row_sum(int rows, RowValue&& row_value) {
    std::vector<double> partial(static_cast<std::size_t>(std::max(rows, 0)), 0.0);
    parallel_rows(rows, [&](int r) { partial[static_cast<std::size_t>(r)] = row_value(r); });
    return std::accumulate(partial.begin(), partial.end(), 0.0);
}

}  // namespace sfp
