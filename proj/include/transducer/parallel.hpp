#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace transducer {

// Process-wide worker count for parallel loops. 0 restores the default
// (hardware concurrency). Results of every parallel loop in this library are
// bit-identical for any worker count: work is split into fixed-size chunks
// and partial results are combined in a fixed tree order.
void set_worker_count(int n);
int worker_count();

// Runs fn(i) for i in [0, n) on the worker pool. fn must not touch shared
// mutable state except through distinct i. Exceptions from workers are
// rethrown on the caller thread (first by index order).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic chunked reduction: splits [0, n) into chunks of `chunk`
// consecutive indices, evaluates accumulate(first, last, partial&) per chunk
// (possibly on different workers), then combines the per-chunk partials with
// combine() by pairwise tree reduction in chunk order. The result is
// bit-stable across thread counts because chunk boundaries and the combine
// tree never depend on scheduling.
template <class T>
T chunked_reduce(std::size_t n, std::size_t chunk, const T& zero,
                 const std::function<void(std::size_t, std::size_t, T&)>& accumulate,
                 const std::function<T(const T&, const T&)>& combine) {
    if (n == 0) return zero;
    if (chunk == 0) chunk = 1;
    const std::size_t m = (n + chunk - 1) / chunk;
    std::vector<T> parts(m, zero);
    parallel_for(m, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        accumulate(lo, hi, parts[c]);
    });
    // pairwise tree: combine neighbours until one value remains
    std::size_t count = m;
    while (count > 1) {
        const std::size_t half = count / 2;
        for (std::size_t i = 0; i < half; ++i)
            parts[i] = combine(parts[2 * i], parts[2 * i + 1]);
        if (count % 2 == 1) parts[half] = parts[count - 1];
        count = half + count % 2;
    }
    return parts[0];
}

}  // namespace transducer
