// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lorentz {

/// Resolves the worker count: explicit request > LORENTZ_THREADS > hardware.
inline int resolve_thread_count(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LORENTZ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Fixed work-block size for deterministic reductions. Items [b*B, (b+1)*B)
/// always form block b regardless of the worker count, each block is reduced
/// sequentially by exactly one worker, and callers combine the block results
/// in index order — so the floating-point reduction tree is invariant.
inline constexpr std::uint64_t kBlockSize = 1024;

inline std::uint64_t block_count(std::uint64_t n_items, std::uint64_t block = kBlockSize) {
    return (n_items + block - 1) / block;
}

/// Runs fn(block_index, begin, end) over all blocks of [0, n_items) using up
/// to n_threads workers, storing each block's result at its block index.
/// The output vector order is independent of scheduling.
template <class Result, class Fn>
std::vector<Result> parallel_blocks(std::uint64_t n_items, int n_threads, Fn&& fn,
                                    std::uint64_t block = kBlockSize) {
    const std::uint64_t nb = block_count(n_items, block);
    std::vector<Result> results(nb);
    if (nb == 0) return results;

    n_threads = resolve_thread_count(n_threads);
    if (n_threads <= 1 || nb == 1) {
        for (std::uint64_t b = 0; b < nb; ++b) {
            const std::uint64_t lo = b * block;
            const std::uint64_t hi = std::min(n_items, lo + block);
            results[b] = fn(b, lo, hi);
        }
        return results;
    }

    std::atomic<std::uint64_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= nb) return;
            const std::uint64_t lo = b * block;
            const std::uint64_t hi = std::min(n_items, lo + block);
            results[b] = fn(b, lo, hi);
        }
    };

    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(n_threads), nb));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace lorentz
