#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qmcsim {

// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
// Blocks are handed out by an atomic-free striding scheme and results must
// be written only into per-block slots, so the outcome is identical for
// any thread count.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block_size, int n_threads, Fn fn) {
    if (block_size == 0) block_size = 1;
    const std::size_t n_blocks = (n + block_size - 1) / block_size;
    if (n_threads <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        }
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), n_blocks);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([=]() {
            for (std::size_t b = w; b < n_blocks; b += workers) {
                fn(b, b * block_size, std::min(n, (b + 1) * block_size));
            }
        });
    }
    for (auto& t : threads) t.join();
}

}  // namespace qmcsim
