#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fmprune {

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// printf-style "%.<digits>g"; NaN prints as "nan".
std::string format_sig(double value, int digits = 9);

// Fixed-point with one decimal, as used in reduction reports.
std::string format_pct(double value);

// Runs body(i) for i in [0, n) on up to `threads` workers with a static
// round-robin partition. Every index is visited exactly once, so results are
// schedule independent as long as body(i) only writes state owned by i.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
}

}  // namespace fmprune
