#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace fbsde {

/// Worker count used when a caller passes 0.
inline unsigned default_workers() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/**
 * Runs fn(i) for i in [0, n) on `workers` threads using contiguous chunks.
 * Callers write results into per-index slots, so outputs never depend on the
 * worker count. The first exception thrown by any worker is rethrown.
 */
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = default_workers();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    threads.clear();
    if (error) std::rethrow_exception(error);
}

/// Pairwise summation; the result depends only on the input order.
inline double pairwise_sum(std::span<const double> values) noexcept {
    constexpr std::size_t kLeaf = 64;
    if (values.size() <= kLeaf) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct SampleMoments {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

/// Two-pass mean and sample standard deviation (n-1 denominator).
inline SampleMoments sample_moments(std::span<const double> values) {
    SampleMoments m;
    m.n = values.size();
    if (m.n == 0) return m;
    m.mean = pairwise_sum(values) / static_cast<double>(m.n);
    if (m.n < 2) return m;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - m.mean;
        sq[i] = d * d;
    }
    m.stddev = std::sqrt(pairwise_sum(sq) / static_cast<double>(m.n - 1));
    return m;
}

}  // namespace fbsde
