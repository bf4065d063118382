// Shared error types, small statistics helpers and a deterministic
// parallel-for used across the library.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace garchseg {

// Raised on malformed input files; maps to exit code 2 in the CLI.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised on numeric failures (explosions, singular factors); exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised on invalid configuration or preconditions; exit code 4.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double mean(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / static_cast<double>(x.size());
}

// Mean-centred variance with the 1/n convention.
inline double population_variance(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        const double d = v - m;
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

// Pearson correlation; returns 0 when either input is constant.
inline double sample_correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n != b.size() || n < 2) {
        throw ConfigError("sample_correlation: need two vectors of equal length >= 2");
    }
    const double ma = mean(a);
    const double mb = mean(b);
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double da = a[t] - ma;
        const double db = b[t] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

// 1-based order-statistic index ceil(prob * n) for a rational convention;
// guarded against representation error in prob (0.05 * 20 must give 1).
inline std::size_t order_statistic_index(double prob, std::size_t n) {
    const double raw = std::ceil(prob * static_cast<double>(n) - 1e-9);
    const auto k = static_cast<std::size_t>(std::max(raw, 1.0));
    return std::min(k, n);
}

// k-th ascending order statistic, k is 1-based.
inline double ascending_order_statistic(std::vector<double> values, std::size_t k) {
    if (values.empty() || k < 1 || k > values.size()) {
        throw ConfigError("ascending_order_statistic: index out of range");
    }
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     values.end());
    return values[k - 1];
}

inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw ConfigError("median of empty range");
    }
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    double hi = values[mid];
    if (n % 2 == 1) {
        return hi;
    }
    double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline unsigned effective_threads(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs body(i) for i in [0, count). Work items are independent; results must be
// written to preallocated, per-index slots so the outcome does not depend on
// the schedule or the thread count.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
    if (count == 0) {
        return;
    }
    unsigned workers = std::min<std::size_t>(effective_threads(threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(run);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace garchseg
