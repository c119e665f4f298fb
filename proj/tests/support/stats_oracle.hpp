// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

// Brute-force sort-and-average reference for ErrorStats.

#pragma once

#include <wbpref/evalkit.hpp>

#include <cmath>
#include <vector>

namespace wbpref::testing {

/// Insertion sort, then every statistic from its definition. Sums are taken
/// relative to the minimum in ascending order, which makes a constant list
/// average exactly and fixes the rounding sequence.
inline ErrorStats stats_oracle(std::vector<double> x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        for (std::size_t j = i; j > 0 && x[j - 1] > x[j]; --j) std::swap(x[j - 1], x[j]);
    const std::size_t n = x.size();
    auto mean_of = [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += x[i] - x[0];
        return x[0] + s / static_cast<double>(e - b);
    };
    auto quant = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= n) return x[n - 1];
        return x[lo] + (pos - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
    };
    auto k_of = [&](double q) {
        long long k = std::llround(q * static_cast<double>(n));
        if (k < 1) k = 1;
        if (k > static_cast<long long>(n)) k = static_cast<long long>(n);
        return static_cast<std::size_t>(k);
    };
    ErrorStats s;
    s.n = n;
    s.mean = mean_of(0, n);
    s.median = quant(0.5);
    const double q1 = quant(0.25), q3 = quant(0.75);
    s.trimean = s.median + ((q1 - s.median) + (q3 - s.median)) / 4.0;
    s.best25_mean = mean_of(0, k_of(0.25));
    s.worst25_mean = mean_of(n - k_of(0.25), n);
    s.worst5_mean = mean_of(n - k_of(0.05), n);
    s.max = x[n - 1];
    return s;
}

/// Same statistics in long double with plain sums, for a tolerance check.
inline std::vector<long double> stats_wide(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    auto mean_of = [&](std::size_t b, std::size_t e) {
        long double s = 0;
        for (std::size_t i = b; i < e; ++i) s += x[i];
        return s / static_cast<long double>(e - b);
    };
    auto quant = [&](long double q) {
        const long double pos = q * static_cast<long double>(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= n) return static_cast<long double>(x[n - 1]);
        return x[lo] + (pos - static_cast<long double>(lo)) * (static_cast<long double>(x[lo + 1]) - x[lo]);
    };
    auto k_of = [&](double q) {
        return static_cast<std::size_t>(std::clamp<long long>(std::llround(q * static_cast<double>(n)), 1, static_cast<long long>(n)));
    };
    const long double med = quant(0.5);
    return {mean_of(0, n), med, (quant(0.25) + 2 * med + quant(0.75)) / 4, mean_of(0, k_of(0.25)),
            mean_of(n - k_of(0.25), n), mean_of(n - k_of(0.05), n), static_cast<long double>(x[n - 1])};
}

inline bool stats_equal(const ErrorStats& a, const ErrorStats& b) {
    return a.n == b.n && a.mean == b.mean && a.median == b.median && a.trimean == b.trimean &&
           a.best25_mean == b.best25_mean && a.worst25_mean == b.worst25_mean && a.worst5_mean == b.worst5_mean &&
           a.max == b.max;
}

inline bool stats_close(const ErrorStats& a, const std::vector<long double>& w, double tol) {
    const double v[] = {a.mean, a.median, a.trimean, a.best25_mean, a.worst25_mean, a.worst5_mean, a.max};
    for (std::size_t i = 0; i < 7; ++i)
        if (std::abs(static_cast<long double>(v[i]) - w[i]) > tol * std::max<long double>(1, std::abs(w[i]))) return false;
    return true;
}

inline bool chain_holds(const ErrorStats& s) {
    return s.best25_mean <= s.mean && s.mean <= s.worst25_mean && s.worst25_mean <= s.worst5_mean &&
           s.worst5_mean <= s.max && s.best25_mean <= s.median && s.median <= s.worst25_mean;
}

}  // namespace wbpref::testing
