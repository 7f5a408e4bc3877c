#pragma once

#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace shiftlab {

/// Row-major matrix of per-trajectory observables.  Row i is written by
/// whichever worker simulates trajectory i; statistics are then reduced
/// over rows in ascending order, so results are bit-identical for any
/// worker count.
struct ObservableMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Runs fn(i, row) for i in [0, n) over `jobs` workers (contiguous blocks).
template <class Fn>
ObservableMatrix ensemble_map(std::size_t n, std::size_t width, unsigned jobs, Fn&& fn) {
    ObservableMatrix m;
    m.rows = n;
    m.cols = width;
    m.data.assign(n * width, 0.0);
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i, m.row(i));
        return m;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&m, &fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i, m.row(i));
        });
    }
    for (auto& t : pool) t.join();
    return m;
}

/// Mean of column j, accumulated in row order.
double column_mean(const ObservableMatrix& m, std::size_t j);

/// Sample covariance of columns (j, l), two-pass, row order.
double column_cov(const ObservableMatrix& m, std::size_t j, std::size_t l);

}  // namespace shiftlab
