#include "ibcb/kernels.hpp"

#include "ibcb/error.hpp"

#include <algorithm>
#include <omp.h>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ibcb::kernels {

namespace {

void check_rows(RowsView a, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(a.rows()) != n) throw DimensionError(std::string(what) + ": row count mismatch");
}

std::int64_t block_count(std::int64_t rows) { return (rows + kReduceBlock - 1) / kReduceBlock; }

// Log-likelihood contribution of one step.
double step_log_likelihood(RowsView c, std::int64_t first_row, int m, int chosen, const Vec& theta,
                           double beta) {
    double best = -std::numeric_limits<double>::infinity();
    double scores[64] = {};
    std::vector<double> heap;
    double* sc = scores;
    if (m > 64) {
        heap.resize(static_cast<std::size_t>(m));
        sc = heap.data();
    }
    for (int j = 0; j < m; ++j) {
        sc[j] = beta * c.row(first_row + j).dot(theta);
        best = std::max(best, sc[j]);
    }
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += std::exp(sc[j] - best);
    return sc[chosen] - best - std::log(acc);
}

void check_likelihood_args(RowsView candidates, std::span<const std::int32_t> chosen, int n_candidates,
                           const Vec& theta) {
    if (n_candidates <= 0) throw DimensionError("softmax likelihood: no candidates");
    if (candidates.rows() != static_cast<std::int64_t>(chosen.size()) * n_candidates) {
        throw DimensionError("softmax likelihood: candidate rows do not match step count");
    }
    if (candidates.cols() != theta.size()) throw DimensionError("softmax likelihood: dimension mismatch");
    for (const std::int32_t c : chosen) {
        if (c < 0 || c >= n_candidates) throw DimensionError("softmax likelihood: chosen index out of range");
    }
}

}  // namespace

void mat_vec(RowsView a, const Vec& x, std::span<double> y) {
    check_rows(a, y.size(), "mat_vec");
    const std::int64_t n = a.rows();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = a.row(i).dot(x);
}

void mat_t_vec(RowsView a, std::span<const double> y, Vec& out) {
    check_rows(a, y.size(), "mat_t_vec");
    const std::int64_t n = a.rows();
    const std::int64_t d = a.cols();
    const std::int64_t blocks = block_count(n);
    Mat partial = Mat::Zero(d, std::max<std::int64_t>(blocks, 1));
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t lo = blk * kReduceBlock;
        const std::int64_t hi = std::min(n, lo + kReduceBlock);
        auto col = partial.col(blk);
        for (std::int64_t i = lo; i < hi; ++i) col += y[static_cast<std::size_t>(i)] * a.row(i).transpose();
    }
    out = Vec::Zero(d);
    for (std::int64_t blk = 0; blk < blocks; ++blk) out += partial.col(blk);
}

Mat gram(RowsView a) {
    const std::int64_t n = a.rows();
    const std::int64_t d = a.cols();
    const std::int64_t blocks = block_count(n);
    std::vector<Mat> partial(static_cast<std::size_t>(blocks), Mat::Zero(d, d));
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t lo = blk * kReduceBlock;
        const std::int64_t hi = std::min(n, lo + kReduceBlock);
        partial[static_cast<std::size_t>(blk)].noalias() =
            a.middleRows(lo, hi - lo).transpose() * a.middleRows(lo, hi - lo);
    }
    Mat out = Mat::Zero(d, d);
    for (const auto& p : partial) out += p;
    return out;
}

namespace {

// Log-likelihood of steps [lo, hi) using one blocked mat-vec and a vectorized exp.
double block_log_likelihood(RowsView candidates, std::span<const std::int32_t> chosen, std::int64_t m,
                            const Vec& theta, double beta, std::int64_t lo, std::int64_t hi) {
    // Reused across calls; a fresh allocation per block costs more than the block.
    thread_local Vec scores;
    const std::int64_t n_steps = hi - lo;
    scores.resize(n_steps * m);
    scores.noalias() = beta * (candidates.middleRows(lo * m, n_steps * m) * theta);
    double* sc = scores.data();
    // Shift each step by its own maximum, then exponentiate the whole block at once.
    double acc = 0.0;
    for (std::int64_t t = 0; t < n_steps; ++t) {
        double* row = sc + t * m;
        double best = row[0];
        for (std::int64_t j = 1; j < m; ++j) best = std::max(best, row[j]);
        acc += row[chosen[static_cast<std::size_t>(lo + t)]] - best;
        for (std::int64_t j = 0; j < m; ++j) row[j] -= best;
    }
    scores.array() = scores.array().exp();
    for (std::int64_t t = 0; t < n_steps; ++t) {
        const double* row = sc + t * m;
        double sum = 0.0;
        for (std::int64_t j = 0; j < m; ++j) sum += row[j];
        acc -= std::log(sum);
    }
    return acc;
}

}  // namespace

double softmax_log_likelihood(RowsView candidates, std::span<const std::int32_t> chosen, int n_candidates,
                              const Vec& theta, double beta) {
    return softmax_log_likelihood_bounded(candidates, chosen, n_candidates, theta, beta,
                                          -std::numeric_limits<double>::infinity());
}

double softmax_log_likelihood_bounded(RowsView candidates, std::span<const std::int32_t> chosen, int n_candidates,
                                      const Vec& theta, double beta, double floor) {
    check_likelihood_args(candidates, chosen, n_candidates, theta);
    const std::int64_t steps = static_cast<std::int64_t>(chosen.size());
    const std::int64_t blocks = block_count(steps);
    const std::int64_t m = n_candidates;
    const std::int64_t group = std::max(1, omp_get_max_threads());
    std::vector<double> partial(static_cast<std::size_t>(group), 0.0);
    double total = 0.0;
    for (std::int64_t first = 0; first < blocks; first += group) {
        const std::int64_t last = std::min(blocks, first + group);
#pragma omp parallel for schedule(static) if (last - first > 1)
        for (std::int64_t blk = first; blk < last; ++blk) {
            const std::int64_t lo = blk * kReduceBlock;
            const std::int64_t hi = std::min(steps, lo + kReduceBlock);
            partial[static_cast<std::size_t>(blk - first)] =
                block_log_likelihood(candidates, chosen, m, theta, beta, lo, hi);
        }
        for (std::int64_t blk = first; blk < last; ++blk) total += partial[static_cast<std::size_t>(blk - first)];
        if (total < floor) return total;
    }
    return total;
}

namespace serial {

void mat_vec(RowsView a, const Vec& x, std::span<double> y) {
    check_rows(a, y.size(), "mat_vec");
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x(k);
        y[static_cast<std::size_t>(i)] = acc;
    }
}

void mat_t_vec(RowsView a, std::span<const double> y, Vec& out) {
    check_rows(a, y.size(), "mat_t_vec");
    out = Vec::Zero(a.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        for (std::int64_t k = 0; k < a.cols(); ++k) out(k) += y[static_cast<std::size_t>(i)] * a(i, k);
    }
}

Mat gram(RowsView a) {
    Mat out = Mat::Zero(a.cols(), a.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        for (std::int64_t r = 0; r < a.cols(); ++r) {
            for (std::int64_t c = 0; c < a.cols(); ++c) out(r, c) += a(i, r) * a(i, c);
        }
    }
    return out;
}

double softmax_log_likelihood(RowsView candidates, std::span<const std::int32_t> chosen, int n_candidates,
                              const Vec& theta, double beta) {
    check_likelihood_args(candidates, chosen, n_candidates, theta);
    double total = 0.0;
    for (std::size_t t = 0; t < chosen.size(); ++t) {
        total += step_log_likelihood(candidates, static_cast<std::int64_t>(t) * n_candidates, n_candidates,
                                     chosen[t], theta, beta);
    }
    return total;
}

}  // namespace serial

}  // namespace ibcb::kernels

namespace ibcb::kernels {

Mat weighted_gram(RowsView a, std::span<const double> weights) {
    check_rows(a, weights.size(), "weighted_gram");
    const std::int64_t n = a.rows();
    const std::int64_t d = a.cols();
    const std::int64_t blocks = block_count(n);
    std::vector<Mat> partial(static_cast<std::size_t>(blocks), Mat::Zero(d, d));
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t lo = blk * kReduceBlock;
        const std::int64_t hi = std::min(n, lo + kReduceBlock);
        Mat& acc = partial[static_cast<std::size_t>(blk)];
        for (std::int64_t i = lo; i < hi; ++i) {
            const double w = weights[static_cast<std::size_t>(i)];
            if (w != 0.0) acc.noalias() += w * a.row(i).transpose() * a.row(i);
        }
    }
    Mat out = Mat::Zero(d, d);
    for (const auto& p : partial) out += p;
    return out;
}

namespace serial {

Mat weighted_gram(RowsView a, std::span<const double> weights) {
    check_rows(a, weights.size(), "weighted_gram");
    Mat out = Mat::Zero(a.cols(), a.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i) {
        for (std::int64_t r = 0; r < a.cols(); ++r) {
            for (std::int64_t c = 0; c < a.cols(); ++c) out(r, c) += weights[static_cast<std::size_t>(i)] * a(i, r) * a(i, c);
        }
    }
    return out;
}

}  // namespace serial

}  // namespace ibcb::kernels
