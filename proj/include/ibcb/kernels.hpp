#pragma once

// Data-parallel inner loops shared by the QP solver, the constraint builder
// and the Bayesian baseline. Each kernel has an OpenMP implementation and a
// straight serial reference in kernels::serial used by the tests and the
// benchmark.
//
// Reductions are split into fixed blocks of kReduceBlock rows whose partial
// sums are combined in block order. The result therefore depends only on the
// input, never on the thread count or schedule.

#include "ibcb/linalg.hpp"

#include <cstdint>
#include <span>

namespace ibcb::kernels {

inline constexpr std::int64_t kReduceBlock = 4096;

/// y = A x. y must have one entry per row of A.
void mat_vec(RowsView a, const Vec& x, std::span<double> y);
/// out = Aᵀ y.
void mat_t_vec(RowsView a, std::span<const double> y, Vec& out);
/// AᵀA.
Mat gram(RowsView a);
/// Aᵀ diag(w) A.
Mat weighted_gram(RowsView a, std::span<const double> weights);

/// Σ_t [β⟨θ, s_{t,chosen_t}⟩ − log Σ_m exp(β⟨θ, s_{t,m}⟩)] over steps laid out
/// as consecutive blocks of n_candidates rows.
double softmax_log_likelihood(RowsView candidates, std::span<const std::int32_t> chosen,
                              int n_candidates, const Vec& theta, double beta);

/// Same sum, evaluated block by block in order. Every step term is ≤ 0, so
/// once the running total drops below `floor` the exact value cannot reach it
/// and the partial total (some value < floor) is returned. When the result is
/// ≥ floor it equals softmax_log_likelihood bit for bit.
double softmax_log_likelihood_bounded(RowsView candidates, std::span<const std::int32_t> chosen,
                                      int n_candidates, const Vec& theta, double beta, double floor);

namespace serial {

void mat_vec(RowsView a, const Vec& x, std::span<double> y);
void mat_t_vec(RowsView a, std::span<const double> y, Vec& out);
Mat gram(RowsView a);
Mat weighted_gram(RowsView a, std::span<const double> weights);
double softmax_log_likelihood(RowsView candidates, std::span<const std::int32_t> chosen,
                              int n_candidates, const Vec& theta, double beta);

}  // namespace serial

}  // namespace ibcb::kernels
