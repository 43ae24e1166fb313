#pragma once

// Minimum-norm point of a polyhedron, min ½‖θ‖² s.t. Aθ ≤ u, by ADMM
// operator splitting on (θ, z = Aθ) with z projected onto {z ≤ u}.
//
// Rows are equilibrated to unit ∞-norm first. Because the Hessian is the
// identity, the θ-update only needs the d×d matrix (1+σ)I + ρĀᵀĀ, which is
// factorized once per ρ value; each iteration is two passes over the rows.
//
// Stages: (1) eps_abs/eps_rel, (2) continue from the stage-1 iterate with
// fallback_eps, (3) if primal infeasibility is detected or both stages run out
// of iterations, minimize ½‖θ‖² + ρ_pen Σ max(0, aᵢᵀθ − uᵢ)² by semismooth
// Newton.

#include "ibcb/linalg.hpp"

#include <span>
#include <string_view>

namespace ibcb {

struct QpSettings {
    double eps_abs = 8e-2;
    double eps_rel = 8e-2;
    double fallback_eps = 8e-1;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double infeasibility_tol = 1e-4;
    double relaxation = 1.6;
    bool adaptive_rho = true;
    int check_every = 25;
    double penalty_weight = 10.0;

    void validate() const;
};

enum class QpStatus { Solved, SolvedLowAccuracy, PenaltyFallback, Failed };

std::string_view to_string(QpStatus status);
QpStatus qp_status_from_string(std::string_view name);

struct QpSolution {
    Vec theta_hat;
    QpStatus status = QpStatus::Failed;
    int iterations = 0;
    /// max(0, maxᵢ aᵢᵀθ − uᵢ) on the original rows.
    double max_violation = 0.0;
    double objective = 0.0;
    /// Nonnegative multiplier estimates for the original rows.
    Vec duals;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// Set when stage 1 or 2 saw a primal infeasibility certificate.
    bool infeasibility_detected = false;
};

QpSolution solve_minnorm(RowsView a, std::span<const double> u, const QpSettings& settings = {});

struct KktReport {
    double max_violation = 0.0;
    /// ‖θ + Aᵀμ‖∞ with μ = max(duals, 0): stationarity of ½‖θ‖² + μᵀ(Aθ − u).
    double stationarity = 0.0;
    /// maxᵢ |μᵢ (aᵢᵀθ − uᵢ)|.
    double complementarity = 0.0;
    double min_multiplier = 0.0;
};

KktReport check_kkt(RowsView a, std::span<const double> u, const QpSolution& sol);

}  // namespace ibcb
