#include "ibcb/qpsolve.hpp"

#include "ibcb/error.hpp"
#include "ibcb/kernels.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <string>
#include <vector>

namespace ibcb {

void QpSettings::validate() const {
    if (!(eps_abs > 0 && eps_rel > 0 && fallback_eps > 0 && rho > 0 && sigma > 0 && infeasibility_tol > 0 &&
          penalty_weight > 0)) {
        throw Error("qp settings: tolerances and penalties must be positive");
    }
    if (max_iter < 1 || check_every < 1) throw Error("qp settings: iteration limits must be positive");
    if (fallback_eps < eps_abs) throw Error("qp settings: fallback_eps must be at least eps_abs");
    if (!(relaxation > 0 && relaxation < 2)) throw Error("qp settings: relaxation must lie in (0, 2)");
}

std::string_view to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Solved: return "solved";
        case QpStatus::SolvedLowAccuracy: return "solved_low_accuracy";
        case QpStatus::PenaltyFallback: return "penalty_fallback";
        case QpStatus::Failed: return "failed";
    }
    return "failed";
}

QpStatus qp_status_from_string(std::string_view name) {
    for (auto s : {QpStatus::Solved, QpStatus::SolvedLowAccuracy, QpStatus::PenaltyFallback, QpStatus::Failed}) {
        if (to_string(s) == name) return s;
    }
    throw Error("unknown qp status '" + std::string(name) + "'");
}

namespace {

double max_violation(RowsView a, std::span<const double> u, const Vec& theta) {
    std::vector<double> ax(u.size());
    kernels::mat_vec(a, theta, ax);
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, ax[i] - u[i]);
    return worst;
}

enum class AdmmOutcome { Converged, Infeasible, MaxIter };

// ADMM state on the row-equilibrated problem Āθ ≤ ū, Ā = DA, ū = Du.
class AdmmSolver {
public:
    AdmmSolver(RowsView a, std::span<const double> u, const QpSettings& s)
        : s_(s), n_(a.rows()), d_(a.cols()), rho_(s.rho) {
        scaled_.resize(n_, d_);
        row_scale_.resize(static_cast<std::size_t>(n_));
        u_scaled_.resize(static_cast<std::size_t>(n_));
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double norm = a.row(i).cwiseAbs().maxCoeff();
            const double scale = norm > 0.0 ? 1.0 / norm : 1.0;
            row_scale_[static_cast<std::size_t>(i)] = scale;
            scaled_.row(i) = scale * a.row(i);
            u_scaled_[static_cast<std::size_t>(i)] = scale * u[static_cast<std::size_t>(i)];
        }
        gram_ = kernels::gram(view());
        factorize();
        x_ = Vec::Zero(d_);
        z_.assign(static_cast<std::size_t>(n_), 0.0);
        for (std::size_t i = 0; i < z_.size(); ++i) z_[i] = std::min(0.0, u_scaled_[i]);
        y_.assign(static_cast<std::size_t>(n_), 0.0);
        ax_.assign(static_cast<std::size_t>(n_), 0.0);
        work_.assign(static_cast<std::size_t>(n_), 0.0);
        z_tilde_.assign(static_cast<std::size_t>(n_), 0.0);
    }

    AdmmOutcome run(double eps_abs, double eps_rel, int max_iter) {
        std::vector<double> y_prev(y_.size());
        for (int k = 1; k <= max_iter; ++k) {
            const bool check = k % s_.check_every == 0 || k == max_iter;
            if (check) y_prev = y_;
            step();
            ++iterations_;
            if (!check) continue;
            compute_residuals(eps_abs, eps_rel);
            if (converged_) return AdmmOutcome::Converged;
            if (infeasible(y_prev)) {
                infeasibility_detected_ = true;
                return AdmmOutcome::Infeasible;
            }
            if (s_.adaptive_rho) adapt_rho();
        }
        return AdmmOutcome::MaxIter;
    }

    const Vec& theta() const { return x_; }
    int iterations() const { return iterations_; }
    double primal_residual() const { return prim_res_; }
    double dual_residual() const { return dual_res_; }
    bool infeasibility_detected() const { return infeasibility_detected_; }

    Vec duals() const {
        Vec out(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            out(i) = std::max(0.0, y_[static_cast<std::size_t>(i)]) * row_scale_[static_cast<std::size_t>(i)];
        }
        return out;
    }

private:
    RowsView view() const { return RowsView(scaled_.data(), n_, d_); }

    void factorize() {
        Mat k = rho_ * gram_;
        k.diagonal().array() += 1.0 + s_.sigma;
        chol_.emplace(k);
    }

    void step() {
        const double alpha = s_.relaxation;
        for (std::size_t i = 0; i < work_.size(); ++i) work_[i] = rho_ * z_[i] - y_[i];
        Vec rhs;
        kernels::mat_t_vec(view(), work_, rhs);
        rhs += s_.sigma * x_;
        const Vec x_tilde = chol_->solve(rhs);
        kernels::mat_vec(view(), x_tilde, z_tilde_);
        x_ = alpha * x_tilde + (1.0 - alpha) * x_;
        const double inv_rho = 1.0 / rho_;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const double relaxed = alpha * z_tilde_[i] + (1.0 - alpha) * z_[i];
            ax_[i] = alpha * z_tilde_[i] + (1.0 - alpha) * ax_[i];
            const double z_new = std::min(relaxed + inv_rho * y_[i], u_scaled_[i]);
            y_[i] += rho_ * (relaxed - z_new);
            z_[i] = z_new;
        }
    }

    void compute_residuals(double eps_abs, double eps_rel) {
        // Ax is tracked through the relaxation recurrence; refresh it exactly here.
        kernels::mat_vec(view(), x_, ax_);
        double r_prim = 0.0, ax_norm = 0.0, z_norm = 0.0, viol = 0.0, u_norm = 0.0;
        double r_prim_s = 0.0, ax_norm_s = 0.0, z_norm_s = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            const double inv = 1.0 / row_scale_[i];
            const double diff = ax_[i] - z_[i];
            r_prim = std::max(r_prim, std::abs(diff) * inv);
            ax_norm = std::max(ax_norm, std::abs(ax_[i]) * inv);
            z_norm = std::max(z_norm, std::abs(z_[i]) * inv);
            viol = std::max(viol, (ax_[i] - u_scaled_[i]) * inv);
            u_norm = std::max(u_norm, std::abs(u_scaled_[i]) * inv);
            r_prim_s = std::max(r_prim_s, std::abs(diff));
            ax_norm_s = std::max(ax_norm_s, std::abs(ax_[i]));
            z_norm_s = std::max(z_norm_s, std::abs(z_[i]));
        }
        Vec aty;
        kernels::mat_t_vec(view(), y_, aty);
        const double r_dual = (x_ + aty).lpNorm<Eigen::Infinity>();
        const double x_norm = x_.lpNorm<Eigen::Infinity>();
        const double aty_norm = aty.lpNorm<Eigen::Infinity>();

        prim_res_ = r_prim;
        dual_res_ = r_dual;
        const double eps_prim = eps_abs + eps_rel * std::max(ax_norm, z_norm);
        const double eps_dual = eps_abs + eps_rel * std::max(x_norm, aty_norm);
        converged_ = r_prim <= eps_prim && r_dual <= eps_dual && viol <= eps_abs * (1.0 + u_norm);

        ratio_ = 1.0;
        const double prim_scale = std::max(ax_norm_s, z_norm_s);
        const double dual_scale = std::max(x_norm, aty_norm);
        if (prim_scale > 0 && dual_scale > 0 && r_dual > 0) {
            ratio_ = std::sqrt((r_prim_s / prim_scale) / (r_dual / dual_scale));
        }
    }

    bool infeasible(const std::vector<double>& y_prev) const {
        std::vector<double> dy(y_.size());
        double dy_norm = 0.0, neg = 0.0, support = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) {
            dy[i] = y_[i] - y_prev[i];
            // y lives on the scaled rows; multipliers of the original rows are Dᵢyᵢ.
            dy_norm = std::max(dy_norm, std::abs(dy[i]) * row_scale_[i]);
            neg = std::max(neg, -dy[i] * row_scale_[i]);
            support += u_scaled_[i] * std::max(dy[i], 0.0);
        }
        if (dy_norm <= 1e-300) return false;
        const double tol = s_.infeasibility_tol * dy_norm;
        if (neg > tol || !(support < -tol)) return false;
        Vec atdy;
        kernels::mat_t_vec(view(), dy, atdy);
        return atdy.lpNorm<Eigen::Infinity>() <= tol;
    }

    void adapt_rho() {
        if (!(ratio_ > 5.0 || ratio_ < 0.2) || !std::isfinite(ratio_)) return;
        rho_ = std::clamp(rho_ * ratio_, 1e-6, 1e6);
        factorize();
    }

    const QpSettings& s_;
    Eigen::Index n_;
    Eigen::Index d_;
    double rho_;
    RowMat scaled_;
    std::vector<double> row_scale_;
    std::vector<double> u_scaled_;
    Mat gram_;
    std::optional<Cholesky> chol_;
    Vec x_;
    std::vector<double> z_, y_, ax_, work_, z_tilde_;
    int iterations_ = 0;
    double prim_res_ = 0.0, dual_res_ = 0.0, ratio_ = 1.0;
    bool converged_ = false;
    bool infeasibility_detected_ = false;
};

struct PenaltyResult {
    Vec theta;
    Vec duals;
    int iterations = 0;
    bool converged = false;
};

double penalty_objective(const Vec& theta, std::span<const double> residual, double weight) {
    double pen = 0.0;
    for (double r : residual) {
        if (r > 0) pen += r * r;
    }
    return 0.5 * theta.squaredNorm() + weight * pen;
}

PenaltyResult solve_penalty(RowsView a, std::span<const double> u, const QpSettings& s, Vec start) {
    const std::size_t n = u.size();
    const double w = s.penalty_weight;
    PenaltyResult out;
    out.theta = std::move(start);
    std::vector<double> residual(n), active(n), trial(n);
    auto residuals_at = [&](const Vec& theta, std::vector<double>& r) {
        kernels::mat_vec(a, theta, r);
        for (std::size_t i = 0; i < n; ++i) r[i] -= u[i];
    };
    residuals_at(out.theta, residual);
    double f = penalty_objective(out.theta, residual, w);
    for (int it = 1; it <= s.max_iter; ++it) {
        out.iterations = it;
        for (std::size_t i = 0; i < n; ++i) active[i] = residual[i] > 0 ? residual[i] : 0.0;
        Vec grad;
        kernels::mat_t_vec(a, active, grad);
        grad = out.theta + 2.0 * w * grad;
        if (grad.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + out.theta.lpNorm<Eigen::Infinity>())) {
            out.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) active[i] = residual[i] > 0 ? 2.0 * w : 0.0;
        Mat hess = kernels::weighted_gram(a, active);
        hess.diagonal().array() += 1.0;
        const Vec dir = -Cholesky(hess).solve(grad);
        const double slope = grad.dot(dir);
        double t = 1.0;
        Vec next;
        double f_next = f;
        for (int ls = 0; ls < 60; ++ls) {
            next = out.theta + t * dir;
            residuals_at(next, trial);
            f_next = penalty_objective(next, trial, w);
            if (f_next <= f + 1e-4 * t * slope) break;
            t *= 0.5;
        }
        const double moved = (next - out.theta).lpNorm<Eigen::Infinity>();
        out.theta = next;
        residual.swap(trial);
        f = f_next;
        if (moved <= 1e-14 * (1.0 + out.theta.lpNorm<Eigen::Infinity>())) {
            out.converged = true;
            break;
        }
    }
    out.duals = Vec(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out.duals(static_cast<Eigen::Index>(i)) = 2.0 * w * std::max(0.0, residual[i]);
    return out;
}

void finalize(QpSolution& sol, RowsView a, std::span<const double> u) {
    sol.max_violation = std::max(0.0, max_violation(a, u, sol.theta_hat));
    sol.objective = 0.5 * sol.theta_hat.squaredNorm();
}

}  // namespace

QpSolution solve_minnorm(RowsView a, std::span<const double> u, const QpSettings& settings) {
    settings.validate();
    if (static_cast<std::size_t>(a.rows()) != u.size()) {
        throw DimensionError("solve_minnorm: " + std::to_string(a.rows()) + " rows but " + std::to_string(u.size()) +
                             " bounds");
    }
    if (a.cols() < 1) throw DimensionError("solve_minnorm: dimension must be positive");
    for (double v : u) {
        if (!std::isfinite(v)) throw Error("solve_minnorm: non-finite bound");
    }

    QpSolution sol;
    const Eigen::Index d = a.cols();
    if (a.rows() == 0) {
        sol.theta_hat = Vec::Zero(d);
        sol.status = QpStatus::Solved;
        sol.duals = Vec(0);
        finalize(sol, a, u);
        return sol;
    }

    AdmmSolver admm(a, u, settings);
    AdmmOutcome outcome = admm.run(settings.eps_abs, settings.eps_rel, settings.max_iter);
    if (outcome == AdmmOutcome::Converged) {
        sol.status = QpStatus::Solved;
    } else if (outcome == AdmmOutcome::MaxIter) {
        outcome = admm.run(settings.fallback_eps, settings.fallback_eps, settings.max_iter);
        if (outcome == AdmmOutcome::Converged) sol.status = QpStatus::SolvedLowAccuracy;
    }
    sol.iterations = admm.iterations();
    sol.primal_residual = admm.primal_residual();
    sol.dual_residual = admm.dual_residual();
    sol.infeasibility_detected = admm.infeasibility_detected();
    if (outcome == AdmmOutcome::Converged) {
        sol.theta_hat = admm.theta();
        sol.duals = admm.duals();
        finalize(sol, a, u);
        return sol;
    }

    PenaltyResult pen = solve_penalty(a, u, settings, admm.theta());
    sol.iterations += pen.iterations;
    sol.theta_hat = std::move(pen.theta);
    sol.duals = std::move(pen.duals);
    sol.status = pen.converged ? QpStatus::PenaltyFallback : QpStatus::Failed;
    finalize(sol, a, u);
    return sol;
}

KktReport check_kkt(RowsView a, std::span<const double> u, const QpSolution& sol) {
    if (static_cast<std::size_t>(a.rows()) != u.size()) throw DimensionError("check_kkt: rows and bounds differ");
    if (sol.theta_hat.size() != a.cols()) throw DimensionError("check_kkt: theta length mismatch");
    const std::size_t n = u.size();
    std::vector<double> mu(n, 0.0);
    KktReport rep;
    if (sol.duals.size() == static_cast<Eigen::Index>(n)) {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = sol.duals(static_cast<Eigen::Index>(i));
            rep.min_multiplier = std::min(rep.min_multiplier, m);
            mu[i] = std::max(0.0, m);
        }
    }
    std::vector<double> ax(n);
    kernels::mat_vec(a, sol.theta_hat, ax);
    for (std::size_t i = 0; i < n; ++i) {
        const double slack = ax[i] - u[i];
        rep.max_violation = std::max(rep.max_violation, slack);
        rep.complementarity = std::max(rep.complementarity, std::abs(mu[i] * slack));
    }
    Vec atmu;
    kernels::mat_t_vec(a, mu, atmu);
    rep.stationarity = (sol.theta_hat + atmu).lpNorm<Eigen::Infinity>();
    return rep;
}

}  // namespace ibcb
