#pragma once

// Inverse estimation from a reward-free evolution history. For every episode
// e ≥ 2, step b and non-chosen candidate J the expert's choice c implies
//
//   ⟨θ, Φ_e Ψ_e⁻¹ (s_J − s_c)⟩ ≤ α [H_e(s_c) − H_e(s_J)],   H_e(s) = [sᵀΨ_e⁻¹s]^½
//
// where Φ_e = Σ_{i<e} SᵢᵀSᵢ and Ψ_e = λI + Φ_e are rebuilt from the chosen
// contexts alone. Thompson-sampling experts drop the H terms (their mean is
// zero) and use a strict margin −ε instead. The estimate is the minimum-norm θ
// satisfying every row.

#include "ibcb/history.hpp"
#include "ibcb/linalg.hpp"
#include "ibcb/qpsolve.hpp"

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace ibcb {

enum class ConstraintMode { Ucb, Ts };

std::string_view to_string(ConstraintMode mode);
ConstraintMode constraint_mode_from_string(std::string_view name);
/// Ucb for UCB experts, Ts for either Thompson variant.
ConstraintMode constraint_mode_for(SelectionMode expert);

/// Origin of one constraint row. Episode and step are 1-based as in the history file.
struct RowTag {
    int episode = 0;
    int step = 0;
    int alt = 0;

    bool operator==(const RowTag&) const = default;
};

struct ConstraintSystem {
    int dim = 0;
    RowMat a;
    Vec u;
    std::vector<RowTag> provenance;
    ConstraintMode mode = ConstraintMode::Ucb;
    double alpha_ibcb = 1.0;
    double epsilon_margin = 0.0;

    Eigen::Index n_rows() const noexcept { return a.rows(); }
    RowsView rows() const { return RowsView(a.data(), a.rows(), a.cols()); }
    std::span<const double> bounds() const { return {u.data(), static_cast<std::size_t>(u.size())}; }
    /// Rows whose coefficients are all exactly zero.
    Eigen::Index count_vacuous() const;
    /// Largest aᵢᵀθ − uᵢ over all rows.
    double max_violation(const Vec& theta) const;
};

/// Ψ_e for every episode (psi[0] = λI) plus per-episode Gram blocks SₑᵀSₑ.
struct PsiReplay {
    std::vector<Mat> psi;
    std::vector<Mat> gram;

    /// Σ_{i<e} SᵢᵀSᵢ for 0-based episode e.
    Mat phi(int episode) const;
};

PsiReplay replay_psi(const EvolutionHistory& h, double lambda);

ConstraintSystem build_constraints(const EvolutionHistory& h, double lambda, double alpha_ibcb, ConstraintMode mode,
                                   double epsilon_margin = 0.0);

namespace serial {
ConstraintSystem build_constraints(const EvolutionHistory& h, double lambda, double alpha_ibcb, ConstraintMode mode,
                                   double epsilon_margin = 0.0);
}

QpSolution estimate(const ConstraintSystem& cs, const QpSettings& settings = {});

/// Line-delimited JSON dump: a header object, then one object per row
/// {"a":[...],"u":...,"episode":e,"step":b,"alt":j}. Same 17-digit formatting
/// as history files.
void write_constraints(const ConstraintSystem& cs, std::ostream& out);
void write_constraints(const ConstraintSystem& cs, const std::filesystem::path& path);
ConstraintSystem read_constraints(std::istream& in);
ConstraintSystem read_constraints(const std::filesystem::path& path);

}  // namespace ibcb
