#pragma once

// Batched linear contextual bandit expert. The policy is frozen for all B
// steps of an episode and refit by ridge regression between episodes.

#include "ibcb/history.hpp"
#include "ibcb/linalg.hpp"
#include "ibcb/rng.hpp"
#include "ibcb/synthenv.hpp"
#include "ibcb/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace ibcb {

/// Sufficient statistics of the ridge expert: Φ = Σ SᵢᵀSᵢ, b = Σ SᵢᵀRᵢ,
/// Ψ = λI + Φ (factorized once per state), θ = Ψ⁻¹b. Immutable; updates
/// return a new state.
class PolicyState {
public:
    PolicyState(int dim, double lambda, double alpha);

    int dim() const noexcept { return static_cast<int>(theta_.size()); }
    const Vec& theta() const noexcept { return theta_; }
    const Mat& phi() const noexcept { return phi_; }
    const Vec& b_vec() const noexcept { return b_; }
    double lambda() const noexcept { return lambda_; }
    double alpha() const noexcept { return alpha_; }
    int episode_counter() const noexcept { return episodes_; }
    const SpdMatrix& psi() const noexcept { return psi_; }

    /// Ingests one episode of chosen contexts (B×d) and their rewards.
    PolicyState ridge_update(RowsView s_matrix, std::span<const double> rewards) const;

    /// Exploration width [sᵀΨ⁻¹s]^½.
    double bonus_width(const Vec& s) const { return std::sqrt(psi_.factor().inverse_quad_form(s)); }

private:
    PolicyState(Mat phi, Vec b, double lambda, double alpha, int episodes);

    Mat phi_;
    Vec b_;
    double lambda_;
    double alpha_;
    int episodes_;
    SpdMatrix psi_;
    Vec theta_;
};

/// argmax ⟨θ, s⟩ + α[sᵀΨ⁻¹s]^½, lowest index on ties.
int select_ucb(const PolicyState& state, RowsView candidates);
/// Draws θ̃ ~ N(θ, α²Ψ⁻¹) and returns argmax ⟨θ̃, s⟩. Consumes d normals.
int select_ts_full(const PolicyState& state, RowsView candidates, Rng& rng);
/// argmax ⟨θ, s⟩ + α[sᵀΨ⁻¹s]^½ z with one z ~ N(0,1) shared by every
/// candidate of the step. Consumes one normal.
int select_ts_reparam(const PolicyState& state, RowsView candidates, Rng& rng);
int select_ts_reparam(const PolicyState& state, RowsView candidates, double z);
/// argmax ⟨θ, s⟩.
int select_greedy(const Vec& theta, RowsView candidates);

int select(SelectionMode mode, const PolicyState& state, RowsView candidates, Rng& rng);

struct ExpertConfig {
    SelectionMode mode = SelectionMode::UcbDeterministic;
    double alpha = 0.4;
    double lambda = 1.0;
};

/// Reward observed for a chosen context during online learning.
using RewardFn = std::function<double(const Vec& context)>;

struct OnlineRun {
    /// Privileged view (rewards present).
    EvolutionHistory history;
    /// State after ingesting all N episodes; this is the expert deployed in
    /// the test phase.
    PolicyState final_state;
    /// State used to act in each episode; states[0] is the prior-only state.
    std::vector<PolicyState> states;

    /// Chosen indices in episode-major order.
    std::vector<int> choices() const;
};

/// Runs the batched expert over fixed candidate sets. Episode 1 acts under the
/// prior (θ = 0, Ψ = λI); each later episode first ingests the previous
/// episode's chosen contexts and rewards, then acts with frozen parameters.
/// `policy_rng` feeds the Thompson draws and is untouched in UCB mode.
OnlineRun run_expert(const PhaseData& data, const ExpertConfig& cfg, const RewardFn& reward, Rng& policy_rng);

/// Generates online-phase data from the environment and runs the expert
/// against sample_ol_reward. Streams for contexts, rewards and policy draws
/// are split from `rng`.
OnlineRun run_online_phase(const EnvSpec& spec, const ExpertConfig& cfg, int episodes, int batch, Rng& rng);

/// Greedy test-phase choices under fixed θ; no state changes.
std::vector<int> run_batch_test_phase(const Vec& theta, const PhaseData& bt_data);
std::vector<int> run_batch_test_phase(const Vec& theta, std::span<const CandidateSet> bt_data);

}  // namespace ibcb
