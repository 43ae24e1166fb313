#pragma once

// Comparison methods trained on the reward-free history: a behavior-cloning
// linear SVM over per-step candidates, and Bayesian IRL with a Boltzmann
// likelihood over the offered candidates, sampled by random-walk
// Metropolis-Hastings.

#include "ibcb/history.hpp"
#include "ibcb/linalg.hpp"
#include "ibcb/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ibcb {

struct BcSettings {
    /// Inverse regularization strength.
    double c = 1.0;
    /// Stop once the projected-gradient spread falls below this.
    double tolerance = 1e-4;
    /// Cap on passes over the training set.
    long max_iter = 1'000'000;
    /// Seeds the visiting order of the coordinate sweeps.
    std::uint64_t order_seed = 0;

    void validate() const;
};

struct BcModel {
    Vec w;
    double bias = 0.0;
    long iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;

    /// argmax w·s over the candidates; the bias is common to every candidate.
    int predict(RowsView candidates) const;
};

/// Hinge-loss, L2-regularized linear classifier on one-vs-rest examples: the
/// chosen context of each step labeled +1, every other candidate −1. Trained
/// by dual coordinate descent with shrinking; the bias is an extra constant
/// feature.
BcModel bc_train(const EvolutionHistory& h, const BcSettings& settings = {});

/// Fraction of logged steps whose chosen index the model reproduces.
double bc_training_fitness(const BcModel& model, const EvolutionHistory& h);

struct BirlConfig {
    long burn_in = 10000;
    long iterations = 10000;
    long thin = 10;
    double proposal_std = 0.05;
    double beta_inv_temp = 5.0;
    double prior_std = 1.0;

    void validate() const;
    long n_samples() const noexcept { return iterations / thin; }
};

struct McmcResult {
    Vec mean;
    std::vector<Vec> samples;
    /// Accepted fraction of post-burn-in proposals.
    double acceptance_rate = 0.0;
    std::vector<std::string> warnings;
};

using LogDensity = std::function<double(const Vec&)>;
/// Log density that may stop early: when the value is below `floor` it can
/// return any number below `floor` instead of the exact value.
using BoundedLogDensity = std::function<double(const Vec&, double floor)>;

/// Random-walk Metropolis-Hastings with isotropic Gaussian proposals. Each
/// iteration draws d normals for the proposal and then one uniform.
McmcResult metropolis_hastings(const LogDensity& log_density, const Vec& init, const BirlConfig& cfg, Rng& rng);
/// Same chain; the acceptance threshold log u + current is passed as the
/// floor so hopeless proposals are rejected without a full evaluation.
McmcResult metropolis_hastings(const BoundedLogDensity& log_density, const Vec& init, const BirlConfig& cfg,
                               Rng& rng);

/// Flattened candidates (steps·M rows) and chosen indices of a history.
struct ChoiceData {
    RowMat candidates;
    std::vector<std::int32_t> chosen;
    int n_candidates = 0;

    RowsView view() const { return RowsView(candidates.data(), candidates.rows(), candidates.cols()); }
};

ChoiceData flatten_choices(const EvolutionHistory& h);

/// Log of prior N(0, prior_std² I) times Π softmax(β⟨θ, s_chosen⟩), up to a constant.
double birl_log_posterior(const ChoiceData& data, const Vec& theta, const BirlConfig& cfg);
double birl_log_posterior_bounded(const ChoiceData& data, const Vec& theta, const BirlConfig& cfg, double floor);

McmcResult birl_estimate(const EvolutionHistory& h, const BirlConfig& cfg, Rng& rng);

}  // namespace ibcb
