#pragma once

// Synthetic environment: Gaussian candidate contexts around per-candidate
// means, a sigmoid (or, for tests, linear) reward in ⟨w_reward, s⟩, additive
// Gaussian reward noise, an optional test-phase shift of the first
// candidate's mean, and cloned episodes for contradiction injection.

#include "ibcb/linalg.hpp"
#include "ibcb/rng.hpp"
#include "ibcb/types.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace ibcb {

enum class RewardLink { Sigmoid, Linear };

std::string_view to_string(RewardLink link);
RewardLink reward_link_from_string(std::string_view name);

/// Means 1, 0.6, ..., -2.6 (ten candidates).
std::vector<double> default_candidate_means();

struct EnvSpec {
    int dim = 10;
    std::vector<double> mu_list = default_candidate_means();
    double sigma_s = 0.05;
    Vec w_reward;
    double noise_std = 0.0;
    RewardLink reward_link = RewardLink::Sigmoid;
    /// Test-phase mean of candidate 0 when the distribution shift is on.
    std::optional<double> ood_first_mean_bt;
    /// Number of leading online episodes cloned into the following block.
    int dup = 0;
    std::uint64_t seed = 0;

    int n_candidates() const noexcept { return static_cast<int>(mu_list.size()); }
    void validate() const;
};

/// Draws w_reward coordinate-wise from N(w_mean, w_std²) using a stream
/// derived from spec.seed and returns the completed spec.
EnvSpec with_sampled_reward_weights(EnvSpec spec, double w_mean = 0.1, double w_std = 0.01);

/// Candidate m of every step ~ N(mu_list[m]·1, σ_s² I). In the test phase with
/// the shift enabled candidate 0 uses ood_first_mean_bt. In the online phase
/// with dup = k, episodes k..2k-1 are verbatim copies of episodes 0..k-1.
PhaseData gen_phase(const EnvSpec& spec, Phase phase, int episodes, int batch, Rng& rng);

double reward_mean(const EnvSpec& spec, const Vec& s);
/// reward_mean + N(0, noise_std²).
double sample_ol_reward(const EnvSpec& spec, const Vec& s, Rng& rng);
/// Bernoulli(clamp(reward_mean + noise, 0, 1)).
int sample_bt_reward(const EnvSpec& spec, const Vec& s, Rng& rng);

}  // namespace ibcb
