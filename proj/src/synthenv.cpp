#include "ibcb/synthenv.hpp"

#include "ibcb/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ibcb {

std::string_view to_string(RewardLink link) { return link == RewardLink::Sigmoid ? "sigmoid" : "linear"; }

RewardLink reward_link_from_string(std::string_view name) {
    if (name == "sigmoid") return RewardLink::Sigmoid;
    if (name == "linear") return RewardLink::Linear;
    throw Error("unknown reward link '" + std::string(name) + "'");
}

std::vector<double> default_candidate_means() {
    std::vector<double> mus;
    for (int i = 0; i < 10; ++i) mus.push_back(1.0 - 0.4 * i);
    return mus;
}

void EnvSpec::validate() const {
    if (dim < 1) throw DimensionError("env: dimension must be positive");
    if (mu_list.empty()) throw Error("env: mu_list is empty");
    if (sigma_s < 0.0) throw Error("env: sigma_s must be non-negative");
    if (noise_std < 0.0) throw Error("env: noise_std must be non-negative");
    if (w_reward.size() != dim) throw DimensionError("env: w_reward length does not match dim");
    if (dup < 0) throw Error("env: dup must be non-negative");
}

EnvSpec with_sampled_reward_weights(EnvSpec spec, double w_mean, double w_std) {
    Rng rng(Rng::derive_seed(spec.seed, {0x77}));
    spec.w_reward.resize(spec.dim);
    for (int i = 0; i < spec.dim; ++i) spec.w_reward(i) = gaussian(rng, w_mean, w_std);
    return spec;
}

PhaseData gen_phase(const EnvSpec& spec, Phase phase, int episodes, int batch, Rng& rng) {
    spec.validate();
    if (episodes < 1 || batch < 1) throw Error("gen_phase: episodes and batch must be at least 1");
    const bool cloning = phase == Phase::OnlineLearning && spec.dup > 0;
    if (cloning && 2 * spec.dup >= episodes) {
        throw Error("gen_phase: dup = " + std::to_string(spec.dup) + " must be below N/2 = " +
                    std::to_string(episodes / 2.0));
    }
    const int m = spec.n_candidates();
    const int d = spec.dim;
    std::vector<double> means = spec.mu_list;
    if (phase == Phase::BatchTest && spec.ood_first_mean_bt) means[0] = *spec.ood_first_mean_bt;

    PhaseData data(phase, episodes, batch, m, d);
    for (int n = 0; n < episodes; ++n) {
        for (int b = 0; b < batch; ++b) {
            double* out = data.step_data(n, b);
            for (int j = 0; j < m; ++j) {
                for (int k = 0; k < d; ++k) out[j * d + k] = gaussian(rng, means[static_cast<std::size_t>(j)], spec.sigma_s);
            }
        }
    }
    if (cloning) {
        const std::size_t per_episode = static_cast<std::size_t>(batch) * m * d;
        for (int n = 0; n < spec.dup; ++n) {
            std::copy_n(data.step_data(n, 0), per_episode, data.step_data(n + spec.dup, 0));
        }
    }
    return data;
}

double reward_mean(const EnvSpec& spec, const Vec& s) {
    if (s.size() != spec.w_reward.size()) throw DimensionError("reward_mean: context length mismatch");
    const double x = spec.w_reward.dot(s);
    if (spec.reward_link == RewardLink::Linear) return x;
    return 1.0 / (1.0 + std::exp(-x));
}

double sample_ol_reward(const EnvSpec& spec, const Vec& s, Rng& rng) {
    return reward_mean(spec, s) + gaussian(rng, 0.0, spec.noise_std);
}

int sample_bt_reward(const EnvSpec& spec, const Vec& s, Rng& rng) {
    const double p = std::clamp(reward_mean(spec, s) + gaussian(rng, 0.0, spec.noise_std), 0.0, 1.0);
    return rng.uniform() < p ? 1 : 0;
}

}  // namespace ibcb
