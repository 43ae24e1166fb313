#pragma once

#include "ibcb/bandit.hpp"
#include "ibcb/history.hpp"
#include "ibcb/rng.hpp"
#include "ibcb/synthenv.hpp"

#include <cmath>
#include <initializer_list>
#include <vector>

namespace ibcb::test {

inline RowMat rows(std::initializer_list<std::initializer_list<double>> values) {
    RowMat m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : values) {
        Eigen::Index k = 0;
        for (double v : r) m(i, k++) = v;
        ++i;
    }
    return m;
}

inline RowsView view(const RowMat& m) { return RowsView(m.data(), m.rows(), m.cols()); }

inline Vec vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline RowMat random_rows(Rng& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
    RowMat m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = scale * rng.normal();
    }
    return m;
}

inline double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

/// Noiseless linear-link environment, small enough for unit tests.
inline EnvSpec small_env(int dim, std::vector<double> mus, std::uint64_t seed, double sigma_s = 0.3) {
    EnvSpec spec;
    spec.dim = dim;
    spec.mu_list = std::move(mus);
    spec.sigma_s = sigma_s;
    spec.reward_link = RewardLink::Linear;
    spec.seed = seed;
    return with_sampled_reward_weights(spec);
}

/// History with the given candidate sets and choices, one step per episode.
inline EvolutionHistory history_from(const std::vector<RowMat>& sets, const std::vector<int>& chosen, int batch = 1) {
    EvolutionHistory h;
    const int n_steps = static_cast<int>(sets.size());
    h.meta = HistoryMeta{static_cast<int>(sets.front().cols()), static_cast<int>(sets.front().rows()),
                         n_steps / batch, batch, SelectionMode::UcbDeterministic, 1.0, 1.0, "test"};
    for (int e = 0; e < n_steps / batch; ++e) {
        std::vector<StepRecord> ep;
        for (int b = 0; b < batch; ++b) {
            const int t = e * batch + b;
            ep.push_back(StepRecord{sets[static_cast<std::size_t>(t)], chosen[static_cast<std::size_t>(t)], {}});
        }
        h.episodes.push_back(std::move(ep));
    }
    return h;
}

}  // namespace ibcb::test
