#include "ibcb/bandit.hpp"

#include "ibcb/error.hpp"

#include <cmath>
#include <string>

namespace ibcb {

namespace {

void check_candidates(RowsView candidates, int dim) {
    if (candidates.rows() == 0) throw Error("empty candidate set");
    if (candidates.cols() != dim) {
        throw DimensionError("candidate dimension " + std::to_string(candidates.cols()) +
                             " does not match policy dimension " + std::to_string(dim));
    }
}

}  // namespace

PolicyState::PolicyState(int dim, double lambda, double alpha)
    : PolicyState(Mat::Zero(dim, dim), Vec::Zero(dim), lambda, alpha, 0) {}

PolicyState::PolicyState(Mat phi, Vec b, double lambda, double alpha, int episodes)
    : phi_(std::move(phi)),
      b_(std::move(b)),
      lambda_(lambda),
      alpha_(alpha),
      episodes_(episodes),
      psi_([&] {
          if (!(lambda > 0.0)) throw Error("ridge weight lambda must be positive");
          if (!(alpha >= 0.0)) throw Error("exploration weight alpha must be non-negative");
          Mat psi = phi_;
          psi.diagonal().array() += lambda;
          return SpdMatrix(std::move(psi));
      }()),
      theta_(psi_.factor().solve(b_)) {}

PolicyState PolicyState::ridge_update(RowsView s_matrix, std::span<const double> rewards) const {
    if (s_matrix.rows() != static_cast<Eigen::Index>(rewards.size())) {
        throw DimensionError("ridge_update: " + std::to_string(s_matrix.rows()) + " contexts but " +
                             std::to_string(rewards.size()) + " rewards");
    }
    if (s_matrix.cols() != dim()) throw DimensionError("ridge_update: context dimension mismatch");
    for (double r : rewards) {
        if (!std::isfinite(r)) throw Error("ridge_update: non-finite reward");
    }
    const Eigen::Map<const Vec> r(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
    Mat phi = phi_;
    phi.noalias() += s_matrix.transpose() * s_matrix;
    phi = 0.5 * (phi + phi.transpose());
    Vec b = b_;
    b.noalias() += s_matrix.transpose() * r;
    return PolicyState(std::move(phi), std::move(b), lambda_, alpha_, episodes_ + 1);
}

int select_greedy(const Vec& theta, RowsView candidates) {
    check_candidates(candidates, static_cast<int>(theta.size()));
    const Vec scores = candidates * theta;
    return argmax_lowest(scores);
}

int select_ucb(const PolicyState& state, RowsView candidates) {
    check_candidates(candidates, state.dim());
    const int m = static_cast<int>(candidates.rows());
    Vec scores(m);
    for (int j = 0; j < m; ++j) {
        const Vec s = candidates.row(j).transpose();
        scores(j) = state.theta().dot(s) + state.alpha() * state.bonus_width(s);
    }
    return argmax_lowest(scores);
}

int select_ts_reparam(const PolicyState& state, RowsView candidates, double z) {
    check_candidates(candidates, state.dim());
    const int m = static_cast<int>(candidates.rows());
    Vec scores(m);
    for (int j = 0; j < m; ++j) {
        const Vec s = candidates.row(j).transpose();
        scores(j) = state.theta().dot(s) + state.alpha() * state.bonus_width(s) * z;
    }
    return argmax_lowest(scores);
}

int select_ts_reparam(const PolicyState& state, RowsView candidates, Rng& rng) {
    return select_ts_reparam(state, candidates, rng.normal());
}

int select_ts_full(const PolicyState& state, RowsView candidates, Rng& rng) {
    check_candidates(candidates, state.dim());
    Vec z(state.dim());
    for (int i = 0; i < state.dim(); ++i) z(i) = rng.normal();
    const Vec sampled = state.theta() + state.alpha() * state.psi().factor().solve_upper(z);
    return select_greedy(sampled, candidates);
}

int select(SelectionMode mode, const PolicyState& state, RowsView candidates, Rng& rng) {
    switch (mode) {
        case SelectionMode::UcbDeterministic: return select_ucb(state, candidates);
        case SelectionMode::ThompsonFullVector: return select_ts_full(state, candidates, rng);
        case SelectionMode::ThompsonReparam: return select_ts_reparam(state, candidates, rng);
    }
    return select_ucb(state, candidates);
}

std::vector<int> OnlineRun::choices() const {
    std::vector<int> out;
    for (const auto& ep : history.episodes) {
        for (const auto& st : ep) out.push_back(st.chosen);
    }
    return out;
}

OnlineRun run_expert(const PhaseData& data, const ExpertConfig& cfg, const RewardFn& reward, Rng& policy_rng) {
    const int n_ep = data.episodes();
    const int batch = data.batch();
    const int d = data.dim();
    PolicyState state(d, cfg.lambda, cfg.alpha);

    OnlineRun run{EvolutionHistory{}, state, {}};
    run.history.meta = HistoryMeta{d, data.candidates(), n_ep, batch, cfg.mode, cfg.alpha, cfg.lambda, {}};
    run.history.episodes.reserve(static_cast<std::size_t>(n_ep));
    run.states.reserve(static_cast<std::size_t>(n_ep));

    RowMat chosen(batch, d);
    std::vector<double> rewards(static_cast<std::size_t>(batch));
    for (int n = 0; n < n_ep; ++n) {
        if (n > 0) state = state.ridge_update(RowsView(chosen.data(), batch, d), rewards);
        run.states.push_back(state);
        std::vector<StepRecord> episode;
        episode.reserve(static_cast<std::size_t>(batch));
        for (int b = 0; b < batch; ++b) {
            const RowsView cands = data.step(n, b);
            const int idx = select(cfg.mode, state, cands, policy_rng);
            const Vec s = cands.row(idx).transpose();
            const double r = reward(s);
            chosen.row(b) = s.transpose();
            rewards[static_cast<std::size_t>(b)] = r;
            episode.push_back(StepRecord{RowMat(cands), idx, r});
        }
        run.history.episodes.push_back(std::move(episode));
    }
    run.final_state = state.ridge_update(RowsView(chosen.data(), batch, d), rewards);
    return run;
}

OnlineRun run_online_phase(const EnvSpec& spec, const ExpertConfig& cfg, int episodes, int batch, Rng& rng) {
    if (episodes < 1 || batch < 1) throw Error("run_online_phase: N and B must be at least 1");
    Rng context_rng = rng.child(1);
    Rng reward_rng = rng.child(2);
    Rng policy_rng = rng.child(3);
    const PhaseData data = gen_phase(spec, Phase::OnlineLearning, episodes, batch, context_rng);
    return run_expert(data, cfg, [&](const Vec& s) { return sample_ol_reward(spec, s, reward_rng); }, policy_rng);
}

std::vector<int> run_batch_test_phase(const Vec& theta, const PhaseData& bt_data) {
    if (theta.size() != bt_data.dim()) throw DimensionError("batch test: theta length mismatch");
    std::vector<int> out(static_cast<std::size_t>(bt_data.episodes()) * bt_data.batch());
    const int batch = bt_data.batch();
    const auto total = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < total; ++t) {
        out[static_cast<std::size_t>(t)] =
            select_greedy(theta, bt_data.step(static_cast<int>(t / batch), static_cast<int>(t % batch)));
    }
    return out;
}

std::vector<int> run_batch_test_phase(const Vec& theta, std::span<const CandidateSet> bt_data) {
    std::vector<int> out;
    out.reserve(bt_data.size());
    for (const auto& cs : bt_data) out.push_back(select_greedy(theta, cs.view()));
    return out;
}

}  // namespace ibcb
