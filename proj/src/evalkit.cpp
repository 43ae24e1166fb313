#include "ibcb/evalkit.hpp"

#include "ibcb/error.hpp"

#include <fmt/format.h>

#include <cstring>
#include <ostream>
#include <set>
#include <tuple>

namespace ibcb {

PhaseData phase_data_from_history(const EvolutionHistory& h) {
    h.validate();
    PhaseData data(Phase::OnlineLearning, h.meta.n_episodes, h.meta.batch, h.meta.n_candidates, h.meta.dim);
    for (int n = 0; n < h.meta.n_episodes; ++n) {
        for (int b = 0; b < h.meta.batch; ++b) {
            const RowMat& c = h.episodes[static_cast<std::size_t>(n)][static_cast<std::size_t>(b)].candidates;
            std::memcpy(data.step_data(n, b), c.data(), sizeof(double) * static_cast<std::size_t>(c.size()));
        }
    }
    return data;
}

double match_rate(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DimensionError("match_rate: length mismatch");
    if (a.empty()) throw Error("match_rate: no choices");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i];
    return static_cast<double>(hits) / static_cast<double>(a.size());
}

double ol_fitness(const Vec& theta_hat, const PhaseData& ol_data, const ExpertConfig& expert,
                  std::span<const int> reference, std::uint64_t policy_seed,
                  const std::optional<ReplayNoise>& noise) {
    if (theta_hat.size() != ol_data.dim()) throw DimensionError("ol_fitness: theta length mismatch");
    if (reference.size() != static_cast<std::size_t>(ol_data.episodes()) * ol_data.batch()) {
        throw DimensionError("ol_fitness: reference length does not match the online data");
    }
    Rng policy(policy_seed);
    Rng reward_rng(noise ? noise->reward_seed : 0);
    const double noise_std = noise ? noise->noise_std : 0.0;
    const RewardFn reward = [&](const Vec& s) { return gaussian(reward_rng, theta_hat.dot(s), noise_std); };
    const OnlineRun replay = run_expert(ol_data, expert, reward, policy);
    const std::vector<int> choices = replay.choices();
    return match_rate(choices, reference);
}

double bt_fitness(const Vec& theta_hat, const Vec& theta_expert_final, const PhaseData& bt_data) {
    const std::vector<int> learned = run_batch_test_phase(theta_hat, bt_data);
    const std::vector<int> expert = run_batch_test_phase(theta_expert_final, bt_data);
    return match_rate(learned, expert);
}

double bt_avg_reward(std::span<const int> choices, const PhaseData& bt_data, const EnvSpec& env, Rng& rng) {
    const std::size_t steps = static_cast<std::size_t>(bt_data.episodes()) * bt_data.batch();
    if (choices.size() != steps) throw DimensionError("bt_avg_reward: choices do not align with the test data");
    if (steps == 0) throw Error("bt_avg_reward: no test steps");
    long total = 0;
    std::size_t t = 0;
    for (int n = 0; n < bt_data.episodes(); ++n) {
        for (int b = 0; b < bt_data.batch(); ++b, ++t) {
            const int c = choices[t];
            if (c < 0 || c >= bt_data.candidates()) throw DimensionError("bt_avg_reward: choice out of range");
            total += sample_bt_reward(env, bt_data.step(n, b).row(c).transpose(), rng);
        }
    }
    return static_cast<double>(total) / static_cast<double>(steps);
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::string prefix(const MetricReport& r) {
    return fmt::format("{},{},{},{:g},{},{:g},{},{}", r.algorithm, r.alpha ? fmt::format("{:g}", *r.alpha) : "",
                       to_string(r.expert_mode), r.noise_std, r.dup, r.ce_rate, r.ood ? 1 : 0, r.log);
}

}  // namespace

void write_metrics_csv(std::span<const MetricReport> rows, std::ostream& out) {
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        out << prefix(r) << ',' << r.seed << ',' << cell(r.ol_fitness) << ',' << cell(r.bt_fitness) << ','
            << cell(r.bt_avg_reward) << ',' << cell(r.train_fitness) << ',' << r.status << '\n';
    }
}

void write_timings_csv(std::span<const MetricReport> rows, std::ostream& out) {
    out << kTimingsHeader << '\n';
    std::set<std::string> seen;
    for (const auto& r : rows) {
        const std::string key = prefix(r);
        if (!seen.insert(key).second) continue;
        out << key << ',' << fmt::format("{:.6f}", r.train_time_seconds) << '\n';
    }
}

}  // namespace ibcb
