#pragma once

// Metrics: OL-Fitness (replayed online learning under estimated parameters),
// BT-Fitness (greedy test choices against the final expert) and BT-AR
// (average binary test reward).

#include "ibcb/bandit.hpp"
#include "ibcb/synthenv.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ibcb {

/// Candidate sets of a history as a PhaseData block (online phase).
PhaseData phase_data_from_history(const EvolutionHistory& h);

/// Optional noise on the replay reward channel. The same reward seed is reused
/// for every replay so runs differ only through the parameters.
struct ReplayNoise {
    double noise_std = 0.0;
    std::uint64_t reward_seed = 0;
};

/// Replays a fresh expert (same mode, α, λ) over `ol_data` with rewards
/// ⟨θ̂, s⟩ and returns the fraction of steps whose choice matches
/// `reference`. `policy_seed` must be the seed of the reference run's policy
/// stream so Thompson draws are shared.
double ol_fitness(const Vec& theta_hat, const PhaseData& ol_data, const ExpertConfig& expert,
                  std::span<const int> reference, std::uint64_t policy_seed,
                  const std::optional<ReplayNoise>& noise = std::nullopt);

/// Fraction of equal entries.
double match_rate(std::span<const int> a, std::span<const int> b);

double bt_fitness(const Vec& theta_hat, const Vec& theta_expert_final, const PhaseData& bt_data);

/// Mean of Bernoulli test rewards for the chosen candidates.
double bt_avg_reward(std::span<const int> choices, const PhaseData& bt_data, const EnvSpec& env, Rng& rng);

/// One metrics row. Missing values are written as empty cells.
struct MetricReport {
    std::string algorithm;
    std::optional<double> alpha;
    SelectionMode expert_mode = SelectionMode::UcbDeterministic;
    double noise_std = 0.0;
    int dup = 0;
    double ce_rate = 1.0;
    bool ood = false;
    int log = 0;
    int seed = 0;
    std::optional<double> ol_fitness;
    std::optional<double> bt_fitness;
    std::optional<double> bt_avg_reward;
    std::optional<double> train_fitness;
    std::string status;
    /// Not part of the metrics CSV; see write_timings_csv.
    double train_time_seconds = 0.0;
};

/// Frozen column order of the metrics CSV.
inline constexpr const char* kMetricsHeader =
    "algorithm,alpha,expert_mode,noise_std,dup,ce_rate,ood,log,seed,ol_fitness,bt_fitness,bt_avg_reward,"
    "train_fitness,status";
inline constexpr const char* kTimingsHeader =
    "algorithm,alpha,expert_mode,noise_std,dup,ce_rate,ood,log,train_time_seconds";

void write_metrics_csv(std::span<const MetricReport> rows, std::ostream& out);
/// One row per (algorithm, log); wall-clock values live apart from the
/// metrics so metric files stay byte-reproducible.
void write_timings_csv(std::span<const MetricReport> rows, std::ostream& out);

}  // namespace ibcb
