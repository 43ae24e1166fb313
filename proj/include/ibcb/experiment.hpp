#pragma once

// Run matrix: ablation cells × logs × test seeds. Each (cell, log) simulates
// one expert run, trains every configured estimator on the reward-free
// (possibly truncated) history and scores it on freshly drawn test data.
//
// Seeds depend only on the base seed and the log index, never on the cell,
// so cells that differ in one knob share contexts and reward weights.
//
// On disk (simulate → invert → evaluate):
//
//   <out>/<cell>/log_<k>/history.jsonl     privileged history (rewards kept)
//   <out>/<cell>/log_<k>/train.jsonl       reward-free, truncated estimator input
//   <out>/<cell>/log_<k>/env.json          reward weights, seeds, final expert θ
//   <out>/<cell>/log_<k>/params_<m>.json   estimator output and train time
//   <out>/metrics.csv, <out>/timings.csv

#include "ibcb/baselines.hpp"
#include "ibcb/config.hpp"
#include "ibcb/evalkit.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ibcb {

struct Cell {
    double noise_std = 0.0;
    int dup = 0;
    double ce_rate = 1.0;
    bool ood = false;

    /// Directory-safe name, e.g. "ucb_noise0.03_dup2_ce1_ood0".
    std::string tag(SelectionMode mode) const;
};

/// Cross product of the ablation lists in list order.
std::vector<Cell> expand_cells(const ExperimentConfig& cfg);

struct LogSeeds {
    std::uint64_t log = 0;
    std::uint64_t online = 0;
    std::uint64_t policy = 0;
    std::uint64_t birl = 0;

    std::uint64_t test(int j) const;
};

LogSeeds log_seeds(std::uint64_t base, int log_index);

EnvSpec make_env(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t log_seed);

struct SimulatedLog {
    Cell cell;
    int log_index = 0;
    LogSeeds seeds;
    EnvSpec env;
    /// Privileged full-length history.
    EvolutionHistory history;
    Vec expert_theta;
};

SimulatedLog simulate_log(const ExperimentConfig& cfg, const Cell& cell, int log_index);

/// Reward-free view truncated to the cell's ce_rate.
EvolutionHistory training_view(const SimulatedLog& log);

struct Inversion {
    std::string method;
    std::optional<double> alpha;
    /// Reward parameter estimate (ibcb, birl).
    std::optional<Vec> theta;
    /// Behavior-cloning scorer.
    std::optional<BcModel> bc;
    std::optional<double> train_fitness;
    double train_time_seconds = 0.0;
    std::string status;
    std::vector<std::string> warnings;

    /// Vector used for greedy test-time selection.
    const Vec& scorer() const;
};

/// Runs one estimator. Estimator failures are reported through `status`
/// ("failed") and `warnings` instead of being thrown.
Inversion invert(const ExperimentConfig& cfg, const std::string& method, std::optional<double> alpha,
                 const EvolutionHistory& train, std::uint64_t birl_seed);

/// All configured estimators for one log (every α of the IBCB list).
std::vector<Inversion> invert_all(const ExperimentConfig& cfg, const SimulatedLog& log);

/// One row per (method, test seed), expert rows first.
std::vector<MetricReport> evaluate_log(const ExperimentConfig& cfg, const SimulatedLog& log,
                                       const std::vector<Inversion>& inversions);

using Progress = std::function<void(const std::string& message)>;

/// Full matrix in memory. Work is spread over cfg.jobs threads; output order
/// does not depend on the thread count.
std::vector<MetricReport> run_matrix(const ExperimentConfig& cfg, const Progress& progress = {});

void write_outputs(const std::vector<MetricReport>& rows, const std::filesystem::path& dir);

// File pipeline.
std::filesystem::path log_dir(const ExperimentConfig& cfg, const Cell& cell, int log_index);
void cmd_simulate(const ExperimentConfig& cfg, const Progress& progress = {});
/// method: ibcb, bc or birl. Reads train.jsonl of every simulated log.
void cmd_invert(const ExperimentConfig& cfg, const std::string& method, const Progress& progress = {});
/// Scores every params file found and writes metrics.csv and timings.csv under the output dir.
std::vector<MetricReport> cmd_evaluate(const ExperimentConfig& cfg, const Progress& progress = {});

void write_env_snapshot(const SimulatedLog& log, const std::filesystem::path& path);
SimulatedLog read_log_dir(const ExperimentConfig& cfg, const Cell& cell, int log_index);
void write_inversion(const Inversion& inv, const std::filesystem::path& path);
Inversion read_inversion(const std::filesystem::path& path);

}  // namespace ibcb
