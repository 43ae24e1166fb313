#pragma once

// Experiment configuration. The file is INI-style with sections; every key is
// optional and defaults to the synthetic setup (d = 10, M = 10, N = B = 20 ×
// 1000 for both phases, expert α = 0.4, 5 logs × 5 test seeds). Lists are
// comma separated.
//
//   [env]       dim, mu_list, sigma_s, w_mean, w_std, reward_link, ood_mean
//   [expert]    mode, alpha, lambda
//   [phases]    n_ol, b_ol, n_bt, b_bt
//   [ibcb]      alpha_list, epsilon_margin
//   [qp]        eps_abs, eps_rel, fallback_eps, max_iter, rho, sigma,
//               infeasibility_tol, penalty_weight
//   [bc]        c, tolerance, max_iter
//   [birl]      burn_in, iterations, thin, proposal_std, beta, prior_std
//   [ablation]  noise_std, dup, ce_rate, ood
//   [seeds]     base, n_logs, n_seeds_per_log
//   [run]       methods, jobs
//   [output]    dir

#include "ibcb/baselines.hpp"
#include "ibcb/bandit.hpp"
#include "ibcb/qpsolve.hpp"
#include "ibcb/synthenv.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ibcb {

struct EnvConfig {
    int dim = 10;
    std::vector<double> mu_list = default_candidate_means();
    double sigma_s = 0.05;
    double w_mean = 0.1;
    double w_std = 0.01;
    RewardLink reward_link = RewardLink::Sigmoid;
    double ood_mean = 1.4;
};

struct PhaseSizes {
    int n_ol = 20;
    int b_ol = 1000;
    int n_bt = 20;
    int b_bt = 1000;
};

struct IbcbConfig {
    std::vector<double> alpha_list = {1.0};
    double epsilon_margin = 0.01;
    QpSettings qp;
};

struct AblationLists {
    std::vector<double> noise_std = {0.0};
    std::vector<int> dup = {0};
    std::vector<double> ce_rate = {1.0};
    std::vector<bool> ood = {false};
};

struct SeedConfig {
    std::uint64_t base = 0;
    int n_logs = 5;
    int n_seeds_per_log = 5;
};

struct ExperimentConfig {
    EnvConfig env;
    ExpertConfig expert;
    PhaseSizes phases;
    IbcbConfig ibcb;
    BcSettings bc;
    BirlConfig birl;
    AblationLists ablation;
    SeedConfig seeds;
    /// Any of expert, ibcb, bc, birl.
    std::vector<std::string> methods = {"expert", "ibcb", "bc", "birl"};
    int jobs = 1;
    std::filesystem::path output_dir = "out";

    void validate() const;
    bool runs(const std::string& method) const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes every key with its current value; parse_config reads it back unchanged.
void write_config(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace ibcb
