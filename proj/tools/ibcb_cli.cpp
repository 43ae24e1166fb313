// Command-line driver: simulate → invert → evaluate → report, or the whole
// ablation matrix in one go.

#include "ibcb/config.hpp"
#include "ibcb/error.hpp"
#include "ibcb/evalkit.hpp"
#include "ibcb/experiment.hpp"
#include "ibcb/report.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out;
    bool linear_link = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "INI experiment config (defaults reproduce the synthetic setup)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Base seed, overrides [seeds] base");
    cmd->add_option("--jobs", o.jobs, "Worker threads across logs and cells")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "Output directory, overrides [output] dir");
    cmd->add_flag("--linear-link", o.linear_link, "Linear reward link instead of sigmoid (test mode)");
    cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress messages");
}

ibcb::ExperimentConfig resolve(const CommonOptions& o) {
    ibcb::ExperimentConfig cfg = o.config.empty() ? ibcb::ExperimentConfig{} : ibcb::load_config(o.config);
    if (o.seed) cfg.seeds.base = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.linear_link) cfg.env.reward_link = ibcb::RewardLink::Linear;
    cfg.validate();
    return cfg;
}

ibcb::Progress progress_for(const CommonOptions& o) {
    if (o.quiet) {
        return [](const std::string& msg) {
            if (msg.rfind("warning", 0) == 0) std::cerr << msg << '\n';
        };
    }
    return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse batched contextual bandit experiments"};
    app.require_subcommand(1);
    app.footer(std::string("metrics.csv columns: ") + ibcb::kMetricsHeader + "\ntimings.csv columns: " +
               ibcb::kTimingsHeader);

    CommonOptions sim_opts, inv_opts, eval_opts, abl_opts;
    std::string method;
    std::string report_dir;
    bool print_config = false;

    auto* simulate = app.add_subcommand("simulate", "Run the expert and write privileged and reward-free histories");
    add_common(simulate, sim_opts);
    simulate->add_flag("--print-config", print_config, "Print the resolved config and exit");

    auto* invert = app.add_subcommand("invert", "Train one estimator on every simulated history");
    add_common(invert, inv_opts);
    invert->add_option("--method", method, "ibcb, bc or birl")
        ->required()
        ->check(CLI::IsMember({"ibcb", "bc", "birl"}));

    auto* evaluate = app.add_subcommand("evaluate", "Score every trained estimator; writes metrics.csv and timings.csv");
    add_common(evaluate, eval_opts);

    auto* ablate = app.add_subcommand("ablate", "Run the full noise × dup × ce_rate × ood matrix in memory");
    add_common(ablate, abl_opts);

    auto* report = app.add_subcommand("report", "Aggregate metrics.csv files into mean±std tables");
    report->add_option("--out", report_dir, "Directory holding metrics.csv files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto cfg = resolve(sim_opts);
            if (print_config) {
                ibcb::write_config(cfg, std::cout);
                return 0;
            }
            ibcb::cmd_simulate(cfg, progress_for(sim_opts));
        } else if (*invert) {
            ibcb::cmd_invert(resolve(inv_opts), method, progress_for(inv_opts));
        } else if (*evaluate) {
            const auto cfg = resolve(eval_opts);
            const auto rows = ibcb::cmd_evaluate(cfg, progress_for(eval_opts));
            std::cerr << rows.size() << " rows written to " << (cfg.output_dir / "metrics.csv").string() << '\n';
        } else if (*ablate) {
            const auto cfg = resolve(abl_opts);
            const auto rows = ibcb::run_matrix(cfg, progress_for(abl_opts));
            ibcb::write_outputs(rows, cfg.output_dir);
            std::cerr << rows.size() << " rows written to " << (cfg.output_dir / "metrics.csv").string() << '\n';
        } else if (*report) {
            const auto rows = ibcb::cmd_report(report_dir);
            ibcb::write_report_markdown(rows, std::cout);
        }
    } catch (const ibcb::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
