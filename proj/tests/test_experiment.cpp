#include "ibcb/error.hpp"
#include "ibcb/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using namespace ibcb;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const std::string& extra = "") {
    std::istringstream in(
        "[env]\ndim = 3\nmu_list = 1, 0.2, -0.6, -1.4\nsigma_s = 0.3\n"
        "[phases]\nn_ol = 6\nb_ol = 40\nn_bt = 3\nb_bt = 40\n"
        "[ibcb]\nalpha_list = 0.5, 1\n"
        "[birl]\nburn_in = 200\niterations = 400\nthin = 2\n"
        "[seeds]\nbase = 7\nn_logs = 2\nn_seeds_per_log = 2\n" +
        extra);
    return parse_config(in);
}

std::string metrics_text(const std::vector<MetricReport>& rows) {
    std::ostringstream out;
    write_metrics_csv(rows, out);
    return out.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("cells and tags") {
    const ExperimentConfig cfg = tiny("[ablation]\nnoise_std = 0, 0.03\ndup = 0, 2\n");
    const auto cells = expand_cells(cfg);
    REQUIRE(cells.size() == 4);
    CHECK(cells[1].dup == 2);
    CHECK(cells[2].noise_std == 0.03);
    CHECK(cells[3].tag(SelectionMode::UcbDeterministic) == "ucb_noise0.03_dup2_ce1_ood0");
}

TEST_CASE("log seeds depend on the log, not the cell") {
    const LogSeeds a = log_seeds(7, 0);
    const LogSeeds b = log_seeds(7, 1);
    CHECK(a.log != b.log);
    CHECK(a.test(0) != a.test(1));
    const ExperimentConfig cfg = tiny();
    const EnvSpec e1 = make_env(cfg, Cell{0.0, 0, 1.0, false}, a.log);
    const EnvSpec e2 = make_env(cfg, Cell{0.1, 2, 0.5, true}, a.log);
    CHECK(e1.w_reward == e2.w_reward);
    CHECK(e2.ood_first_mean_bt == 1.4);
}

TEST_CASE("row layout of a run") {
    const ExperimentConfig cfg = tiny();
    const auto rows = run_matrix(cfg);
    // (expert + 2 ibcb + bc + birl) × 2 test seeds × 2 logs
    CHECK(rows.size() == 20);
    CHECK(rows[0].algorithm == "expert");
    CHECK(rows[0].ol_fitness == 1.0);
    CHECK(rows[0].bt_fitness == 1.0);
    CHECK(rows[1].algorithm == "ibcb");
    CHECK(rows[1].alpha == 0.5);
    CHECK(rows[3].algorithm == "bc");
    CHECK(rows[3].train_fitness.has_value());
    CHECK_FALSE(rows[3].ol_fitness.has_value());
    CHECK(rows[4].algorithm == "birl");
    CHECK(rows[5].seed == 1);
    CHECK(rows[10].log == 1);
    for (const auto& r : rows) {
        if (r.algorithm == "ibcb") CHECK(r.status != "failed");
    }
}

TEST_CASE("results repeat exactly and do not depend on the thread count") {
    ExperimentConfig cfg = tiny("[ablation]\nnoise_std = 0, 0.05\n");
    const std::string one = metrics_text(run_matrix(cfg));
    CHECK(metrics_text(run_matrix(cfg)) == one);
    cfg.jobs = 4;
    CHECK(metrics_text(run_matrix(cfg)) == one);
}

TEST_CASE("truncation shortens the training view only") {
    const ExperimentConfig cfg = tiny();
    const SimulatedLog log = simulate_log(cfg, Cell{0.0, 0, 0.5, false}, 0);
    CHECK(log.history.meta.n_episodes == 6);
    CHECK(log.history.has_rewards());
    const EvolutionHistory train = training_view(log);
    CHECK(train.meta.n_episodes == 3);
    CHECK_FALSE(train.has_rewards());
}

TEST_CASE("a single online episode leaves IBCB without constraints") {
    const ExperimentConfig cfg = tiny("[run]\nmethods = expert, ibcb, bc\n");
    ExperimentConfig one = cfg;
    one.phases.n_ol = 1;
    const SimulatedLog log = simulate_log(one, Cell{}, 0);
    const auto inv = invert_all(one, log);
    REQUIRE(inv.size() == 3);
    CHECK(inv[0].status == "failed");
    CHECK_FALSE(inv[0].theta.has_value());
    CHECK(inv[0].warnings.size() == 1);
    CHECK(inv[2].status == "converged");
    const auto rows = evaluate_log(one, log, inv);
    CHECK_FALSE(rows[1].bt_fitness.has_value());
    CHECK(rows[3].bt_fitness.has_value());
    CHECK_THROWS(inv[0].scorer());
}

TEST_CASE("file pipeline reproduces the in-memory run") {
    ExperimentConfig cfg = tiny("[ablation]\nce_rate = 1, 0.5\n");
    const fs::path dir = fs::temp_directory_path() / "ibcb_pipeline_test";
    fs::remove_all(dir);
    cfg.output_dir = dir;
    cmd_simulate(cfg);
    for (const char* m : {"ibcb", "bc", "birl"}) cmd_invert(cfg, m);
    const auto rows = cmd_evaluate(cfg);
    CHECK(metrics_text(rows) == metrics_text(run_matrix(cfg)));
    CHECK(slurp(dir / "metrics.csv") == metrics_text(rows));
    const fs::path ld = log_dir(cfg, Cell{0.0, 0, 0.5, false}, 1);
    CHECK(fs::exists(ld / "params_ibcb_a0.5.json"));
    CHECK(fs::exists(ld / "params_birl.json"));
    CHECK(read_history(ld / "train.jsonl").meta.n_episodes == 3);

    // A config that changes the environment no longer matches the logs on disk.
    ExperimentConfig other = cfg;
    other.env.sigma_s = 0.31;
    CHECK_THROWS_WITH(read_log_dir(other, Cell{0.0, 0, 0.5, false}, 1), doctest::Contains("different configuration"));
    CHECK_THROWS(cmd_invert(cfg, "svm"));
    fs::remove_all(dir);
}

TEST_CASE("inversion files round trip") {
    const ExperimentConfig cfg = tiny();
    const SimulatedLog log = simulate_log(cfg, Cell{}, 0);
    const fs::path p = fs::temp_directory_path() / "ibcb_inversion_test.json";
    for (const Inversion& inv : invert_all(cfg, log)) {
        write_inversion(inv, p);
        const Inversion back = read_inversion(p);
        CHECK(back.method == inv.method);
        CHECK(back.alpha == inv.alpha);
        CHECK(back.status == inv.status);
        CHECK(back.scorer() == inv.scorer());
    }
    fs::remove(p);
}

}

TEST_SUITE("experiment") {

TEST_CASE("direction recovery on the default noiseless config" * doctest::may_fail()) {
    // Expected to fail: with the default means the UCB expert settles on one
    // candidate early, the rows carry little information about w, and the
    // minimum-norm point is not aligned with it.
    ExperimentConfig cfg;
    cfg.methods = {"ibcb"};
    const SimulatedLog log = simulate_log(cfg, Cell{}, 0);
    const Inversion inv = invert(cfg, "ibcb", 1.0, training_view(log), log.seeds.birl);
    REQUIRE(inv.theta.has_value());
    const Vec& t = *inv.theta;
    const double cosine = t.dot(log.env.w_reward) / (t.norm() * log.env.w_reward.norm());
    MESSAGE("cosine(theta_hat, w_reward) = " << cosine);
    CHECK(cosine >= 0.95);
}

}
