#include "ibcb/error.hpp"
#include "ibcb/evalkit.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

using namespace ibcb;

namespace {

struct Online {
    EnvSpec env;
    OnlineRun run;
    std::uint64_t policy_seed;
};

Online online(SelectionMode mode, std::uint64_t seed) {
    const EnvSpec env = test::small_env(3, {0.8, 0.2, -0.4, -1.0}, seed, 0.4);
    ExpertConfig cfg;
    cfg.mode = mode;
    Rng rng(seed);
    return Online{env, run_online_phase(env, cfg, 6, 30, rng), rng.child(3).seed()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_SUITE("evalkit") {

TEST_CASE("phase data from a history keeps every candidate") {
    const Online o = online(SelectionMode::UcbDeterministic, 1);
    const PhaseData d = phase_data_from_history(o.run.history);
    CHECK(d.episodes() == 6);
    CHECK(d.batch() == 30);
    CHECK(d.step(4, 7) == o.run.history.episodes[4][7].candidates);
}

TEST_CASE("true weights replay the expert exactly") {
    for (SelectionMode mode :
         {SelectionMode::UcbDeterministic, SelectionMode::ThompsonReparam, SelectionMode::ThompsonFullVector}) {
        const std::string name(to_string(mode));
        CAPTURE(name);
        const Online o = online(mode, 2);
        ExpertConfig cfg;
        cfg.mode = mode;
        const PhaseData d = phase_data_from_history(o.run.history);
        const std::vector<int> ref = o.run.choices();
        CHECK(ol_fitness(o.env.w_reward, d, cfg, ref, o.policy_seed) == 1.0);
        // Replay noise can only move choices, never the bookkeeping.
        const double noisy = ol_fitness(o.env.w_reward, d, cfg, ref, o.policy_seed, ReplayNoise{0.5, 3});
        CHECK(noisy >= 0.0);
        CHECK(noisy <= 1.0);
    }
}

TEST_CASE("reversed weights lose the match") {
    const Online o = online(SelectionMode::UcbDeterministic, 3);
    const PhaseData d = phase_data_from_history(o.run.history);
    const std::vector<int> ref = o.run.choices();
    CHECK(ol_fitness(-o.env.w_reward, d, ExpertConfig{}, ref, o.policy_seed) < 1.0);
    CHECK_THROWS_AS(ol_fitness(test::vec({1.0}), d, ExpertConfig{}, ref, 0), DimensionError);
    CHECK_THROWS_AS(ol_fitness(o.env.w_reward, d, ExpertConfig{}, std::vector<int>{0}, 0), DimensionError);
}

TEST_CASE("match rate") {
    CHECK(match_rate(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 0, 3, 0}) == 0.5);
    CHECK_THROWS_AS(match_rate(std::vector<int>{1}, std::vector<int>{1, 2}), DimensionError);
    CHECK_THROWS(match_rate(std::vector<int>{}, std::vector<int>{}));
}

TEST_CASE("batch-test fitness is scale invariant and sign sensitive") {
    const EnvSpec env = test::small_env(3, {0.5, 0.0, -0.5}, 4, 0.5);
    Rng rng(4);
    const PhaseData bt = gen_phase(env, Phase::BatchTest, 3, 50, rng);
    const Vec theta = test::vec({0.3, -0.1, 0.6});
    CHECK(bt_fitness(theta, theta, bt) == 1.0);
    CHECK(bt_fitness(3.0 * theta, theta, bt) == 1.0);
    CHECK(bt_fitness(-theta, theta, bt) < 0.2);
}

TEST_CASE("average test reward with certain outcomes") {
    EnvSpec env;
    env.dim = 1;
    env.mu_list = {1.0, 0.0};
    env.sigma_s = 0.0;
    env.reward_link = RewardLink::Linear;
    env.w_reward = test::vec({1.0});
    Rng rng(5);
    const PhaseData bt = gen_phase(env, Phase::BatchTest, 2, 10, rng);
    CHECK(bt_avg_reward(std::vector<int>(20, 0), bt, env, rng) == 1.0);
    CHECK(bt_avg_reward(std::vector<int>(20, 1), bt, env, rng) == 0.0);
    CHECK_THROWS_AS(bt_avg_reward(std::vector<int>(19, 0), bt, env, rng), DimensionError);
    CHECK_THROWS_AS(bt_avg_reward(std::vector<int>(20, 2), bt, env, rng), DimensionError);
}

TEST_CASE("metrics and timings CSV layout") {
    MetricReport a;
    a.algorithm = "ibcb";
    a.alpha = 0.5;
    a.noise_std = 0.03;
    a.dup = 2;
    a.ol_fitness = 0.9;
    a.bt_fitness = 1.0 / 3.0;
    a.bt_avg_reward = 0.25;
    a.status = "solved";
    a.train_time_seconds = 1.5;
    MetricReport b = a;
    b.seed = 1;
    MetricReport e;
    e.algorithm = "expert";
    e.ol_fitness = 1.0;
    e.status = "ok";
    const std::vector<MetricReport> rows = {e, a, b};

    std::ostringstream m;
    write_metrics_csv(rows, m);
    const auto ml = lines(m.str());
    REQUIRE(ml.size() == 4);
    CHECK(ml[0] == kMetricsHeader);
    CHECK(ml[1] == "expert,,ucb,0,0,1,0,0,0,1.000000,,,,ok");
    CHECK(ml[2] == "ibcb,0.5,ucb,0.03,2,1,0,0,0,0.900000,0.333333,0.250000,,solved");
    CHECK(ml[3].rfind("ibcb,0.5,ucb,0.03,2,1,0,0,1,", 0) == 0);

    std::ostringstream t;
    write_timings_csv(rows, t);
    const auto tl = lines(t.str());
    REQUIRE(tl.size() == 3);
    CHECK(tl[0] == kTimingsHeader);
    CHECK(tl[2] == "ibcb,0.5,ucb,0.03,2,1,0,0,1.500000");
}

}
