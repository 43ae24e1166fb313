#include "ibcb/error.hpp"
#include "ibcb/synthenv.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace ibcb;

namespace {

bool episodes_equal(const PhaseData& d, int e1, int e2) {
    for (int b = 0; b < d.batch(); ++b) {
        if (d.step(e1, b) != d.step(e2, b)) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("synthenv") {

TEST_CASE("default means and shapes") {
    const auto mus = default_candidate_means();
    REQUIRE(mus.size() == 10);
    CHECK(mus.front() == doctest::Approx(1.0));
    CHECK(mus.back() == doctest::Approx(-2.6));
    EnvSpec spec;
    spec = with_sampled_reward_weights(spec);
    Rng rng(1);
    const PhaseData d = gen_phase(spec, Phase::OnlineLearning, 20, 1000, rng);
    CHECK(d.episodes() == 20);
    CHECK(d.batch() == 1000);
    CHECK(d.candidates() == 10);
    CHECK(d.dim() == 10);
}

TEST_CASE("zero context noise gives the means exactly") {
    EnvSpec spec = test::small_env(3, {1.0, -0.5}, 1, 0.0);
    Rng rng(2);
    const PhaseData d = gen_phase(spec, Phase::OnlineLearning, 2, 3, rng);
    for (int n = 0; n < 2; ++n) {
        for (int b = 0; b < 3; ++b) {
            CHECK(d.step(n, b).row(0).isApprox(Vec::Constant(3, 1.0).transpose()));
            CHECK(d.step(n, b).row(1).isApprox(Vec::Constant(3, -0.5).transpose()));
        }
    }
}

TEST_CASE("context moments follow the spec") {
    EnvSpec spec = test::small_env(2, {0.7, -1.1}, 5, 0.05);
    Rng rng(3);
    const PhaseData d = gen_phase(spec, Phase::OnlineLearning, 10, 1000, rng);
    double sum = 0, sq = 0;
    const int n = 10 * 1000 * 2;
    for (int e = 0; e < 10; ++e) {
        for (int b = 0; b < 1000; ++b) {
            for (int k = 0; k < 2; ++k) {
                const double v = d.step(e, b)(1, k);
                sum += v;
                sq += v * v;
            }
        }
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(-1.1).epsilon(0.002));
    CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(0.05).epsilon(0.03));
}

TEST_CASE("duplicated episodes are verbatim copies") {
    EnvSpec spec = test::small_env(3, {1.0, 0.0, -1.0}, 7);
    spec.dup = 2;
    Rng rng(4);
    const PhaseData d = gen_phase(spec, Phase::OnlineLearning, 20, 5, rng);
    CHECK(episodes_equal(d, 0, 2));
    CHECK(episodes_equal(d, 1, 3));
    CHECK_FALSE(episodes_equal(d, 0, 1));
    CHECK_FALSE(episodes_equal(d, 3, 4));
    spec.dup = 10;
    Rng again(4);
    CHECK_THROWS(gen_phase(spec, Phase::OnlineLearning, 20, 5, again));
    // The test phase ignores dup.
    Rng bt(4);
    CHECK_NOTHROW(gen_phase(spec, Phase::BatchTest, 20, 5, bt));
}

TEST_CASE("distribution shift moves the first candidate in the test phase only") {
    EnvSpec spec = test::small_env(2, {1.0, 0.0}, 7, 0.0);
    spec.ood_first_mean_bt = 1.4;
    Rng r1(1), r2(1);
    const PhaseData bt = gen_phase(spec, Phase::BatchTest, 1, 2, r1);
    const PhaseData ol = gen_phase(spec, Phase::OnlineLearning, 1, 2, r2);
    CHECK(bt.step(0, 0)(0, 0) == doctest::Approx(1.4));
    CHECK(ol.step(0, 0)(0, 0) == doctest::Approx(1.0));
    CHECK(bt.step(0, 0)(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("generation is deterministic") {
    EnvSpec spec = test::small_env(3, {1.0, 0.0, -1.0}, 7);
    Rng a(5), b(5);
    CHECK(gen_phase(spec, Phase::OnlineLearning, 3, 4, a).values() ==
          gen_phase(spec, Phase::OnlineLearning, 3, 4, b).values());
    CHECK(with_sampled_reward_weights(spec).w_reward == spec.w_reward);
}

TEST_CASE("reward weights are drawn around 0.1") {
    EnvSpec spec;
    spec.dim = 2000;
    spec.seed = 3;
    spec = with_sampled_reward_weights(spec);
    CHECK(spec.w_reward.mean() == doctest::Approx(0.1).epsilon(0.01));
}

TEST_CASE("reward means") {
    EnvSpec spec;
    spec.dim = 2;
    spec.w_reward = test::vec({1.0, 1.0});
    CHECK(reward_mean(spec, test::vec({0.5, -0.5})) == doctest::Approx(0.5));
    CHECK(reward_mean(spec, test::vec({0.2, 0.3})) > reward_mean(spec, test::vec({0.1, 0.3})));
    spec.reward_link = RewardLink::Linear;
    CHECK(reward_mean(spec, test::vec({0.2, 0.3})) == doctest::Approx(0.5));
    CHECK_THROWS_AS(reward_mean(spec, test::vec({1.0})), DimensionError);
}

TEST_CASE("online rewards: exact without noise, right moments with it") {
    EnvSpec spec;
    spec.dim = 1;
    spec.w_reward = test::vec({0.4});
    Rng rng(8);
    const Vec s = test::vec({1.0});
    const double mean = reward_mean(spec, s);
    CHECK(sample_ol_reward(spec, s, rng) == mean);

    spec.noise_std = 0.1;
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double r = sample_ol_reward(spec, s, rng);
        sum += r;
        sq += r * r;
    }
    const double m = sum / n;
    CHECK(std::abs(m - mean) <= 0.01);
    CHECK(std::abs(std::sqrt(sq / n - m * m) - 0.1) <= 0.005);
}

TEST_CASE("test rewards are Bernoulli in the clamped mean") {
    EnvSpec spec;
    spec.dim = 1;
    spec.reward_link = RewardLink::Linear;
    spec.w_reward = test::vec({1.0});
    Rng rng(9);
    for (int i = 0; i < 100; ++i) CHECK(sample_bt_reward(spec, test::vec({1.0}), rng) == 1);
    for (int i = 0; i < 100; ++i) CHECK(sample_bt_reward(spec, test::vec({0.0}), rng) == 0);
    for (int i = 0; i < 100; ++i) CHECK(sample_bt_reward(spec, test::vec({3.0}), rng) == 1);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += sample_bt_reward(spec, test::vec({0.6}), rng);
    CHECK(std::abs(hits / double(n) - 0.6) <= 0.01);
}

TEST_CASE("spec validation") {
    EnvSpec spec;
    CHECK_THROWS_AS(spec.validate(), DimensionError);  // no reward weights yet
    spec = with_sampled_reward_weights(spec);
    CHECK_NOTHROW(spec.validate());
    spec.noise_std = -1;
    CHECK_THROWS(spec.validate());
    CHECK(reward_link_from_string("linear") == RewardLink::Linear);
    CHECK_THROWS(reward_link_from_string("cubic"));
}

}
