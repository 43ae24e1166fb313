#include "ibcb/bandit.hpp"
#include "ibcb/constraints.hpp"
#include "ibcb/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace ibcb;

namespace {

// Two one-step episodes over candidates {2} and {0}, the first always chosen.
EvolutionHistory scalar_history() {
    const RowMat set = test::rows({{2.0}, {0.0}});
    return test::history_from({set, set}, {0, 0});
}

struct Simulated {
    EnvSpec env;
    OnlineRun run;
};

Simulated simulate(int dim, int n, int b, SelectionMode mode, std::uint64_t seed) {
    const EnvSpec env = test::small_env(dim, {0.9, 0.4, -0.2, -0.7, -1.3}, seed, 0.4);
    ExpertConfig cfg;
    cfg.mode = mode;
    Rng rng(seed);
    return Simulated{env, run_online_phase(env, cfg, n, b, rng)};
}

}  // namespace

TEST_SUITE("constraints") {

TEST_CASE("one-dimensional example by hand") {
    // Φ₂ = 4, Ψ₂ = 5: row = (4/5)(0 − 2) = −1.6, bound = (2 − 0)/√5.
    const ConstraintSystem cs = build_constraints(scalar_history(), 1.0, 1.0, ConstraintMode::Ucb);
    REQUIRE(cs.n_rows() == 1);
    CHECK(cs.a(0, 0) == doctest::Approx(-1.6));
    CHECK(cs.u(0) == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(cs.provenance[0] == RowTag{2, 1, 1});

    const ConstraintSystem ts = build_constraints(scalar_history(), 1.0, 1.0, ConstraintMode::Ts, 0.01);
    CHECK(ts.a(0, 0) == doctest::Approx(-1.6));
    CHECK(ts.u(0) == doctest::Approx(-0.01));

    // min ½θ² s.t. −1.6θ ≤ 0.894 is θ = 0; with the TS margin θ = 0.01/1.6.
    QpSettings tight;
    tight.eps_abs = tight.eps_rel = 1e-9;
    tight.fallback_eps = 1e-7;
    CHECK(std::abs(estimate(cs, tight).theta_hat(0)) <= 1e-6);
    CHECK(estimate(ts, tight).theta_hat(0) == doctest::Approx(0.00625).epsilon(1e-4));
}

TEST_CASE("row count at the default sizes") {
    EnvSpec env;
    env.seed = 11;
    env = with_sampled_reward_weights(env);
    Rng rng(11);
    const OnlineRun run = run_online_phase(env, ExpertConfig{}, 20, 1000, rng);
    const ConstraintSystem cs =
        build_constraints(strip_rewards(run.history), 1.0, 1.0, ConstraintMode::Ucb);
    CHECK(cs.n_rows() == 171000);
    CHECK(cs.provenance.back() == RowTag{20, 1000, cs.provenance.back().alt});
}

TEST_CASE("parallel build matches the serial reference") {
    const Simulated s = simulate(4, 6, 40, SelectionMode::UcbDeterministic, 3);
    const EvolutionHistory h = strip_rewards(s.run.history);
    for (ConstraintMode mode : {ConstraintMode::Ucb, ConstraintMode::Ts}) {
        const ConstraintSystem par = build_constraints(h, 1.0, 0.7, mode, 0.01);
        const ConstraintSystem ser = serial::build_constraints(h, 1.0, 0.7, mode, 0.01);
        REQUIRE(par.n_rows() == ser.n_rows());
        CHECK((par.a - ser.a).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((par.u - ser.u).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(par.provenance == ser.provenance);
    }
}

TEST_CASE("replayed Psi equals the expert's own") {
    const Simulated s = simulate(3, 5, 20, SelectionMode::UcbDeterministic, 4);
    const PsiReplay replay = replay_psi(strip_rewards(s.run.history), 1.0);
    REQUIRE(replay.psi.size() == s.run.states.size());
    for (std::size_t e = 0; e < replay.psi.size(); ++e) {
        CHECK((replay.psi[e] - s.run.states[e].psi().matrix()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((replay.phi(static_cast<int>(e)) - s.run.states[e].phi()).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("true reward weights satisfy the UCB rows under a linear noiseless reward") {
    const Simulated s = simulate(4, 6, 50, SelectionMode::UcbDeterministic, 5);
    const ConstraintSystem cs = build_constraints(strip_rewards(s.run.history), 1.0, 0.4, ConstraintMode::Ucb);
    CHECK(cs.max_violation(s.env.w_reward) <= 1e-9);
}

TEST_CASE("Thompson rows carry the fixed margin") {
    const Simulated s = simulate(3, 4, 30, SelectionMode::ThompsonReparam, 6);
    const ConstraintSystem cs = build_constraints(strip_rewards(s.run.history), 1.0, 1.0, ConstraintMode::Ts, 0.01);
    CHECK(cs.n_rows() == 3 * 30 * 4);
    CHECK((cs.u.array() == -0.01).all());
    CHECK(constraint_mode_for(SelectionMode::ThompsonFullVector) == ConstraintMode::Ts);
    CHECK(constraint_mode_for(SelectionMode::UcbDeterministic) == ConstraintMode::Ucb);
}

TEST_CASE("estimate is feasible within tolerance and small") {
    const Simulated s = simulate(4, 6, 50, SelectionMode::UcbDeterministic, 7);
    const ConstraintSystem cs = build_constraints(strip_rewards(s.run.history), 1.0, 0.4, ConstraintMode::Ucb);
    QpSettings tight;
    tight.eps_abs = tight.eps_rel = 1e-6;
    tight.fallback_eps = 1e-4;
    const QpSolution sol = estimate(cs, tight);
    CHECK(sol.status != QpStatus::Failed);
    CHECK(sol.max_violation <= 1e-3);
    // The true weights are feasible, so the minimum-norm point is no longer.
    CHECK(sol.theta_hat.norm() <= s.env.w_reward.norm() + 1e-3);
}

TEST_CASE("direction recovery with well-spread candidates") {
    const Simulated s = simulate(4, 6, 50, SelectionMode::UcbDeterministic, 8);
    const ConstraintSystem cs = build_constraints(strip_rewards(s.run.history), 1.0, 0.4, ConstraintMode::Ucb);
    const QpSolution sol = estimate(cs);
    CHECK(test::cosine(sol.theta_hat, s.env.w_reward) >= 0.95);
}

TEST_CASE("dump round trip") {
    const Simulated s = simulate(3, 3, 5, SelectionMode::UcbDeterministic, 9);
    const ConstraintSystem cs = build_constraints(strip_rewards(s.run.history), 1.0, 0.4, ConstraintMode::Ucb);
    std::stringstream io;
    write_constraints(cs, io);
    const ConstraintSystem back = read_constraints(io);
    CHECK(back.dim == cs.dim);
    CHECK(back.a == cs.a);
    CHECK(back.u == cs.u);
    CHECK(back.provenance == cs.provenance);
    CHECK(back.mode == cs.mode);
    CHECK(back.alpha_ibcb == cs.alpha_ibcb);
}

TEST_CASE("input errors") {
    const RowMat set = test::rows({{1.0}, {0.0}});
    CHECK_THROWS_AS(build_constraints(test::history_from({set}, {0}), 1.0, 1.0, ConstraintMode::Ucb), Error);
    CHECK_THROWS(build_constraints(scalar_history(), 0.0, 1.0, ConstraintMode::Ucb));
    CHECK_THROWS(build_constraints(scalar_history(), 1.0, -1.0, ConstraintMode::Ucb));
    EvolutionHistory bad = scalar_history();
    bad.episodes[1][0].candidates(1, 0) = std::nan("");
    CHECK_THROWS(build_constraints(bad, 1.0, 1.0, ConstraintMode::Ucb));
}

TEST_CASE("vacuous rows") {
    // Identical candidates give all-zero rows.
    const RowMat same = test::rows({{1.0}, {1.0}});
    const ConstraintSystem cs = build_constraints(test::history_from({same, same}, {0, 0}), 1.0, 1.0,
                                                  ConstraintMode::Ucb);
    CHECK(cs.count_vacuous() == 1);
    CHECK(cs.u(0) == doctest::Approx(0.0));
}

}
