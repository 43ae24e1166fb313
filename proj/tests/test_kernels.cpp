#include "ibcb/kernels.hpp"
#include "support.hpp"

#include <doctest.h>
#include <omp.h>

#include <limits>
#include <vector>

using namespace ibcb;

namespace {

struct Fixture {
    // More rows than one reduction block so block order matters.
    RowMat a;
    Vec x;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<std::int32_t> chosen;
    static constexpr int m = 6;

    Fixture() {
        Rng rng(99);
        a = test::random_rows(rng, 3 * kernels::kReduceBlock * m / 2 + 17 * m, 4);
        x = test::random_rows(rng, 4, 1).col(0);
        y.resize(static_cast<std::size_t>(a.rows()));
        w.resize(y.size());
        for (auto& v : y) v = rng.normal();
        for (auto& v : w) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        chosen.resize(static_cast<std::size_t>(a.rows() / m));
        for (auto& c : chosen) c = static_cast<std::int32_t>(rng.next_u64() % m);
    }
    RowsView view() const { return test::view(a); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel kernels match the serial references") {
    const Fixture f;
    std::vector<double> p(f.y.size()), s(f.y.size());
    kernels::mat_vec(f.view(), f.x, p);
    kernels::serial::mat_vec(f.view(), f.x, s);
    for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(p[i] == doctest::Approx(s[i]).epsilon(1e-12));

    Vec pt, st;
    kernels::mat_t_vec(f.view(), f.y, pt);
    kernels::serial::mat_t_vec(f.view(), f.y, st);
    CHECK((pt - st).norm() < 1e-9 * st.norm());

    CHECK((kernels::gram(f.view()) - kernels::serial::gram(f.view())).norm() < 1e-9 * f.a.squaredNorm());
    CHECK((kernels::weighted_gram(f.view(), f.w) - kernels::serial::weighted_gram(f.view(), f.w)).norm() <
          1e-9 * f.a.squaredNorm());

    const double lp = kernels::softmax_log_likelihood(f.view(), f.chosen, Fixture::m, f.x, 2.5);
    const double ls = kernels::serial::softmax_log_likelihood(f.view(), f.chosen, Fixture::m, f.x, 2.5);
    CHECK(lp == doctest::Approx(ls).epsilon(1e-10));
}

TEST_CASE("reductions do not depend on the thread count") {
    const Fixture f;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    Vec one;
    kernels::mat_t_vec(f.view(), f.y, one);
    const double l1 = kernels::softmax_log_likelihood(f.view(), f.chosen, Fixture::m, f.x, 1.0);
    const Mat g1 = kernels::gram(f.view());
    omp_set_num_threads(4);
    Vec four;
    kernels::mat_t_vec(f.view(), f.y, four);
    const double l4 = kernels::softmax_log_likelihood(f.view(), f.chosen, Fixture::m, f.x, 1.0);
    const Mat g4 = kernels::gram(f.view());
    omp_set_num_threads(saved);
    CHECK(one == four);
    CHECK(l1 == l4);
    CHECK(g1 == g4);
}

TEST_CASE("bounded likelihood is exact above the floor and below it otherwise") {
    const Fixture f;
    const double full = kernels::softmax_log_likelihood(f.view(), f.chosen, Fixture::m, f.x, 3.0);
    CHECK(kernels::softmax_log_likelihood_bounded(f.view(), f.chosen, Fixture::m, f.x, 3.0, full - 1.0) == full);
    CHECK(kernels::softmax_log_likelihood_bounded(f.view(), f.chosen, Fixture::m, f.x, 3.0, full) == full);
    CHECK(kernels::softmax_log_likelihood_bounded(f.view(), f.chosen, Fixture::m, f.x, 3.0, full + 1.0) < full + 1.0);
    CHECK(kernels::softmax_log_likelihood_bounded(f.view(), f.chosen, Fixture::m, f.x, 3.0, -1e-3) < -1e-3);
}

TEST_CASE("softmax likelihood by hand") {
    // One step, candidates 0 and 1 (d = 1), θ = 1, β = 1, chosen 1:
    // log(e¹ / (e⁰ + e¹)).
    const RowMat c = test::rows({{0.0}, {1.0}});
    const std::vector<std::int32_t> chosen = {1};
    const double expect = 1.0 - std::log(1.0 + std::exp(1.0));
    CHECK(kernels::softmax_log_likelihood(test::view(c), chosen, 2, test::vec({1.0}), 1.0) ==
          doctest::Approx(expect));
    CHECK(kernels::serial::softmax_log_likelihood(test::view(c), chosen, 2, test::vec({1.0}), 1.0) ==
          doctest::Approx(expect));
    const std::vector<std::int32_t> bad = {2};
    CHECK_THROWS(kernels::softmax_log_likelihood(test::view(c), bad, 2, test::vec({1.0}), 1.0));
}

}
