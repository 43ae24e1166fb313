#include "ibcb/error.hpp"
#include "ibcb/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <vector>

using namespace ibcb;

TEST_SUITE("linalg") {

TEST_CASE("cholesky of a 2x2 matches the hand factor") {
    Mat m(2, 2);
    m << 4, 2, 2, 3;
    const Cholesky c(m);
    // L = [[2, 0], [1, sqrt(2)]]
    CHECK(c.lower()(0, 0) == doctest::Approx(2.0));
    CHECK(c.lower()(1, 0) == doctest::Approx(1.0));
    CHECK(c.lower()(1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(c.lower()(0, 1) == 0.0);
}

TEST_CASE("solves and quadratic forms agree with an explicit inverse") {
    Rng rng(3);
    const RowMat g = test::random_rows(rng, 12, 5);
    Mat m = g.transpose() * g;
    m.diagonal().array() += 0.5;
    const Cholesky c(m);
    const Mat inv = m.inverse();
    const Vec v = test::random_rows(rng, 5, 1).col(0);
    CHECK((c.solve(v) - inv * v).norm() < 1e-10);
    CHECK(c.inverse_quad_form(v) == doctest::Approx(v.dot(inv * v)).epsilon(1e-12));
    CHECK(c.solve_lower(v).squaredNorm() == doctest::Approx(v.dot(inv * v)).epsilon(1e-12));
    CHECK((c.inverse() - inv).norm() < 1e-10);
    // L⁻ᵀ z has covariance m⁻¹: L⁻ᵀ L⁻¹ = m⁻¹.
    Mat cols(5, 5);
    for (int k = 0; k < 5; ++k) cols.col(k) = c.solve_upper(c.solve_lower(Vec::Unit(5, k)));
    CHECK((cols - inv).norm() < 1e-10);
}

TEST_CASE("indefinite input names the failing pivot") {
    Mat m(3, 3);
    m << 1, 0, 0, 0, 1, 2, 0, 2, 1;
    try {
        Cholesky c(m);
        FAIL("expected CholeskyError");
    } catch (const CholeskyError& e) {
        CHECK(e.pivot() == 2);
        CHECK(e.value() < 0.0);
    }
}

TEST_CASE("spd matrix rejects asymmetric input") {
    Mat m(2, 2);
    m << 2, 1, 0, 2;
    CHECK_THROWS_AS(SpdMatrix{m}, Error);
    const SpdMatrix id = SpdMatrix::identity(3, 2.0);
    CHECK(spd_solve(id, Vec::Ones(3)).isApprox(Vec::Constant(3, 0.5)));
}

TEST_CASE("argmax picks the lowest index among ties") {
    const std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
    CHECK(argmax_lowest(v) == 1);
    CHECK(argmax_lowest(test::vec({0.0, 0.0})) == 0);
    CHECK_THROWS(argmax_lowest(std::vector<double>{}));
}

}
