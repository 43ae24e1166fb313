#include "ibcb/linalg.hpp"

#include "ibcb/error.hpp"

#include <cmath>
#include <string>

namespace ibcb {

Cholesky::Cholesky(const Mat& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("cholesky: matrix is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    }
    const int n = static_cast<int>(m.rows());
    lower_ = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (int k = 0; k < j; ++k) diag -= lower_(j, k) * lower_(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) throw CholeskyError(j, diag);
        const double ljj = std::sqrt(diag);
        lower_(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double acc = m(i, j);
            for (int k = 0; k < j; ++k) acc -= lower_(i, k) * lower_(j, k);
            lower_(i, j) = acc / ljj;
        }
    }
}

Vec Cholesky::solve_lower(const Vec& v) const {
    if (v.size() != lower_.rows()) throw DimensionError("cholesky solve: length mismatch");
    const int n = dim();
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double acc = v(i);
        for (int k = 0; k < i; ++k) acc -= lower_(i, k) * y(k);
        y(i) = acc / lower_(i, i);
    }
    return y;
}

Vec Cholesky::solve_upper(const Vec& v) const {
    if (v.size() != lower_.rows()) throw DimensionError("cholesky solve: length mismatch");
    const int n = dim();
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double acc = v(i);
        for (int k = i + 1; k < n; ++k) acc -= lower_(k, i) * x(k);
        x(i) = acc / lower_(i, i);
    }
    return x;
}

Vec Cholesky::solve(const Vec& v) const { return solve_upper(solve_lower(v)); }

double Cholesky::inverse_quad_form(const Vec& v) const { return solve_lower(v).squaredNorm(); }

Mat Cholesky::inverse() const {
    const int n = dim();
    Mat inv(n, n);
    for (int j = 0; j < n; ++j) inv.col(j) = solve(Vec::Unit(n, j));
    return 0.5 * (inv + inv.transpose());
}

namespace {

Mat checked_symmetric(Mat m) {
    if (m.rows() != m.cols()) throw DimensionError("spd matrix must be square");
    if (m.rows() == 0) throw DimensionError("spd matrix must have positive dimension");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * (1.0 + m.cwiseAbs().maxCoeff())) {
        throw Error("spd matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }
    return m;
}

}  // namespace

SpdMatrix::SpdMatrix(Mat m) : m_(checked_symmetric(std::move(m))), chol_(m_) {}

SpdMatrix SpdMatrix::identity(int dim, double scale) {
    return SpdMatrix(scale * Mat::Identity(dim, dim));
}

Vec spd_solve(const SpdMatrix& m, const Vec& v) {
    if (v.size() != m.dim()) {
        throw DimensionError("spd_solve: vector length " + std::to_string(v.size()) +
                             " does not match dimension " + std::to_string(m.dim()));
    }
    return m.factor().solve(v);
}

double quad_form(const Vec& m_inv_applied, const Vec& s) {
    if (m_inv_applied.size() != s.size()) throw DimensionError("quad_form: length mismatch");
    return std::max(0.0, s.dot(m_inv_applied));
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw Error("argmax over an empty set");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

int argmax_lowest(const Vec& values) {
    return argmax_lowest(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

}  // namespace ibcb
