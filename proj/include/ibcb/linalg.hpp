#pragma once

// Dense small-dimension linear algebra. Dimensions stay tiny (d <= 64), so
// everything is stored densely and factorized with a plain Cholesky.

#include <Eigen/Dense>

#include <span>

namespace ibcb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowsView = Eigen::Map<const RowMat>;

inline constexpr double kSymmetryTol = 1e-10;

/// Lower-triangular Cholesky factor L with m = L Lᵀ.
class Cholesky {
public:
    /// Throws CholeskyError naming the first pivot that is not strictly positive.
    explicit Cholesky(const Mat& m);

    int dim() const noexcept { return static_cast<int>(lower_.rows()); }
    const Mat& lower() const noexcept { return lower_; }

    /// Returns m⁻¹ v.
    Vec solve(const Vec& v) const;
    /// Returns L⁻¹ v, so that ‖L⁻¹v‖² = vᵀ m⁻¹ v.
    Vec solve_lower(const Vec& v) const;
    /// Returns L⁻ᵀ v. Applied to a standard normal vector this samples N(0, m⁻¹).
    Vec solve_upper(const Vec& v) const;
    /// vᵀ m⁻¹ v without forming the inverse.
    double inverse_quad_form(const Vec& v) const;
    Mat inverse() const;

private:
    Mat lower_;
};

/// Symmetric positive definite matrix. Construction validates symmetry and
/// factorizes once; the factor is reused by every solve.
class SpdMatrix {
public:
    explicit SpdMatrix(Mat m);

    static SpdMatrix identity(int dim, double scale = 1.0);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Mat& matrix() const noexcept { return m_; }
    const Cholesky& factor() const noexcept { return chol_; }

private:
    Mat m_;
    Cholesky chol_;
};

/// Solves m x = v through the cached Cholesky factor.
Vec spd_solve(const SpdMatrix& m, const Vec& v);

/// ⟨s, Ψ⁻¹s⟩ given the already-solved Ψ⁻¹s.
double quad_form(const Vec& m_inv_applied, const Vec& s);

/// Index of the largest entry, lowest index on ties. Requires a non-empty input.
int argmax_lowest(std::span<const double> values);
int argmax_lowest(const Vec& values);

}  // namespace ibcb
