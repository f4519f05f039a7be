#pragma once

#include <Eigen/Core>

namespace handsoff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exact zero-order-hold discretization of x' = F x + G u.
struct DiscreteSystem {
  Matrix Ad;  // e^{F dt}
  Matrix Bd;  // (int_0^dt e^{F s} ds) G
};

/**
 * Matrix exponential e^{M t} by scaling and squaring with a Taylor kernel.
 *
 * The scaled argument has 1-norm at most 1/2; the series is summed until the
 * next term drops below machine epsilon relative to the partial sum.
 */
Matrix mat_exp(const Matrix& M, double t = 1.0);

/// ZOH discretization via the exponential of the augmented block [[F, G], [0, 0]].
DiscreteSystem discretize_zoh(const Matrix& F, const Matrix& G, double dt);

/// Pivot magnitude below which solve_linear declares the matrix singular.
inline constexpr double kPivotThreshold = 1e-12;

/// Gaussian elimination with partial pivoting. Throws SingularMatrixError.
Vector solve_linear(const Matrix& M, const Vector& rhs);

}  // namespace handsoff
