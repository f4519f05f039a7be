#include "handsoff/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "handsoff/errors.hpp"

namespace handsoff {

Matrix mat_exp(const Matrix& M, double t) {
  if (M.rows() != M.cols()) {
    std::ostringstream os;
    os << "mat_exp: matrix is " << M.rows() << "x" << M.cols() << ", expected square";
    throw DimensionError(os.str());
  }
  const Eigen::Index n = M.rows();
  if (n == 0) return Matrix(0, 0);

  Matrix X = M * t;
  const double norm = X.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm)) throw NumericalError("mat_exp: non-finite argument");

  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    X /= std::ldexp(1.0, squarings);
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k < 40; ++k) {
    term = (term * X) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= eps * result.cwiseAbs().maxCoeff()) break;
  }

  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

DiscreteSystem discretize_zoh(const Matrix& F, const Matrix& G, double dt) {
  const Eigen::Index d = F.rows();
  if (F.cols() != d || G.rows() != d) {
    std::ostringstream os;
    os << "discretize_zoh: F is " << F.rows() << "x" << F.cols() << ", G is " << G.rows()
       << "x" << G.cols();
    throw DimensionError(os.str());
  }
  const Eigen::Index m = G.cols();

  // M = [F  G]     e^{M dt} = [Ad  Bd]
  //     [0  0]                [ 0   I]
  Matrix aug = Matrix::Zero(d + m, d + m);
  aug.topLeftCorner(d, d) = F;
  aug.topRightCorner(d, m) = G;
  const Matrix phi = mat_exp(aug, dt);
  return {phi.topLeftCorner(d, d), phi.topRightCorner(d, m)};
}

Vector solve_linear(const Matrix& M, const Vector& rhs) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || rhs.size() != n) {
    throw DimensionError("solve_linear: matrix must be square and match the right-hand side");
  }
  Matrix a = M;
  Vector x = rhs;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) <= kPivotThreshold) {
      std::ostringstream os;
      os << "solve_linear: pivot " << a(pivot, col) << " in column " << col
         << " below threshold";
      throw SingularMatrixError(os.str());
    }
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      std::swap(x(pivot), x(col));
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      a.row(r).tail(n - col) -= f * a.row(col).tail(n - col);
      x(r) -= f * x(col);
    }
  }
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double s = x(r);
    for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x(c);
    x(r) = s / a(r, r);
  }
  return x;
}

}  // namespace handsoff
