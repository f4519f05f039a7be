#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <vector>

#include "handsoff/errors.hpp"
#include "handsoff/lp.hpp"

namespace handsoff {

void LpProblem::validate() const {
  const Eigen::Index n = c.size();
  if (Aeq.cols() != n) throw DimensionError("LpProblem: Aeq column count differs from c");
  if (beq.size() != Aeq.rows()) throw DimensionError("LpProblem: beq length differs from Aeq rows");
  if (lo.size() != n || hi.size() != n) throw DimensionError("LpProblem: bound vectors mismatch");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lo(j)) || std::isnan(hi(j)) || lo(j) > hi(j)) {
      throw ValidationError("lo", "bound interval empty or NaN for variable " + std::to_string(j));
    }
    if (lo(j) == std::numeric_limits<double>::infinity() ||
        hi(j) == -std::numeric_limits<double>::infinity()) {
      throw ValidationError("lo", "bound interval empty for variable " + std::to_string(j));
    }
  }
  if (!c.allFinite() || !Aeq.allFinite() || !beq.allFinite()) {
    throw ValidationError("c", "non-finite LP data");
  }
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState : unsigned char { Basic, AtLower, AtUpper, AtZero };

class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& p, const SimplexOptions& opts)
      : opts_(opts), rows_(p.num_rows()), orig_(p.num_vars()), total_(orig_ + rows_) {
    A_ = Matrix::Zero(rows_, total_);
    A_.leftCols(orig_) = p.Aeq;
    lo_.resize(total_);
    hi_.resize(total_);
    lo_.head(orig_) = p.lo;
    hi_.head(orig_) = p.hi;
    lo_.tail(rows_).setZero();
    hi_.tail(rows_).setConstant(kInf);
    beq_ = p.beq;

    x_ = Vector::Zero(total_);
    state_.assign(static_cast<std::size_t>(total_), VarState::AtZero);
    for (Eigen::Index j = 0; j < orig_; ++j) {
      if (std::isfinite(lo_(j))) {
        x_(j) = lo_(j);
        state_[j] = VarState::AtLower;
      } else if (std::isfinite(hi_(j))) {
        x_(j) = hi_(j);
        state_[j] = VarState::AtUpper;
      }
    }

    // One artificial per row, signed so that its starting value is >= 0.
    const Vector residual = beq_ - A_.leftCols(orig_) * x_.head(orig_);
    basis_.resize(static_cast<std::size_t>(rows_));
    Binv_ = Matrix::Zero(rows_, rows_);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const double sign = residual(i) >= 0.0 ? 1.0 : -1.0;
      const Eigen::Index art = orig_ + i;
      A_(i, art) = sign;
      Binv_(i, i) = sign;
      x_(art) = std::abs(residual(i));
      basis_[i] = art;
      state_[art] = VarState::Basic;
    }
  }

  LpSolution solve(const Vector& cost) {
    LpSolution sol;
    const double scale = 1.0 + (beq_.size() ? beq_.cwiseAbs().maxCoeff() : 0.0);

    Vector phase1 = Vector::Zero(total_);
    phase1.tail(rows_).setOnes();
    LpStatus status = optimize(phase1);
    if (status == LpStatus::IterationLimit) return finish(sol, cost, status);
    if (x_.tail(rows_).sum() > opts_.feasibility_tol * scale) {
      return finish(sol, cost, LpStatus::Infeasible);
    }

    for (Eigen::Index i = 0; i < rows_; ++i) {
      const Eigen::Index art = orig_ + i;
      hi_(art) = 0.0;
      if (state_[art] != VarState::Basic) {
        x_(art) = 0.0;
        state_[art] = VarState::AtLower;
      }
    }
    refactor();

    Vector phase2 = Vector::Zero(total_);
    phase2.head(orig_) = cost;
    status = optimize(phase2);
    return finish(sol, cost, status);
  }

 private:
  LpSolution& finish(LpSolution& sol, const Vector& cost, LpStatus status) {
    sol.status = status;
    sol.iterations = iterations_;
    sol.x = x_.head(orig_);
    sol.objective = cost.dot(sol.x);
    sol.duals = duals_;
    return sol;
  }

  void refactor() {
    if (rows_ > 0) {
      Matrix B(rows_, rows_);
      for (Eigen::Index i = 0; i < rows_; ++i) B.col(i) = A_.col(basis_[i]);
      Binv_ = B.fullPivLu().inverse();
      Vector rhs = beq_;
      for (Eigen::Index j = 0; j < total_; ++j) {
        if (state_[j] != VarState::Basic && x_(j) != 0.0) rhs -= A_.col(j) * x_(j);
      }
      const Vector xb = Binv_ * rhs;
      for (Eigen::Index i = 0; i < rows_; ++i) x_(basis_[i]) = xb(i);
    }
    since_refactor_ = 0;
  }

  LpStatus optimize(const Vector& cost) {
    Vector cb(rows_);
    while (true) {
      if (since_refactor_ >= opts_.refactor_every) refactor();
      for (Eigen::Index i = 0; i < rows_; ++i) cb(i) = cost(basis_[i]);
      duals_ = Binv_.transpose() * cb;

      // Bland: first improving nonbasic column.
      Eigen::Index enter = -1;
      int dir = 0;
      for (Eigen::Index j = 0; j < total_; ++j) {
        const VarState st = state_[j];
        if (st == VarState::Basic || lo_(j) == hi_(j)) continue;
        const double dj = cost(j) - duals_.dot(A_.col(j));
        if ((st == VarState::AtLower || st == VarState::AtZero) && dj < -opts_.optimality_tol) {
          dir = 1;
        } else if ((st == VarState::AtUpper || st == VarState::AtZero) &&
                   dj > opts_.optimality_tol) {
          dir = -1;
        }
        if (dir != 0) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      if (iterations_ >= opts_.max_iterations) return LpStatus::IterationLimit;
      ++iterations_;
      ++since_refactor_;

      const Vector alpha = Binv_ * A_.col(enter);
      double theta = hi_(enter) - lo_(enter);  // bound flip
      if (!std::isfinite(theta)) theta = kInf;
      Eigen::Index leave = -1;
      bool leave_at_upper = false;
      double best = kInf;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double delta = -dir * alpha(i);
        if (std::abs(delta) <= opts_.pivot_tol) continue;
        const Eigen::Index bv = basis_[i];
        double limit = 0.0;
        if (delta < 0.0) {
          if (!std::isfinite(lo_(bv))) continue;
          limit = std::max(0.0, (x_(bv) - lo_(bv)) / -delta);
        } else {
          if (!std::isfinite(hi_(bv))) continue;
          limit = std::max(0.0, (hi_(bv) - x_(bv)) / delta);
        }
        const double tie = 1e-12 * (1.0 + std::min(limit, best));
        if (leave < 0 || limit < best - tie ||
            (limit <= best + tie && bv < basis_[leave])) {
          leave = i;
          best = limit;
          leave_at_upper = delta > 0.0;
        }
      }

      const bool flip = leave < 0 || theta <= best;
      const double step = flip ? theta : best;
      if (!std::isfinite(step)) return LpStatus::Unbounded;

      x_(enter) += dir * step;
      for (Eigen::Index i = 0; i < rows_; ++i) x_(basis_[i]) -= dir * alpha(i) * step;

      if (flip) {
        state_[enter] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
        x_(enter) = dir > 0 ? hi_(enter) : lo_(enter);
        continue;
      }

      const Eigen::Index out = basis_[leave];
      state_[out] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
      x_(out) = leave_at_upper ? hi_(out) : lo_(out);
      basis_[leave] = enter;
      state_[enter] = VarState::Basic;

      // Product-form update of the basis inverse.
      const double piv = alpha(leave);
      Binv_.row(leave) /= piv;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        if (i != leave && alpha(i) != 0.0) Binv_.row(i) -= alpha(i) * Binv_.row(leave);
      }
    }
  }

  SimplexOptions opts_;
  Eigen::Index rows_;
  Eigen::Index orig_;
  Eigen::Index total_;
  Matrix A_;
  Vector beq_;
  Vector lo_;
  Vector hi_;
  Vector x_;
  std::vector<VarState> state_;
  std::vector<Eigen::Index> basis_;
  Matrix Binv_;
  Vector duals_;
  long iterations_ = 0;
  int since_refactor_ = 0;
};

}  // namespace

LpSolution simplex_solve(const LpProblem& p, const SimplexOptions& opts) {
  p.validate();
  BoundedSimplex solver(p, opts);
  return solver.solve(p.c);
}

}  // namespace handsoff
