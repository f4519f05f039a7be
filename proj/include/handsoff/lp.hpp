#pragma once

#include <optional>
#include <string>

#include "handsoff/model.hpp"

namespace handsoff {

/// min c^T x  s.t.  Aeq x = beq,  lo <= x <= hi  (bounds may be infinite).
struct LpProblem {
  Vector c;
  Matrix Aeq;
  Vector beq;
  Vector lo;
  Vector hi;

  Eigen::Index num_vars() const { return c.size(); }
  Eigen::Index num_rows() const { return Aeq.rows(); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(LpStatus status);

struct LpSolution {
  Vector x;
  double objective = 0.0;
  LpStatus status = LpStatus::Infeasible;
  long iterations = 0;
  /// Row multipliers y with c - Aeq^T y >= 0 at lower bounds and <= 0 at upper.
  Vector duals;
};

struct SimplexOptions {
  long max_iterations = 1'000'000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
};

/**
 * Bounded-variable primal simplex (revised form, dense basis inverse).
 *
 * Phase I minimizes the sum of one artificial per row; the artificials are
 * then clamped to [0, 0] and phase II runs on the true cost. Entering and
 * leaving choices follow Bland's smallest-index rule, so the method cannot
 * cycle. Nonbasic variables sit at a finite bound, or at 0 when free.
 */
LpSolution simplex_solve(const LpProblem& p, const SimplexOptions& opts = {});

inline constexpr int kDefaultIntervals = 1000;

/**
 * Exact-discretization L1 LP on a uniform grid of N intervals. Variables are
 * ordered [u+ (N*m, interval-major) | u- (N*m)], bounded by the box
 * magnitudes; one equality row per state enforces the endpoint.
 */
LpProblem build_l1_lp(const Problem& prob, int N);

struct L1Result {
  PiecewiseConstantControl control;
  double cost = 0.0;
  LpSolution lp;
};

/// Solves the L1 LP and reassembles u_k = u+_k - u-_k. Throws InfeasibleError
/// or Error on non-optimal statuses.
L1Result l1_solve(const Problem& prob, int N = kDefaultIntervals);

/**
 * Looks for a second L1-optimal control that is active on the whole horizon:
 * each channel is forced to carry at least floor_fraction of its bound with
 * the sign of its net action in `reference`. Returns nothing when that LP is
 * infeasible or its cost exceeds reference_cost + cost_tol.
 */
std::optional<L1Result> l1_nonsparse_witness(const Problem& prob, int N,
                                             const PiecewiseConstantControl& reference,
                                             double reference_cost, double floor_fraction = 0.01,
                                             double cost_tol = 1e-6);

/**
 * Smallest s such that B is reachable from A within horizon T using controls
 * in s * U on an N-interval ZOH grid (the gauge of the target in the
 * reachable zonotope). s <= 1 means feasible under U; +inf if unreachable.
 */
double linf_feasibility(const Problem& prob, double T, int N);

}  // namespace handsoff
