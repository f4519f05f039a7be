#include <cmath>
#include <limits>
#include <vector>

#include "handsoff/errors.hpp"
#include "handsoff/lp.hpp"

namespace handsoff {

namespace {

void require_box(const Problem& prob, const char* what) {
  if (!prob.U.is_box()) {
    throw ValidationError("U", std::string(what) + " is defined for box admissible sets only");
  }
}

/// Columns Phi_k = Ad^{N-1-k} Bd, k = 0..N-1, stacked horizontally (d x N*m).
Matrix input_to_endpoint(const Problem& prob, double T, int N) {
  const Eigen::Index d = prob.state_dim();
  const Eigen::Index m = prob.input_dim();
  const auto sys = discretize_zoh(prob.F, prob.G, T / N);
  Matrix phi(d, static_cast<Eigen::Index>(N) * m);
  Matrix block = sys.Bd;
  for (int k = N - 1; k >= 0; --k) {
    phi.middleCols(static_cast<Eigen::Index>(k) * m, m) = block;
    if (k > 0) block = sys.Ad * block;
  }
  return phi;
}

Vector endpoint_target(const Problem& prob, double T) {
  return prob.B - mat_exp(prob.F, T) * prob.A;
}

void check_intervals(int N) {
  if (N < 1 || N > 1'000'000) throw ValidationError("N", "interval count must be in [1, 1e6]");
}

L1Result assemble(const Problem& prob, int N, const LpSolution& sol) {
  if (sol.status == LpStatus::Infeasible) {
    throw InfeasibleError("L1 LP infeasible: endpoint unreachable on the " + std::to_string(N) +
                          "-interval grid");
  }
  if (sol.status != LpStatus::Optimal) {
    throw Error("L1 LP terminated with status " + to_string(sol.status));
  }
  const Eigen::Index m = prob.input_dim();
  const Eigen::Index half = static_cast<Eigen::Index>(N) * m;
  const double dt = prob.horizon() / N;
  std::vector<double> bps(static_cast<std::size_t>(N) + 1);
  std::vector<Vector> vals(static_cast<std::size_t>(N));
  for (int k = 0; k <= N; ++k) bps[k] = prob.a + k * dt;
  bps.back() = prob.b;
  for (int k = 0; k < N; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * m;
    vals[k] = sol.x.segment(off, m) - sol.x.segment(half + off, m);
  }
  return {PiecewiseConstantControl(std::move(bps), std::move(vals)), sol.objective, sol};
}

}  // namespace

LpProblem build_l1_lp(const Problem& prob, int N) {
  require_box(prob, "the L1 relaxation");
  check_intervals(N);
  const Eigen::Index m = prob.input_dim();
  const Eigen::Index half = static_cast<Eigen::Index>(N) * m;
  const double dt = prob.horizon() / N;
  const Matrix phi = input_to_endpoint(prob, prob.horizon(), N);

  LpProblem lp;
  lp.c = Vector::Constant(2 * half, dt);
  lp.Aeq.resize(prob.state_dim(), 2 * half);
  lp.Aeq.leftCols(half) = phi;
  lp.Aeq.rightCols(half) = -phi;
  lp.beq = endpoint_target(prob, prob.horizon());
  lp.lo = Vector::Zero(2 * half);
  lp.hi.resize(2 * half);
  for (int k = 0; k < N; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * m;
    lp.hi.segment(off, m) = prob.U.upper();
    lp.hi.segment(half + off, m) = -prob.U.lower();
  }
  return lp;
}

L1Result l1_solve(const Problem& prob, int N) {
  const LpProblem lp = build_l1_lp(prob, N);
  return assemble(prob, N, simplex_solve(lp));
}

std::optional<L1Result> l1_nonsparse_witness(const Problem& prob, int N,
                                             const PiecewiseConstantControl& reference,
                                             double reference_cost, double floor_fraction,
                                             double cost_tol) {
  LpProblem lp = build_l1_lp(prob, N);
  const Eigen::Index m = prob.input_dim();
  const Eigen::Index half = static_cast<Eigen::Index>(N) * m;

  Vector net = Vector::Zero(m);
  for (std::size_t k = 0; k < reference.num_segments(); ++k) {
    net += reference.values()[k] * reference.duration(k);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (net(i) == 0.0) continue;
    for (int k = 0; k < N; ++k) {
      const Eigen::Index plus = static_cast<Eigen::Index>(k) * m + i;
      const Eigen::Index minus = half + plus;
      if (net(i) > 0.0) {
        lp.lo(plus) = floor_fraction * lp.hi(plus);
        lp.hi(minus) = 0.0;
      } else {
        lp.lo(minus) = floor_fraction * lp.hi(minus);
        lp.hi(plus) = 0.0;
      }
    }
  }
  const LpSolution sol = simplex_solve(lp);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  if (sol.objective > reference_cost + cost_tol) return std::nullopt;
  return assemble(prob, N, sol);
}

double linf_feasibility(const Problem& prob, double T, int N) {
  require_box(prob, "the L-infinity feasibility test");
  check_intervals(N);
  if (!(T > 0.0)) throw ValidationError("T", "horizon must be positive");
  const Vector target = endpoint_target(prob, T);
  const double scale = 1.0 + prob.A.cwiseAbs().maxCoeff() + prob.B.cwiseAbs().maxCoeff();
  if (target.cwiseAbs().maxCoeff() <= 1e-14 * scale) return 0.0;

  // max lambda  s.t.  sum_k Phi_k w_k = lambda * target,  w_k in U.
  // The smallest admissible scaling of U is then 1 / lambda.
  const Eigen::Index m = prob.input_dim();
  const Eigen::Index nw = static_cast<Eigen::Index>(N) * m;
  LpProblem lp;
  lp.c = Vector::Zero(nw + 1);
  lp.c(nw) = -1.0;
  lp.Aeq.resize(prob.state_dim(), nw + 1);
  lp.Aeq.leftCols(nw) = input_to_endpoint(prob, T, N);
  lp.Aeq.col(nw) = -target;
  lp.beq = Vector::Zero(prob.state_dim());
  lp.lo.resize(nw + 1);
  lp.hi.resize(nw + 1);
  for (int k = 0; k < N; ++k) {
    lp.lo.segment(static_cast<Eigen::Index>(k) * m, m) = prob.U.lower();
    lp.hi.segment(static_cast<Eigen::Index>(k) * m, m) = prob.U.upper();
  }
  lp.lo(nw) = 0.0;
  lp.hi(nw) = std::numeric_limits<double>::infinity();

  const LpSolution sol = simplex_solve(lp);
  if (sol.status == LpStatus::Unbounded) return 0.0;
  if (sol.status != LpStatus::Optimal) {
    throw Error("L-infinity feasibility LP terminated with status " + to_string(sol.status));
  }
  const double lambda = sol.x(nw);
  if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / lambda;
}

}  // namespace handsoff
