#include "handsoff/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "handsoff/errors.hpp"

namespace handsoff {

nlohmann::json to_json(const CertificateReport& r) {
  nlohmann::json p = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.p_hat.size(); ++i) p.push_back(r.p_hat(i));
  return {{"eta", r.eta},
          {"p_hat", p},
          {"adjoint_residual", r.adjoint_residual},
          {"hmax_violation", r.hmax_violation},
          {"constancy_spread", r.constancy_spread},
          {"endpoint_residual", r.endpoint_residual},
          {"hamiltonian_level", r.hamiltonian_level},
          {"nontriviality", r.nontriviality},
          {"transversality", r.transversality},
          {"passed", r.passed},
          {"locally_optimal", r.locally_optimal}};
}

std::vector<bool> excluded_samples(const Trajectory& traj, const PiecewiseConstantControl& u,
                                   double window) {
  const double width = window * (u.end() - u.start());
  const auto& bps = u.breakpoints();
  std::vector<bool> out(traj.size(), false);
  for (std::size_t j = 0; j < traj.size(); ++j) {
    for (std::size_t k = 1; k + 1 < bps.size(); ++k) {
      if (std::abs(traj.grid[j] - bps[k]) <= width) {
        out[j] = true;
        break;
      }
    }
  }
  return out;
}

double check_adjoint(const Problem& prob, const AdjointParams& ap, const Trajectory& traj) {
  const Matrix Ft = prob.F.transpose();
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, prob.horizon());
  double worst = 0.0;
  for (double t : traj.grid) {
    // The closed form extends past [a, b], so the stencil may straddle the ends.
    const Vector p = mat_exp(Ft, prob.b - t) * ap.p_hat;
    const Vector plus = mat_exp(Ft, prob.b - (t + h)) * ap.p_hat;
    const Vector minus = mat_exp(Ft, prob.b - (t - h)) * ap.p_hat;
    const Vector pdot = (plus - minus) / (2.0 * h);
    worst = std::max(worst, (pdot + Ft * p).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

/// Cubic Hermite interpolation of the state at the midpoint of a step.
Vector hermite_mid(const Vector& z0, const Vector& z1, const Vector& f0, const Vector& f1,
                   double h) {
  return 0.5 * (z0 + z1) + (h / 8.0) * (f0 - f1);
}

bool same_segment(const Trajectory& traj, std::size_t from, std::size_t to) {
  // No switch strictly inside (from, to].
  for (std::size_t j = from + 1; j < to; ++j) {
    if (traj.at_breakpoint[j]) return false;
  }
  return true;
}

}  // namespace

std::vector<Vector> integrate_adjoint(const NonlinearDynamics& dyn, const Vector& p_hat,
                                      const Trajectory& traj) {
  if (p_hat.size() != dyn.state_dim) throw DimensionError("integrate_adjoint: p_hat length");
  const std::size_t n = traj.size();
  std::vector<Vector> p(n);
  p[n - 1] = p_hat;
  for (std::size_t j = n - 1; j > 0; --j) {
    const std::size_t i = j - 1;
    const double h = traj.grid[j] - traj.grid[i];
    const Vector& v = traj.controls[i];
    const Vector& z0 = traj.states[i];
    const Vector& z1 = traj.states[j];
    const Vector zm = hermite_mid(z0, z1, dyn.f(z0, v), dyn.f(z1, v), h);
    const Matrix J1 = state_jacobian(dyn, z1, v).transpose();
    const Matrix Jm = state_jacobian(dyn, zm, v).transpose();
    const Matrix J0 = state_jacobian(dyn, z0, v).transpose();
    // Backward in time: dp/ds = J^T p with s = b - t.
    const Vector k1 = J1 * p[j];
    const Vector k2 = Jm * (p[j] + 0.5 * h * k1);
    const Vector k3 = Jm * (p[j] + 0.5 * h * k2);
    const Vector k4 = J0 * (p[j] + h * k3);
    p[i] = p[j] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!p[i].allFinite()) throw NumericalError("integrate_adjoint: non-finite adjoint");
  }
  return p;
}

double check_adjoint(const NonlinearDynamics& dyn, const std::vector<Vector>& adjoint,
                     const Trajectory& traj, const std::vector<bool>& excluded) {
  const std::size_t n = traj.size();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (excluded[j] || traj.at_breakpoint[j]) continue;
    const double hl = traj.grid[j] - traj.grid[j - 1];
    const double hr = traj.grid[j + 1] - traj.grid[j];
    Vector pdot;
    const bool uniform5 = j >= 2 && j + 2 < n && same_segment(traj, j - 2, j + 2) &&
                          std::abs(hl - hr) <= 1e-9 * hr &&
                          std::abs(traj.grid[j - 1] - traj.grid[j - 2] - hl) <= 1e-9 * hr &&
                          std::abs(traj.grid[j + 2] - traj.grid[j + 1] - hr) <= 1e-9 * hr;
    if (uniform5) {
      pdot = (adjoint[j - 2] - 8.0 * adjoint[j - 1] + 8.0 * adjoint[j + 1] - adjoint[j + 2]) /
             (12.0 * hr);
    } else if (same_segment(traj, j - 1, j + 1)) {
      // Three-point derivative on a non-uniform stencil.
      pdot = -hr / (hl * (hl + hr)) * adjoint[j - 1] + (hr - hl) / (hl * hr) * adjoint[j] +
             hl / (hr * (hl + hr)) * adjoint[j + 1];
    } else {
      continue;
    }
    const Matrix J = state_jacobian(dyn, traj.states[j], traj.controls[j]);
    worst = std::max(worst, (pdot + J.transpose() * adjoint[j]).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace {

std::vector<Vector> checking_grid(const AdmissibleSet& U, int grid_n) {
  const auto m = static_cast<double>(U.dim());
  const int per_axis = std::max(3, static_cast<int>(std::pow(static_cast<double>(grid_n), 1.0 / m)));
  return control_grid(U, U.dim() == 1 ? grid_n : per_axis);
}

}  // namespace

double check_hamiltonian_max(const Problem& prob, const AdjointParams& ap, const Trajectory& traj,
                             const std::vector<bool>& excluded, int grid_n) {
  const auto grid = checking_grid(prob.U, grid_n);
  const auto p = adjoint_samples(prob, ap, traj.grid);
  double worst = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (excluded[j]) continue;
    const Vector drift = prob.F * traj.states[j];
    const auto value = [&](const Vector& v) {
      return hamiltonian(p[j], drift + prob.G * v, v, ap.eta);
    };
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& v : grid) sup = std::max(sup, value(v));
    for (const auto& v : control_candidates(prob, ap, traj.grid[j]).representatives()) {
      if (prob.U.contains(v)) sup = std::max(sup, value(v));
    }
    worst = std::max(worst, sup - value(traj.controls[j]));
  }
  return std::max(0.0, worst);
}

double check_hamiltonian_max(const NonlinearDynamics& dyn, const AdmissibleSet& U, int eta,
                             const std::vector<Vector>& adjoint, const Trajectory& traj,
                             const std::vector<bool>& excluded, int grid_n) {
  const auto grid = checking_grid(U, grid_n);
  double worst = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (excluded[j]) continue;
    const auto value = [&](const Vector& v) {
      return hamiltonian(adjoint[j], dyn.f(traj.states[j], v), v, eta);
    };
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& v : grid) sup = std::max(sup, value(v));
    worst = std::max(worst, sup - value(traj.controls[j]));
  }
  return std::max(0.0, worst);
}

double check_constancy(const std::vector<double>& profile, const std::vector<bool>& excluded) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (!excluded.empty() && excluded[j]) continue;
    lo = std::min(lo, profile[j]);
    hi = std::max(hi, profile[j]);
  }
  return hi >= lo ? hi - lo : 0.0;
}

namespace {

double mean_over(const std::vector<double>& profile, const std::vector<bool>& excluded) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (excluded[j]) continue;
    sum += profile[j];
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

void finalize(CertificateReport& r, const CertifyOptions& opts, bool affine) {
  r.passed = r.adjoint_residual <= opts.adjoint_tol && r.hmax_violation <= opts.hmax_tol &&
             r.constancy_spread <= opts.constancy_tol && r.endpoint_residual <= opts.endpoint_tol &&
             r.nontriviality && r.transversality;
  r.locally_optimal = r.passed && r.eta == 1 && affine;
}

bool adjoint_nontrivial(int eta, const std::vector<Vector>& p) {
  if (eta == 1) return true;
  return std::all_of(p.begin(), p.end(), [](const Vector& v) { return v.norm() > 0.0; });
}

}  // namespace

CertificateReport certify(const Problem& prob, const AdjointParams& ap,
                          const PiecewiseConstantControl& u, const CertifyOptions& opts) {
  if (ap.p_hat.size() != prob.state_dim()) {
    throw DimensionError("certify: p_hat has " + std::to_string(ap.p_hat.size()) +
                         " entries, state dimension is " + std::to_string(prob.state_dim()));
  }
  if (u.input_dim() != prob.input_dim()) {
    throw DimensionError("certify: control dimension does not match the problem");
  }
  u.check_against(prob);

  CertificateReport r;
  r.eta = ap.eta;
  r.p_hat = ap.p_hat;
  const Trajectory traj = propagate_exact(prob, u, opts.samples);
  const auto excluded = excluded_samples(traj, u, opts.breakpoint_window);
  r.endpoint_residual = endpoint_residual(traj, prob.B);
  r.nontriviality = adjoint_nontrivial(ap.eta, adjoint_samples(prob, ap, traj.grid));
  r.transversality = true;
  r.adjoint_residual = check_adjoint(prob, ap, traj);
  r.hmax_violation = check_hamiltonian_max(prob, ap, traj, excluded, opts.control_grid);
  const auto profile = hamiltonian_profile(prob, ap, traj);
  r.constancy_spread = check_constancy(profile, excluded);
  r.hamiltonian_level = mean_over(profile, excluded);
  finalize(r, opts, true);
  return r;
}

CertificateReport certify(const NonlinearProblem& prob, const AdjointParams& ap,
                          const PiecewiseConstantControl& u, const CertifyOptions& opts) {
  const NonlinearDynamics& dyn = prob.dynamics;
  if (ap.p_hat.size() != dyn.state_dim || prob.A.size() != dyn.state_dim ||
      prob.B.size() != dyn.state_dim) {
    throw DimensionError("certify: state dimension mismatch");
  }
  if (u.input_dim() != dyn.input_dim || prob.U.dim() != dyn.input_dim) {
    throw DimensionError("certify: control dimension does not match the dynamics");
  }
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    if (!prob.U.contains(u.values()[k])) {
      throw ValidationError("control.values", "segment " + std::to_string(k) + " lies outside U");
    }
  }

  CertificateReport r;
  r.eta = ap.eta;
  r.p_hat = ap.p_hat;
  const Trajectory traj = propagate_rk4(dyn, u, prob.A, opts.rk4_steps);
  const auto excluded = excluded_samples(traj, u, opts.breakpoint_window);
  const auto adjoint = integrate_adjoint(dyn, ap.p_hat, traj);
  r.endpoint_residual = endpoint_residual(traj, prob.B);
  r.nontriviality = adjoint_nontrivial(ap.eta, adjoint);
  r.transversality = true;
  r.adjoint_residual = check_adjoint(dyn, adjoint, traj, excluded);

  // Pointwise checks on a thinned subset keep the control-grid sweep cheap.
  const std::size_t stride = std::max<std::size_t>(1, traj.size() / static_cast<std::size_t>(opts.samples));
  std::vector<bool> thinned = excluded;
  for (std::size_t j = 0; j < thinned.size(); ++j) {
    if (j % stride != 0 && j + 1 != thinned.size()) thinned[j] = true;
  }
  r.hmax_violation =
      check_hamiltonian_max(dyn, prob.U, ap.eta, adjoint, traj, thinned, opts.control_grid);
  const auto profile = hamiltonian_profile(dyn, ap.eta, adjoint, traj);
  r.constancy_spread = check_constancy(profile, excluded);
  r.hamiltonian_level = mean_over(profile, excluded);
  finalize(r, opts, dyn.affine_in_state);
  return r;
}

}  // namespace handsoff
