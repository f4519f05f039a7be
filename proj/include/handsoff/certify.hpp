#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "handsoff/control_law.hpp"
#include "handsoff/sim.hpp"

namespace handsoff {

struct CertifyOptions {
  double adjoint_tol = 1e-6;
  double hmax_tol = 1e-6;
  double constancy_tol = 1e-6;
  double endpoint_tol = 1e-6;
  /// Samples closer than this fraction of the horizon to a switching instant
  /// are skipped by the pointwise checks.
  double breakpoint_window = 1e-6;
  int samples = kDefaultSamples;
  int control_grid = 1001;
  /// RK4 steps for general dynamics.
  int rk4_steps = 20000;
};

struct CertificateReport {
  int eta = 1;
  Vector p_hat;
  double adjoint_residual = 0.0;
  double hmax_violation = 0.0;
  double constancy_spread = 0.0;
  double endpoint_residual = 0.0;
  /// Mean of the Hamiltonian over the checked samples.
  double hamiltonian_level = 0.0;
  bool nontriviality = false;
  bool transversality = true;
  bool passed = false;
  bool locally_optimal = false;
};

nlohmann::json to_json(const CertificateReport& report);

/// Samples excluded from the almost-everywhere checks.
std::vector<bool> excluded_samples(const Trajectory& traj, const PiecewiseConstantControl& u,
                                   double window);

/// Max over the grid of |p'(t) + F^T p(t)| with p' by central differences.
double check_adjoint(const Problem& prob, const AdjointParams& ap, const Trajectory& traj);

/// Backward RK4 integration of p' = -(df/dz)^T p from p(b) = p_hat.
std::vector<Vector> integrate_adjoint(const NonlinearDynamics& dyn, const Vector& p_hat,
                                      const Trajectory& traj);

/// Defect of the adjoint relation on integrated samples, skipping excluded ones.
double check_adjoint(const NonlinearDynamics& dyn, const std::vector<Vector>& adjoint,
                     const Trajectory& traj, const std::vector<bool>& excluded);

/// Max over non-excluded samples of sup_v H(v) - H(u(t)); the sup runs over a
/// control grid plus the analytic maximizers.
double check_hamiltonian_max(const Problem& prob, const AdjointParams& ap, const Trajectory& traj,
                             const std::vector<bool>& excluded, int grid_n);
double check_hamiltonian_max(const NonlinearDynamics& dyn, const AdmissibleSet& U, int eta,
                             const std::vector<Vector>& adjoint, const Trajectory& traj,
                             const std::vector<bool>& excluded, int grid_n);

/// max - min over samples not flagged in `excluded` (all samples if empty).
double check_constancy(const std::vector<double>& profile, const std::vector<bool>& excluded = {});

/**
 * Checks a candidate extremal (eta, p_hat, u) against the maximum principle
 * for fixed endpoints: state equation and endpoint, adjoint equation,
 * pointwise Hamiltonian maximization, constancy of the Hamiltonian and
 * nontriviality. Transversality is vacuous for fixed endpoints. Failed
 * checks are reported, not thrown.
 */
CertificateReport certify(const Problem& prob, const AdjointParams& ap,
                          const PiecewiseConstantControl& u, const CertifyOptions& opts = {});
CertificateReport certify(const NonlinearProblem& prob, const AdjointParams& ap,
                          const PiecewiseConstantControl& u, const CertifyOptions& opts = {});

}  // namespace handsoff
