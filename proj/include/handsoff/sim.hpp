#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "handsoff/control_law.hpp"
#include "handsoff/model.hpp"

namespace handsoff {

/// Sampled state-action trajectory. controls[j] is the right-limit value in
/// effect at grid[j]; at_breakpoint[j] marks interior control switches.
struct Trajectory {
  std::vector<double> grid;
  std::vector<Vector> states;
  std::vector<Vector> controls;
  std::vector<bool> at_breakpoint;

  std::size_t size() const { return grid.size(); }
};

/**
 * General dynamics z' = f(z, u). The state Jacobian is optional; when absent
 * central differences with step sqrt(eps) * (1 + ||z||) are used.
 * `f` and `jacobian` may be called concurrently by parallel callers; the
 * caller is responsible for making them safe to do so.
 */
struct NonlinearDynamics {
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  std::function<Vector(const Vector&, const Vector&)> f;
  std::function<Matrix(const Vector&, const Vector&)> jacobian;
  /// Declared by the caller; enables the local-optimality flag.
  bool affine_in_state = false;
};

/// Fixed-endpoint problem with general dynamics, used for certification.
struct NonlinearProblem {
  NonlinearDynamics dynamics;
  double a = 0.0;
  double b = 0.0;
  Vector A;
  Vector B;
  AdmissibleSet U = AdmissibleSet::ball(1.0, 1);
};

NonlinearDynamics linear_dynamics(const Problem& prob);
Matrix state_jacobian(const NonlinearDynamics& dyn, const Vector& z, const Vector& u);

inline constexpr int kDefaultSamples = 1000;

/// Uniform grid of `samples` points on [start, end] merged with the control
/// breakpoints.
std::vector<double> sample_grid(const PiecewiseConstantControl& u, int samples);

/// Exact piecewise propagation of an LTI plant under a piecewise-constant
/// control, sampled on sample_grid(u, samples).
Trajectory propagate_exact(const Problem& prob, const PiecewiseConstantControl& u,
                           int samples = kDefaultSamples);

/// z(b) only, one ZOH step per control segment.
Vector propagate_endpoint(const Problem& prob, const PiecewiseConstantControl& u);

/// Classical fixed-step RK4; control breakpoints are forced onto the step grid
/// by allotting each segment a proportional whole number of steps.
Trajectory propagate_rk4(const NonlinearDynamics& dyn, const PiecewiseConstantControl& u,
                         const Vector& A, int steps);

double endpoint_residual(const Trajectory& traj, const Vector& B);

/// p(t) sampled on the trajectory grid (LTI closed form).
std::vector<Vector> adjoint_samples(const Problem& prob, const AdjointParams& ap,
                                    const std::vector<double>& grid);

/// H^eta(z(t), p(t), u(t)) on the trajectory grid.
std::vector<double> hamiltonian_profile(const Problem& prob, const AdjointParams& ap,
                                        const Trajectory& traj);
std::vector<double> hamiltonian_profile(const NonlinearDynamics& dyn, int eta,
                                        const std::vector<Vector>& adjoint,
                                        const Trajectory& traj);

/// Trajectory CSV: t,z_1..z_d,u_1..u_m and, with an adjoint, s_1..s_m,H.
void write_trajectory_csv(const Problem& prob, const Trajectory& traj,
                          const std::optional<AdjointParams>& ap, std::ostream& os);
void save_trajectory(const Problem& prob, const Trajectory& traj,
                     const std::optional<AdjointParams>& ap, const std::filesystem::path& path);

}  // namespace handsoff
