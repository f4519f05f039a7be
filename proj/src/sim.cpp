#include "handsoff/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "handsoff/errors.hpp"

namespace handsoff {

NonlinearDynamics linear_dynamics(const Problem& prob) {
  NonlinearDynamics dyn;
  dyn.state_dim = prob.state_dim();
  dyn.input_dim = prob.input_dim();
  const Matrix F = prob.F;
  const Matrix G = prob.G;
  dyn.f = [F, G](const Vector& z, const Vector& u) -> Vector { return F * z + G * u; };
  dyn.jacobian = [F](const Vector&, const Vector&) -> Matrix { return F; };
  dyn.affine_in_state = true;
  return dyn;
}

Matrix state_jacobian(const NonlinearDynamics& dyn, const Vector& z, const Vector& u) {
  if (dyn.jacobian) return dyn.jacobian(z, u);
  const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + z.norm());
  Matrix J(dyn.state_dim, dyn.state_dim);
  Vector zp = z, zm = z;
  for (Eigen::Index j = 0; j < dyn.state_dim; ++j) {
    zp(j) = z(j) + h;
    zm(j) = z(j) - h;
    J.col(j) = (dyn.f(zp, u) - dyn.f(zm, u)) / (2.0 * h);
    zp(j) = zm(j) = z(j);
  }
  if (!J.allFinite()) throw NumericalError("state_jacobian: non-finite finite-difference values");
  return J;
}

std::vector<double> sample_grid(const PiecewiseConstantControl& u, int samples) {
  if (samples < 2) throw ValidationError("samples", "need at least 2 grid samples");
  const double t0 = u.start();
  const double t1 = u.end();
  const double merge = 1e-12 * (t1 - t0);
  std::vector<double> grid = u.breakpoints();
  for (int k = 1; k + 1 < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1);
    auto it = std::lower_bound(u.breakpoints().begin(), u.breakpoints().end(), t);
    const bool near_next = it != u.breakpoints().end() && *it - t <= merge;
    const bool near_prev = it != u.breakpoints().begin() && t - *(it - 1) <= merge;
    if (!near_next && !near_prev) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

namespace {

std::vector<bool> breakpoint_flags(const PiecewiseConstantControl& u,
                                   const std::vector<double>& grid) {
  std::vector<bool> flags(grid.size(), false);
  const auto& bps = u.breakpoints();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    flags[j] = std::binary_search(bps.begin() + 1, bps.end() - 1, grid[j]);
  }
  return flags;
}

void check_dims(const Problem& prob, const PiecewiseConstantControl& u) {
  if (u.input_dim() != prob.input_dim()) {
    throw DimensionError("control has " + std::to_string(u.input_dim()) +
                         " channels, problem expects " + std::to_string(prob.input_dim()));
  }
}

}  // namespace

Trajectory propagate_exact(const Problem& prob, const PiecewiseConstantControl& u, int samples) {
  check_dims(prob, u);
  Trajectory traj;
  traj.grid = sample_grid(u, samples);
  traj.at_breakpoint = breakpoint_flags(u, traj.grid);
  traj.states.reserve(traj.grid.size());
  traj.controls.reserve(traj.grid.size());

  // Each sample is propagated from the start of its own segment.
  Vector seg_state = prob.A;
  std::size_t seg = 0;
  for (double t : traj.grid) {
    const std::size_t k = u.segment_index(t);
    while (seg < k) {
      const auto sys = discretize_zoh(prob.F, prob.G, u.duration(seg));
      seg_state = sys.Ad * seg_state + sys.Bd * u.values()[seg];
      ++seg;
    }
    const double tau = t - u.breakpoints()[seg];
    if (tau == 0.0) {
      traj.states.push_back(seg_state);
    } else {
      const auto sys = discretize_zoh(prob.F, prob.G, tau);
      traj.states.push_back(sys.Ad * seg_state + sys.Bd * u.values()[seg]);
    }
    traj.controls.push_back(u.values()[k]);
  }
  return traj;
}

Vector propagate_endpoint(const Problem& prob, const PiecewiseConstantControl& u) {
  check_dims(prob, u);
  Vector z = prob.A;
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    const auto sys = discretize_zoh(prob.F, prob.G, u.duration(k));
    z = sys.Ad * z + sys.Bd * u.values()[k];
  }
  return z;
}

Trajectory propagate_rk4(const NonlinearDynamics& dyn, const PiecewiseConstantControl& u,
                         const Vector& A, int steps) {
  if (steps < 10) throw ValidationError("steps", "RK4 needs at least 10 steps");
  if (A.size() != dyn.state_dim || u.input_dim() != dyn.input_dim) {
    throw DimensionError("propagate_rk4: dimension mismatch");
  }
  const double span = u.end() - u.start();
  Trajectory traj;
  Vector z = A;
  traj.grid.push_back(u.start());
  traj.states.push_back(z);
  traj.controls.push_back(u.values().front());
  traj.at_breakpoint.push_back(false);

  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    const double t0 = u.breakpoints()[k];
    const double len = u.duration(k);
    const auto n = std::max<long long>(1, std::llround(steps * len / span));
    const double h = len / static_cast<double>(n);
    const Vector& v = u.values()[k];
    for (long long j = 0; j < n; ++j) {
      const Vector k1 = dyn.f(z, v);
      const Vector k2 = dyn.f(z + 0.5 * h * k1, v);
      const Vector k3 = dyn.f(z + 0.5 * h * k2, v);
      const Vector k4 = dyn.f(z + h * k3, v);
      z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!z.allFinite()) {
        throw NumericalError("propagate_rk4: non-finite state at t = " +
                             std::to_string(t0 + (j + 1) * h));
      }
      const bool last = j + 1 == n;
      traj.grid.push_back(last ? u.breakpoints()[k + 1] : t0 + (j + 1) * h);
      traj.states.push_back(z);
      const bool interior_switch = last && k + 1 < u.num_segments();
      traj.controls.push_back(interior_switch ? u.values()[k + 1] : v);
      traj.at_breakpoint.push_back(interior_switch);
    }
  }
  return traj;
}

double endpoint_residual(const Trajectory& traj, const Vector& B) {
  return (traj.states.back() - B).norm();
}

std::vector<Vector> adjoint_samples(const Problem& prob, const AdjointParams& ap,
                                    const std::vector<double>& grid) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(adjoint_at(prob, ap, t));
  return out;
}

std::vector<double> hamiltonian_profile(const Problem& prob, const AdjointParams& ap,
                                        const Trajectory& traj) {
  const auto p = adjoint_samples(prob, ap, traj.grid);
  std::vector<double> h(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const Vector f = prob.F * traj.states[j] + prob.G * traj.controls[j];
    h[j] = hamiltonian(p[j], f, traj.controls[j], ap.eta);
  }
  return h;
}

std::vector<double> hamiltonian_profile(const NonlinearDynamics& dyn, int eta,
                                        const std::vector<Vector>& adjoint,
                                        const Trajectory& traj) {
  if (adjoint.size() != traj.size()) {
    throw DimensionError("hamiltonian_profile: adjoint samples do not match the grid");
  }
  std::vector<double> h(traj.size());
  for (std::size_t j = 0; j < traj.size(); ++j) {
    h[j] = hamiltonian(adjoint[j], dyn.f(traj.states[j], traj.controls[j]), traj.controls[j], eta);
  }
  return h;
}

void write_trajectory_csv(const Problem& prob, const Trajectory& traj,
                          const std::optional<AdjointParams>& ap, std::ostream& os) {
  const Eigen::Index d = prob.state_dim();
  const Eigen::Index m = prob.input_dim();
  os << 't';
  for (Eigen::Index i = 0; i < d; ++i) os << ",z_" << (i + 1);
  for (Eigen::Index i = 0; i < m; ++i) os << ",u_" << (i + 1);
  std::vector<double> h;
  if (ap) {
    for (Eigen::Index i = 0; i < m; ++i) os << ",s_" << (i + 1);
    os << ",H";
    h = hamiltonian_profile(prob, *ap, traj);
  }
  os << '\n';
  for (std::size_t j = 0; j < traj.size(); ++j) {
    os << format_double(traj.grid[j]);
    for (Eigen::Index i = 0; i < d; ++i) os << ',' << format_double(traj.states[j](i));
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << format_double(traj.controls[j](i));
    if (ap) {
      const Vector s = switching_function(prob, *ap, traj.grid[j]);
      for (Eigen::Index i = 0; i < m; ++i) os << ',' << format_double(s(i));
      os << ',' << format_double(h[j]);
    }
    os << '\n';
  }
}

void save_trajectory(const Problem& prob, const Trajectory& traj,
                     const std::optional<AdjointParams>& ap, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_trajectory_csv(prob, traj, ap, out);
}

}  // namespace handsoff
