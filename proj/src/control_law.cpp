#include "handsoff/control_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "handsoff/errors.hpp"

namespace handsoff {

AdjointParams AdjointParams::make(int eta, Vector p_hat) {
  if (eta != 0 && eta != 1) throw ValidationError("eta", "must be 0 or 1");
  if (!p_hat.allFinite()) throw ValidationError("p_hat", "non-finite entry");
  if (eta == 0) {
    const double n = p_hat.norm();
    if (n > 0.0) p_hat /= n;
  }
  return {eta, std::move(p_hat)};
}

namespace {

void check_time(const Problem& prob, double t) {
  const double slack = 1e-12 * std::max(1.0, std::abs(prob.b) + std::abs(prob.a));
  if (t < prob.a - slack || t > prob.b + slack) {
    throw ValidationError("t", "time " + std::to_string(t) + " outside the horizon [" +
                                   std::to_string(prob.a) + ", " + std::to_string(prob.b) + "]");
  }
}

}  // namespace

Vector adjoint_at(const Problem& prob, const AdjointParams& ap, double t) {
  check_time(prob, t);
  if (ap.p_hat.size() != prob.state_dim()) {
    throw DimensionError("adjoint_at: p_hat length does not match state dimension");
  }
  return mat_exp(prob.F.transpose(), prob.b - t) * ap.p_hat;
}

Vector switching_function(const Problem& prob, const AdjointParams& ap, double t) {
  return prob.G.transpose() * adjoint_at(prob, ap, t);
}

double hamiltonian(const Vector& p, const Vector& f, const Vector& v, int eta, double zero_tol) {
  return p.dot(f) + (eta != 0 && is_zero(v, zero_tol) ? 1.0 : 0.0);
}

double pointwise_hamiltonian(const Problem& prob, const AdjointParams& ap, const Vector& z,
                             const Vector& v, double t) {
  if (!prob.U.contains(v)) throw ValidationError("v", "control value outside U");
  const Vector p = adjoint_at(prob, ap, t);
  return hamiltonian(p, prob.F * z + prob.G * v, v, ap.eta);
}

bool CandidateSet::contains(const Vector& v, double tol) const {
  return std::any_of(regions_.begin(), regions_.end(), [&](const Region& r) {
    if (r.ball) return v.norm() <= r.radius + tol;
    return ((v.array() >= r.lower.array() - tol) && (v.array() <= r.upper.array() + tol)).all();
  });
}

double CandidateSet::distance(const Vector& v) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : regions_) {
    double dist = 0.0;
    if (r.ball) {
      dist = std::max(0.0, v.norm() - r.radius);
    } else {
      dist = (v - v.cwiseMax(r.lower).cwiseMin(r.upper)).norm();
    }
    best = std::min(best, dist);
  }
  return best;
}

std::vector<Vector> CandidateSet::representatives() const {
  std::vector<Vector> out;
  for (const auto& r : regions_) {
    if (r.ball) {
      out.push_back(Vector::Zero(r.lower.size()));
      for (Eigen::Index i = 0; i < r.lower.size(); ++i) {
        Vector e = Vector::Zero(r.lower.size());
        e(i) = r.radius;
        out.push_back(e);
        out.push_back(-e);
      }
    } else if (r.lower == r.upper) {
      out.push_back(r.lower);
    } else {
      out.push_back(r.lower);
      out.push_back(r.upper);
      out.push_back(0.5 * (r.lower + r.upper));
    }
  }
  return out;
}

bool CandidateSet::is_singleton(const Vector& v, double tol) const {
  if (regions_.size() != 1) return false;
  const Region& r = regions_.front();
  if (r.ball) return false;
  return (r.lower - r.upper).cwiseAbs().maxCoeff() <= tol &&
         (r.lower - v).cwiseAbs().maxCoeff() <= tol;
}

CandidateSet bang_off_bang_box(const Vector& s, int eta, const Vector& lower, const Vector& upper,
                               double tie_tol) {
  const Eigen::Index m = s.size();
  Vector face_lo(m), face_hi(m);
  double best_bang = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    best_bang += std::max(s(i) * upper(i), s(i) * lower(i));
    if (s(i) > tie_tol) {
      face_lo(i) = face_hi(i) = upper(i);
    } else if (s(i) < -tie_tol) {
      face_lo(i) = face_hi(i) = lower(i);
    } else {
      face_lo(i) = lower(i);
      face_hi(i) = upper(i);
    }
  }

  CandidateSet out;
  if (eta == 0) {
    out.add_box(face_lo, face_hi);
    return out;
  }
  if (best_bang <= 1.0 + tie_tol) out.add_point(Vector::Zero(m));
  if (best_bang >= 1.0 - tie_tol) out.add_box(face_lo, face_hi);
  return out;
}

CandidateSet bang_off_bang_ball(const Vector& w, int eta, double radius, double tie_tol) {
  const Eigen::Index m = w.size();
  const double norm = w.norm();
  CandidateSet out;
  if (eta == 0) {
    if (norm > tie_tol) {
      out.add_point(radius * w / norm);
    } else {
      out.add_ball(radius, m);
    }
    return out;
  }
  const double best_bang = radius * norm;
  if (best_bang <= 1.0 + tie_tol) out.add_point(Vector::Zero(m));
  if (best_bang >= 1.0 - tie_tol) out.add_point(radius * w / norm);
  return out;
}

CandidateSet control_candidates(const Problem& prob, const AdjointParams& ap, double t,
                                double tie_tol) {
  const Vector s = switching_function(prob, ap, t);
  if (prob.U.is_box()) return bang_off_bang_box(s, ap.eta, prob.U.lower(), prob.U.upper(), tie_tol);
  return bang_off_bang_ball(s, ap.eta, prob.U.radius(), tie_tol);
}

namespace {

constexpr std::size_t kMaxGridPoints = 20'000'000;

std::vector<double> axis_grid(double lo, double hi, int n) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k < n; ++k) g.push_back(lo + (hi - lo) * k / (n - 1));
  g.back() = hi;
  if (lo < 0.0 && hi > 0.0 && std::find(g.begin(), g.end(), 0.0) == g.end()) {
    g.insert(std::upper_bound(g.begin(), g.end(), 0.0), 0.0);
  }
  return g;
}

}  // namespace

std::vector<Vector> control_grid(const AdmissibleSet& U, int grid_n) {
  if (grid_n < 2) throw ValidationError("grid_n", "must be at least 2");
  const Eigen::Index m = U.dim();
  std::vector<Vector> out;

  if (U.is_box() || m == 1) {
    const Vector lo = U.is_box() ? U.lower() : Vector::Constant(1, -U.radius());
    const Vector hi = U.is_box() ? U.upper() : Vector::Constant(1, U.radius());
    std::vector<std::vector<double>> axes;
    double total = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      axes.push_back(axis_grid(lo(i), hi(i), grid_n));
      total *= static_cast<double>(axes.back().size());
    }
    if (total > static_cast<double>(kMaxGridPoints)) {
      throw DimensionError("control_grid: box grid too large; reduce grid_n");
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    out.reserve(static_cast<std::size_t>(total));
    while (true) {
      Vector v(m);
      for (Eigen::Index i = 0; i < m; ++i) v(i) = axes[i][idx[i]];
      out.push_back(std::move(v));
      Eigen::Index i = 0;
      for (; i < m; ++i) {
        if (++idx[i] < axes[i].size()) break;
        idx[i] = 0;
      }
      if (i == m) break;
    }
    return out;
  }

  if (m > 3) throw DimensionError("control_grid: ball grids are limited to m <= 3");
  const double r = U.radius();
  std::vector<Vector> dirs;
  if (m == 2) {
    for (int k = 0; k < grid_n; ++k) {
      const double th = 2.0 * std::numbers::pi * k / grid_n;
      Vector d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
    }
  } else {
    // Fibonacci lattice on the sphere.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < grid_n; ++k) {
      const double y = 1.0 - 2.0 * (k + 0.5) / grid_n;
      const double rad = std::sqrt(std::max(0.0, 1.0 - y * y));
      Vector d(3);
      d << rad * std::cos(golden * k), y, rad * std::sin(golden * k);
      dirs.push_back(d);
    }
  }
  if (static_cast<double>(dirs.size()) * grid_n > static_cast<double>(kMaxGridPoints)) {
    throw DimensionError("control_grid: ball grid too large; reduce grid_n");
  }
  out.push_back(Vector::Zero(m));
  for (int k = 1; k < grid_n; ++k) {
    const double rho = r * k / (grid_n - 1);
    for (const auto& d : dirs) out.push_back(rho * d);
  }
  return out;
}

std::vector<Vector> argmax_hamiltonian_bruteforce(const Problem& prob, const AdjointParams& ap,
                                                  const Vector& z, double t, int grid_n,
                                                  double tie_tol) {
  const Vector p = adjoint_at(prob, ap, t);
  const Vector drift = prob.F * z;

  const auto grid = control_grid(prob.U, grid_n);
  std::vector<double> values(grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    values[k] = hamiltonian(p, drift + prob.G * grid[k], grid[k], ap.eta, 0.0);
    best = std::max(best, values[k]);
  }
  std::vector<Vector> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (values[k] >= best - tie_tol) out.push_back(grid[k]);
  }
  return out;
}

}  // namespace handsoff
