#pragma once

#include <vector>

#include "handsoff/model.hpp"

namespace handsoff {

/// Threshold-equality tolerance for classifying tie sets.
inline constexpr double kTieTol = 1e-9;

/**
 * Pontryagin multipliers for an LTI extremal: the cost multiplier eta in
 * {0, 1} and the terminal adjoint p(b). For eta = 0 a nonzero p_hat is stored
 * with unit Euclidean norm. A zero pair is representable so that it can be
 * certified as trivial; `nontrivial()` reports it.
 */
struct AdjointParams {
  int eta = 1;
  Vector p_hat;

  static AdjointParams make(int eta, Vector p_hat);
  bool nontrivial() const { return eta == 1 || (p_hat.size() > 0 && p_hat.norm() > 0.0); }
};

/// p(t) = e^{(b - t) F^T} p_hat.
Vector adjoint_at(const Problem& prob, const AdjointParams& ap, double t);
/// G^T p(t).
Vector switching_function(const Problem& prob, const AdjointParams& ap, double t);

/// <p, f> + eta * 1_{0}(v), with f the dynamics value at (z, v).
double hamiltonian(const Vector& p, const Vector& f, const Vector& v, int eta,
                   double zero_tol = kDefaultZeroTol);

/// <p(t), F z + G v> + eta * 1_{0}(v). Throws ValidationError if v is not in U.
double pointwise_hamiltonian(const Problem& prob, const AdjointParams& ap, const Vector& z,
                             const Vector& v, double t);

/**
 * A union of closed regions of R^m: boxes (points when lower == upper) and
 * centred balls. Holds the maximizer sets returned by the control laws.
 */
class CandidateSet {
 public:
  struct Region {
    bool ball = false;
    Vector lower;  // box corners
    Vector upper;
    double radius = 0.0;
  };

  void add_point(const Vector& v) { regions_.push_back({false, v, v, 0.0}); }
  void add_box(const Vector& lower, const Vector& upper) {
    regions_.push_back({false, lower, upper, 0.0});
  }
  void add_ball(double radius, Eigen::Index dim) {
    regions_.push_back({true, Vector::Zero(dim), Vector::Zero(dim), radius});
  }

  const std::vector<Region>& regions() const { return regions_; }
  bool contains(const Vector& v, double tol = kTieTol) const;
  /// Euclidean distance from v to the union.
  double distance(const Vector& v) const;
  /// Finite sample of the set: points, box corners and centres, ball centre
  /// and axis extremes.
  std::vector<Vector> representatives() const;
  /// True iff the set is exactly the single point v (within tol).
  bool is_singleton(const Vector& v, double tol = kTieTol) const;

 private:
  std::vector<Region> regions_;
};

/**
 * argmax over the box [lower, upper] of <s, v> + eta * 1_{0}(v).
 *
 * For eta = 1 the off value 0 wins when the best bang payoff
 * max_v <s, v> falls below 1, the bang face wins above 1, and both are
 * returned at the threshold. Channels with s_i = 0 contribute their whole
 * interval to the bang face.
 */
CandidateSet bang_off_bang_box(const Vector& s, int eta, const Vector& lower, const Vector& upper,
                               double tie_tol = kTieTol);

/// Ball counterpart: off below ||w|| * radius = 1, radius * w / ||w|| above.
CandidateSet bang_off_bang_ball(const Vector& w, int eta, double radius,
                                double tie_tol = kTieTol);

/// Dispatch on the admissible set with s = switching_function(prob, ap, t).
CandidateSet control_candidates(const Problem& prob, const AdjointParams& ap, double t,
                                double tie_tol = kTieTol);

/**
 * Exhaustive grid maximization of the pointwise Hamiltonian, used as an
 * oracle for the analytic laws. Box sets use grid_n points per channel (zero
 * is always included); balls use grid_n radii times a direction grid, m <= 3.
 * Returns every grid point within tie_tol of the grid maximum.
 */
std::vector<Vector> argmax_hamiltonian_bruteforce(const Problem& prob, const AdjointParams& ap,
                                                  const Vector& z, double t, int grid_n,
                                                  double tie_tol = kTieTol);

/// Control grid over U used by the brute-force oracle and the certifier.
std::vector<Vector> control_grid(const AdmissibleSet& U, int grid_n);

}  // namespace handsoff
