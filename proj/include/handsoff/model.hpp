#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handsoff/linalg.hpp"

namespace handsoff {

/// Controls whose components all lie within this magnitude count as "off".
inline constexpr double kDefaultZeroTol = 1e-9;

/// True iff every component of v has magnitude at most zero_tol.
bool is_zero(const Vector& v, double zero_tol = kDefaultZeroTol);

/**
 * Compact actuation set containing the origin in its interior: either a
 * per-channel box [lower, upper] or a centred Euclidean ball.
 */
class AdmissibleSet {
 public:
  enum class Kind { Box, Ball };

  static AdmissibleSet box(Vector lower, Vector upper);
  static AdmissibleSet ball(double radius, Eigen::Index dim);

  Kind kind() const { return kind_; }
  bool is_box() const { return kind_ == Kind::Box; }
  Eigen::Index dim() const { return dim_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double radius() const { return radius_; }

  bool contains(const Vector& v, double tol = kDefaultZeroTol) const;
  /// Support function: sup over the set of <s, v>.
  double support(const Vector& s) const;

 private:
  AdmissibleSet() = default;

  Kind kind_ = Kind::Box;
  Eigen::Index dim_ = 0;
  Vector lower_;
  Vector upper_;
  double radius_ = 0.0;
};

/// Fixed-endpoint, fixed-horizon LTI steering problem x' = F x + G u.
struct Problem {
  Matrix F;
  Matrix G;
  double a = 0.0;
  double b = 0.0;
  Vector A;
  Vector B;
  AdmissibleSet U = AdmissibleSet::ball(1.0, 1);

  Eigen::Index state_dim() const { return F.rows(); }
  Eigen::Index input_dim() const { return G.cols(); }
  double horizon() const { return b - a; }

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

/**
 * Piecewise-constant control on [t_0, t_K]; values[k] holds on the right-open
 * interval [t_k, t_{k+1}) and the last value also at t_K.
 */
class PiecewiseConstantControl {
 public:
  PiecewiseConstantControl(std::vector<double> breakpoints, std::vector<Vector> values);

  /// Single segment of constant value on [start, end].
  static PiecewiseConstantControl constant(double start, double end, const Vector& value);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Vector>& values() const { return values_; }
  std::size_t num_segments() const { return values_.size(); }
  Eigen::Index input_dim() const { return values_.front().size(); }
  double start() const { return breakpoints_.front(); }
  double end() const { return breakpoints_.back(); }
  double duration(std::size_t k) const { return breakpoints_[k + 1] - breakpoints_[k]; }

  /// Right-continuous evaluation; t outside the support clamps to the ends.
  const Vector& value_at(double t) const;
  std::size_t segment_index(double t) const;

  /// Throws ValidationError unless the control spans [prob.a, prob.b] with
  /// every value inside prob.U.
  void check_against(const Problem& prob, double tol = kDefaultZeroTol) const;

  /// Drops zero-length segments and fuses neighbours with identical values.
  PiecewiseConstantControl simplified(double min_length = 0.0) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Vector> values_;
};

struct CostReport {
  double l0_support = 0.0;   // measure of {t : u(t) != 0}
  double l1_cost = 0.0;      // int ||u||_1 dt
  double weighted_l0 = 0.0;  // (1/(b-a)) sum_i lambda_i |supp u_i|
  double clarke_cost = 0.0;  // -int 1_{0}(u) dt
};

double l0_cost(const PiecewiseConstantControl& u, double zero_tol = kDefaultZeroTol);
/// int 1_{0}(u(s)) ds, segment-wise.
double zero_measure(const PiecewiseConstantControl& u, double zero_tol = kDefaultZeroTol);
double l1_cost(const PiecewiseConstantControl& u);
/// Per-channel support measures scaled by weights and 1/(end - start).
double weighted_l0_cost(const PiecewiseConstantControl& u, const Vector& weights,
                        double zero_tol = kDefaultZeroTol);
CostReport cost_report(const PiecewiseConstantControl& u, const Vector& weights,
                       double zero_tol = kDefaultZeroTol);

// Serialization. Problems are JSON, controls are CSV with one row per segment.

Problem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Problem& prob);
Problem load_problem(const std::filesystem::path& path);
void save_problem(const Problem& prob, const std::filesystem::path& path);

void write_control_csv(const PiecewiseConstantControl& u, std::ostream& os);
PiecewiseConstantControl read_control_csv(std::istream& is);
void save_control(const PiecewiseConstantControl& u, const std::filesystem::path& path);
PiecewiseConstantControl load_control(const std::filesystem::path& path);

/// Shortest decimal text that round-trips the double.
std::string format_double(double x);

}  // namespace handsoff
