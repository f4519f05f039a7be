#include "handsoff/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "handsoff/errors.hpp"

namespace handsoff {

bool is_zero(const Vector& v, double zero_tol) {
  return v.size() == 0 || v.cwiseAbs().maxCoeff() <= zero_tol;
}

AdmissibleSet AdmissibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw ValidationError("U.lower", "length differs from U.upper");
  }
  if (lower.size() == 0) throw ValidationError("U.lower", "empty box");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < 0.0)) {
      throw ValidationError("U.lower", "entry " + std::to_string(i) +
                                           " must be strictly negative (0 interior to U)");
    }
    if (!(upper(i) > 0.0)) {
      throw ValidationError("U.upper", "entry " + std::to_string(i) +
                                           " must be strictly positive (0 interior to U)");
    }
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i))) {
      throw ValidationError("U", "box must be bounded");
    }
  }
  AdmissibleSet s;
  s.kind_ = Kind::Box;
  s.dim_ = lower.size();
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

AdmissibleSet AdmissibleSet::ball(double radius, Eigen::Index dim) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ValidationError("U.radius", "must be a positive finite number");
  }
  if (dim <= 0) throw ValidationError("U", "ball dimension must be positive");
  AdmissibleSet s;
  s.kind_ = Kind::Ball;
  s.dim_ = dim;
  s.radius_ = radius;
  return s;
}

bool AdmissibleSet::contains(const Vector& v, double tol) const {
  if (v.size() != dim_) return false;
  if (kind_ == Kind::Ball) return v.norm() <= radius_ + tol;
  for (Eigen::Index i = 0; i < dim_; ++i) {
    if (v(i) < lower_(i) - tol || v(i) > upper_(i) + tol) return false;
  }
  return true;
}

double AdmissibleSet::support(const Vector& s) const {
  if (kind_ == Kind::Ball) return radius_ * s.norm();
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim_; ++i) total += std::max(s(i) * upper_(i), s(i) * lower_(i));
  return total;
}

void Problem::validate() const {
  const Eigen::Index d = F.rows();
  if (d == 0) throw ValidationError("F", "empty state matrix");
  if (F.cols() != d) throw ValidationError("F", "must be square");
  if (G.rows() != d) {
    throw ValidationError("G", "has " + std::to_string(G.rows()) + " rows, expected " +
                                   std::to_string(d));
  }
  if (G.cols() == 0) throw ValidationError("G", "must have at least one column");
  if (A.size() != d) throw ValidationError("A", "length must equal state dimension");
  if (B.size() != d) throw ValidationError("B", "length must equal state dimension");
  if (!std::isfinite(a) || !std::isfinite(b)) throw ValidationError("a", "non-finite horizon");
  if (!(b > a)) throw ValidationError("b", "horizon end must exceed start a");
  if (U.dim() != G.cols()) {
    throw ValidationError("U", "dimension " + std::to_string(U.dim()) +
                                   " does not match input dimension " +
                                   std::to_string(G.cols()));
  }
  if (!F.allFinite()) throw ValidationError("F", "non-finite entry");
  if (!G.allFinite()) throw ValidationError("G", "non-finite entry");
  if (!A.allFinite()) throw ValidationError("A", "non-finite entry");
  if (!B.allFinite()) throw ValidationError("B", "non-finite entry");
}

PiecewiseConstantControl::PiecewiseConstantControl(std::vector<double> breakpoints,
                                                   std::vector<Vector> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("control", "no segments");
  if (breakpoints_.size() != values_.size() + 1) {
    throw ValidationError("control", "expected one more breakpoint than segments");
  }
  for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k + 1] > breakpoints_[k])) {
      throw ValidationError("control.breakpoints",
                            "not strictly increasing at index " + std::to_string(k + 1));
    }
  }
  const Eigen::Index m = values_.front().size();
  if (m == 0) throw ValidationError("control.values", "empty control vector");
  for (const auto& v : values_) {
    if (v.size() != m) throw ValidationError("control.values", "inconsistent dimensions");
    if (!v.allFinite()) throw ValidationError("control.values", "non-finite entry");
  }
}

PiecewiseConstantControl PiecewiseConstantControl::constant(double start, double end,
                                                            const Vector& value) {
  return PiecewiseConstantControl({start, end}, {value});
}

std::size_t PiecewiseConstantControl::segment_index(double t) const {
  // upper_bound gives the first breakpoint > t; the segment starts one before.
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return 0;
  const auto k = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
  return std::min(k, values_.size() - 1);
}

const Vector& PiecewiseConstantControl::value_at(double t) const {
  return values_[segment_index(t)];
}

void PiecewiseConstantControl::check_against(const Problem& prob, double tol) const {
  if (input_dim() != prob.input_dim()) {
    throw ValidationError("control", "input dimension " + std::to_string(input_dim()) +
                                         " does not match problem (" +
                                         std::to_string(prob.input_dim()) + ")");
  }
  const double span_tol = 1e-9 * std::max(1.0, prob.horizon());
  if (std::abs(start() - prob.a) > span_tol || std::abs(end() - prob.b) > span_tol) {
    throw ValidationError("control.breakpoints", "must span the problem horizon [a, b]");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!prob.U.contains(values_[k], tol)) {
      throw ValidationError("control.values",
                            "segment " + std::to_string(k) + " lies outside U");
    }
  }
}

PiecewiseConstantControl PiecewiseConstantControl::simplified(double min_length) const {
  // A dropped segment is absorbed by its left neighbour (or the right one at
  // the start of the horizon).
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (duration(k) > min_length) kept.push_back(k);
  }
  if (kept.empty()) return *this;

  std::vector<double> bps{breakpoints_.front()};
  std::vector<Vector> vals{values_[kept.front()]};
  for (std::size_t j = 1; j < kept.size(); ++j) {
    const Vector& v = values_[kept[j]];
    if (v == vals.back()) continue;
    bps.push_back(breakpoints_[kept[j]]);
    vals.push_back(v);
  }
  bps.push_back(breakpoints_.back());
  return PiecewiseConstantControl(std::move(bps), std::move(vals));
}

double l0_cost(const PiecewiseConstantControl& u, double zero_tol) {
  double total = 0.0;
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    if (!is_zero(u.values()[k], zero_tol)) total += u.duration(k);
  }
  return total;
}

double zero_measure(const PiecewiseConstantControl& u, double zero_tol) {
  double total = 0.0;
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    if (is_zero(u.values()[k], zero_tol)) total += u.duration(k);
  }
  return total;
}

double l1_cost(const PiecewiseConstantControl& u) {
  double total = 0.0;
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    total += u.values()[k].lpNorm<1>() * u.duration(k);
  }
  return total;
}

double weighted_l0_cost(const PiecewiseConstantControl& u, const Vector& weights,
                        double zero_tol) {
  if (weights.size() != u.input_dim()) {
    throw ValidationError("lambda", "length must equal the input dimension");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0)) {
      throw ValidationError("lambda", "entry " + std::to_string(i) + " must be positive");
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (std::abs(u.values()[k](i)) > zero_tol) total += weights(i) * u.duration(k);
    }
  }
  return total / (u.end() - u.start());
}

CostReport cost_report(const PiecewiseConstantControl& u, const Vector& weights,
                       double zero_tol) {
  CostReport r;
  r.l0_support = l0_cost(u, zero_tol);
  r.l1_cost = l1_cost(u);
  r.weighted_l0 = weighted_l0_cost(u, weights, zero_tol);
  r.clarke_cost = -zero_measure(u, zero_tol);
  return r;
}

}  // namespace handsoff
