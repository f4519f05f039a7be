#pragma once

#include <functional>

#include "handsoff/linalg.hpp"

namespace handsoff {

struct NelderMeadOptions {
  int max_evaluations = 4000;
  /// Stop when the spread of simplex values falls below this.
  double f_tol = 1e-22;
  /// Stop when every vertex is within this distance of the best one.
  double x_tol = 1e-14;
  /// Edge length of the initial axis-aligned simplex.
  double initial_step = 0.1;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
};

/// Downhill simplex with the standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& opts = {});

}  // namespace handsoff
