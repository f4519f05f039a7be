#include "handsoff/nelder_mead.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace handsoff {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.value = f(x0);
    res.evaluations = 1;
    return res;
  }

  std::vector<Vector> pts(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> vals(pts.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i) + 1](i) += opts.initial_step;
  }
  int evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    return f(x);
  };
  for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(pts.size());
  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return vals[a] < vals[b];
    });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& p : pts) diameter = std::max(diameter, (p - pts[best]).cwiseAbs().maxCoeff());
    if (vals[worst] - vals[best] <= opts.f_tol || diameter <= opts.x_tol) break;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - pts[worst]);
    const double fr = eval(reflected);
    if (fr < vals[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(std::distance(vals.begin(), it))];
  res.value = *it;
  res.evaluations = evals;
  return res;
}

}  // namespace handsoff
