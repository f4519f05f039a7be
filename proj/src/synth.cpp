#include "handsoff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "handsoff/lp.hpp"

namespace handsoff {

std::size_t Structure::on_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](const Vector& v) { return !is_zero(v, 0.0); }));
}

std::vector<Structure> enumerate_structures(Eigen::Index m, const AdmissibleSet& U, int k_max) {
  if (k_max < 1) throw ValidationError("k_max", "must be at least 1");
  if (U.dim() != m) throw DimensionError("enumerate_structures: U dimension differs from m");

  std::vector<Vector> labels;
  const bool directional = !U.is_box() && m >= 2;
  if (directional) {
    labels.push_back(Vector::Zero(m));
    labels.push_back(U.radius() * Vector::Unit(m, 0));
  } else {
    const Vector lo = U.is_box() ? U.lower() : Vector::Constant(1, -U.radius());
    const Vector hi = U.is_box() ? U.upper() : Vector::Constant(1, U.radius());
    // Per channel the order is {0, lower, upper}; channel 0 varies slowest.
    const double count = std::pow(3.0, static_cast<double>(m));
    if (count > static_cast<double>(kMaxStructures)) {
      throw ValidationError("k_max", "too many channel labels to enumerate");
    }
    std::vector<int> digit(static_cast<std::size_t>(m), 0);
    for (long idx = 0; idx < static_cast<long>(count); ++idx) {
      long rest = idx;
      for (Eigen::Index i = m - 1; i >= 0; --i) {
        digit[i] = static_cast<int>(rest % 3);
        rest /= 3;
      }
      Vector v(m);
      for (Eigen::Index i = 0; i < m; ++i) v(i) = digit[i] == 0 ? 0.0 : (digit[i] == 1 ? lo(i) : hi(i));
      labels.push_back(v);
    }
  }

  const double L = static_cast<double>(labels.size());
  double total = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    total += L * std::pow(L - 1.0, k - 1);
    if (total > static_cast<double>(kMaxStructures)) {
      throw ValidationError("k_max", "more than " + std::to_string(kMaxStructures) +
                                         " structures; lower k_max");
    }
  }

  std::vector<Structure> out;
  out.reserve(static_cast<std::size_t>(total));
  // Odometer over label indices, one length at a time; sequences with equal
  // neighbours are skipped.
  std::vector<std::size_t> seq;
  for (int len = 1; len <= k_max; ++len) {
    seq.assign(static_cast<std::size_t>(len), 0);
    bool done = false;
    while (!done) {
      bool valid = true;
      for (std::size_t i = 1; i < seq.size() && valid; ++i) valid = seq[i] != seq[i - 1];
      if (valid) {
        Structure st;
        st.directional = directional;
        for (std::size_t idx : seq) st.labels.push_back(labels[idx]);
        out.push_back(std::move(st));
      }
      done = true;
      for (std::size_t pos = seq.size(); pos-- > 0;) {
        if (++seq[pos] < labels.size()) {
          done = false;
          break;
        }
        seq[pos] = 0;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Structure& x, const Structure& y) {
    if (x.on_count() != y.on_count()) return x.on_count() < y.on_count();
    return x.size() < y.size();
  });
  return out;
}

namespace {

/// Endpoint map of a structure: z(b) - B as a function of breakpoints and
/// on-directions.
class StructureModel {
 public:
  StructureModel(const Problem& prob, const Structure& st) : prob_(prob), st_(st) {
    offset_ = mat_exp(prob.F, prob.horizon()) * prob.A - prob.B;
    w_start_ = discretize_zoh(prob.F, prob.G, prob.horizon()).Bd;
    for (const auto& v : st.labels) {
      if (st.directional && !is_zero(v, 0.0)) ++directional_on_;
    }
    angles_per_on_ = st.directional ? static_cast<int>(prob.input_dim()) - 1 : 0;
  }

  Eigen::Index num_params() const {
    return static_cast<Eigen::Index>(st_.size()) - 1 + directional_on_ * angles_per_on_;
  }

  void decode(const Vector& x, std::vector<double>& bps, std::vector<Vector>& values) const {
    const std::size_t K = st_.size();
    bps.assign(K + 1, prob_.a);
    for (std::size_t k = 1; k < K; ++k) {
      bps[k] = std::clamp(x(static_cast<Eigen::Index>(k) - 1), prob_.a, prob_.b);
    }
    bps[K] = prob_.b;
    std::sort(bps.begin() + 1, bps.end() - 1);

    values = st_.labels;
    if (!st_.directional) return;
    Eigen::Index pos = static_cast<Eigen::Index>(K) - 1;
    const double r = prob_.U.radius();
    for (auto& v : values) {
      if (is_zero(v, 0.0)) continue;
      if (angles_per_on_ == 1) {
        v << r * std::cos(x(pos)), r * std::sin(x(pos));
      } else {
        const double th = x(pos), ph = x(pos + 1);
        v << r * std::sin(ph) * std::cos(th), r * std::sin(ph) * std::sin(th), r * std::cos(ph);
      }
      pos += angles_per_on_;
    }
  }

  /// z(b) - B = e^{FT}A - B + sum_k (W(t_k) - W(t_{k+1})) v_k with
  /// W(t) the ZOH input matrix over [t, b].
  Vector residual(const std::vector<double>& bps, const std::vector<Vector>& values) const {
    Vector r = offset_;
    Matrix w_prev = w_start_;
    for (std::size_t k = 0; k < values.size(); ++k) {
      Matrix w_next;
      if (k + 1 == values.size()) {
        w_next = Matrix::Zero(w_start_.rows(), w_start_.cols());
      } else {
        w_next = discretize_zoh(prob_.F, prob_.G, prob_.b - bps[k + 1]).Bd;
      }
      if (!is_zero(values[k], 0.0)) r += (w_prev - w_next) * values[k];
      w_prev = std::move(w_next);
    }
    return r;
  }

 private:
  const Problem& prob_;
  const Structure& st_;
  Vector offset_;
  Matrix w_start_;
  int directional_on_ = 0;
  int angles_per_on_ = 0;
};

double support_of(const std::vector<double>& bps, const std::vector<Vector>& values) {
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!is_zero(values[k], 0.0)) s += bps[k + 1] - bps[k];
  }
  return s;
}

std::vector<double> durations_of(const std::vector<double>& bps) {
  std::vector<double> d(bps.size() - 1);
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) d[k] = bps[k + 1] - bps[k];
  return d;
}

}  // namespace

DurationFit solve_durations(const Problem& prob, const Structure& st,
                            const std::vector<double>& init, const SynthOptions& opts,
                            std::uint64_t seed) {
  if (st.labels.empty()) throw ValidationError("structure", "empty structure");
  const std::size_t K = st.size();
  const double T = prob.horizon();
  StructureModel model(prob, st);
  const Eigen::Index np = model.num_params();
  const Eigen::Index n_bps = static_cast<Eigen::Index>(K) - 1;

  std::vector<double> bps;
  std::vector<Vector> values;
  const auto objective = [&](const Vector& x) {
    model.decode(x, bps, values);
    return model.residual(bps, values).squaredNorm();
  };

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  auto start_point = [&](bool from_init) {
    Vector x(np);
    std::vector<double> dur(K);
    if (from_init && init.size() == K) {
      dur = init;
    } else if (from_init) {
      std::fill(dur.begin(), dur.end(), T / static_cast<double>(K));
    } else {
      double sum = 0.0;
      for (auto& d : dur) sum += (d = expo(rng));
      for (auto& d : dur) d *= T / sum;
    }
    double t = prob.a;
    for (Eigen::Index k = 0; k < n_bps; ++k) x(k) = (t += dur[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = n_bps; k < np; ++k) x(k) = angle(rng);
    return x;
  };

  DurationFit best;
  bool have_best = false;
  bool best_feasible = false;
  const int starts = std::max(1, opts.starts);
  for (int s = 0; s < starts; ++s) {
    Vector x = start_point(s == 0);
    NelderMeadOptions nm = opts.nelder_mead;
    nm.initial_step = 0.1 * T;
    auto res = nelder_mead(objective, x, nm);
    // Restarts from the incumbent with shrinking simplices.
    for (double step : {1e-3 * T, 1e-6 * T}) {
      if (res.value <= nm.f_tol) break;
      nm.initial_step = step;
      auto again = nelder_mead(objective, res.x, nm);
      if (again.value < res.value) res = std::move(again);
    }

    model.decode(res.x, bps, values);
    DurationFit fit;
    fit.durations = durations_of(bps);
    fit.values = values;
    fit.residual = model.residual(bps, values).norm();
    fit.support = support_of(bps, values);
    const bool feasible = fit.residual <= opts.feas_tol;

    bool better = !have_best;
    if (have_best) {
      if (feasible && !best_feasible) {
        better = true;
      } else if (feasible && best_feasible) {
        const double tie = 10.0 * opts.feas_tol * std::max(1.0, T);
        better = fit.support < best.support - tie ||
                 (fit.support <= best.support + tie && fit.durations[0] < best.durations[0]);
      } else if (!feasible && !best_feasible) {
        better = fit.residual < best.residual;
      }
    }
    if (better) {
      best = std::move(fit);
      have_best = true;
      best_feasible = feasible;
    }
  }
  return best;
}

PiecewiseConstantControl control_from_fit(const Problem& prob, const DurationFit& fit) {
  std::vector<double> bps{prob.a};
  for (double d : fit.durations) bps.push_back(bps.back() + d);
  bps.back() = prob.b;
  // Collapse empty segments before constructing (breakpoints must increase).
  std::vector<double> kept_bps{prob.a};
  std::vector<Vector> kept_vals;
  const double min_len = 1e-12 * prob.horizon();
  for (std::size_t k = 0; k < fit.values.size(); ++k) {
    if (bps[k + 1] - bps[k] <= min_len) continue;
    if (!kept_vals.empty()) kept_bps.push_back(bps[k]);
    kept_vals.push_back(fit.values[k]);
  }
  if (kept_vals.empty()) kept_vals.push_back(fit.values.front());
  kept_bps.push_back(prob.b);
  return PiecewiseConstantControl(std::move(kept_bps), std::move(kept_vals)).simplified();
}

double min_time(const Problem& prob, double tol, int N) {
  prob.validate();
  if (!(tol > 0.0)) throw ValidationError("tol", "must be positive");
  if ((prob.A - prob.B).cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const double T = prob.horizon();
  if (linf_feasibility(prob, T, N) > 1.0) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = T;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (linf_feasibility(prob, mid, N) <= 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

struct Rows {
  std::vector<Vector> a;
  std::vector<double> c;
};

struct Minimax {
  bool ok = false;
  double violation = std::numeric_limits<double>::infinity();
  Vector p;
};

/// min e  s.t.  a_k . p + e >= c_k (soft),  a_h . p >= c_h (hard),  e >= 0,
/// solved through its dual, which has one row per coordinate of p plus one.
Minimax minimax_violation(const Rows& soft, const Rows& hard, Eigen::Index d) {
  const auto ns = static_cast<Eigen::Index>(soft.a.size());
  const auto nh = static_cast<Eigen::Index>(hard.a.size());
  LpProblem lp;
  lp.c = Vector::Zero(ns + nh + 1);
  lp.Aeq = Matrix::Zero(d + 1, ns + nh + 1);
  for (Eigen::Index k = 0; k < ns; ++k) {
    lp.c(k) = -soft.c[static_cast<std::size_t>(k)];
    lp.Aeq.col(k).head(d) = soft.a[static_cast<std::size_t>(k)];
    lp.Aeq(d, k) = 1.0;
  }
  for (Eigen::Index h = 0; h < nh; ++h) {
    lp.c(ns + h) = -hard.c[static_cast<std::size_t>(h)];
    lp.Aeq.col(ns + h).head(d) = hard.a[static_cast<std::size_t>(h)];
  }
  lp.Aeq(d, ns + nh) = 1.0;
  lp.beq = Vector::Zero(d + 1);
  lp.beq(d) = 1.0;
  lp.lo = Vector::Zero(ns + nh + 1);
  lp.hi = Vector::Constant(ns + nh + 1, std::numeric_limits<double>::infinity());

  const LpSolution sol = simplex_solve(lp);
  Minimax out;
  if (sol.status != LpStatus::Optimal) return out;
  out.ok = true;
  out.violation = std::max(0.0, -sol.objective);
  out.p = -sol.duals.head(d);
  return out;
}

std::vector<Vector> box_vertices(const AdmissibleSet& U) {
  const Eigen::Index m = U.dim();
  const Vector lo = U.is_box() ? U.lower() : Vector::Constant(m, -U.radius());
  const Vector hi = U.is_box() ? U.upper() : Vector::Constant(m, U.radius());
  std::vector<Vector> out;
  for (long mask = 0; mask < (1L << m); ++mask) {
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v(i) = (mask >> i) & 1 ? hi(i) : lo(i);
    out.push_back(v);
  }
  return out;
}

struct Sample {
  Matrix S;  // G^T e^{(b-t)F^T}
  Vector u;
};

std::vector<Sample> recovery_samples(const Problem& prob, const PiecewiseConstantControl& control,
                                     const CertifyOptions& copts) {
  const auto grid = sample_grid(control, copts.samples);
  const double width = copts.breakpoint_window * prob.horizon();
  std::vector<Sample> out;
  const auto& bps = control.breakpoints();
  for (double t : grid) {
    bool near = false;
    for (std::size_t k = 1; k + 1 < bps.size(); ++k) near = near || std::abs(t - bps[k]) <= width;
    if (near) continue;
    out.push_back({prob.G.transpose() * mat_exp(prob.F.transpose(), prob.b - t),
                   control.value_at(t)});
  }
  return out;
}

/// Rows stating H(u(t)) >= H(v) for every vertex v of the box and v = 0.
Rows consistency_rows(const std::vector<Sample>& samples, const AdmissibleSet& U, int eta,
                      double zero_tol) {
  auto competitors = box_vertices(U);
  competitors.push_back(Vector::Zero(U.dim()));
  Rows rows;
  for (const auto& s : samples) {
    const double ind_u = is_zero(s.u, zero_tol) ? 1.0 : 0.0;
    for (const auto& v : competitors) {
      const double ind_v = is_zero(v, 0.0) ? 1.0 : 0.0;
      Vector a = s.S.transpose() * (s.u - v);
      const double c = eta * (ind_v - ind_u);
      if (a.cwiseAbs().maxCoeff() <= 1e-15 && c <= 0.0) continue;
      rows.a.push_back(std::move(a));
      rows.c.push_back(c);
    }
  }
  return rows;
}

std::optional<Vector> recover_box(const Problem& prob, const std::vector<Sample>& samples, int eta,
                                  double zero_tol) {
  const Eigen::Index d = prob.state_dim();
  const Rows rows = consistency_rows(samples, prob.U, eta, zero_tol);
  constexpr double kViolationTol = 1e-9;
  if (eta == 1) {
    const Minimax mm = minimax_violation(rows, {}, d);
    if (mm.ok && mm.violation <= kViolationTol) return mm.p;
    return std::nullopt;
  }
  // eta = 0 is homogeneous in p: normalize by pinning one coordinate to +-1
  // with the others in [-1, 1], one face of the unit cube at a time.
  Minimax best;
  Vector best_p;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (double sigma : {1.0, -1.0}) {
      Rows soft, hard;
      for (std::size_t k = 0; k < rows.a.size(); ++k) {
        Vector a(d - 1);
        a << rows.a[k].head(j), rows.a[k].tail(d - 1 - j);
        soft.a.push_back(std::move(a));
        soft.c.push_back(rows.c[k] - sigma * rows.a[k](j));
      }
      for (Eigen::Index i = 0; i < d - 1; ++i) {
        hard.a.push_back(-Vector::Unit(d - 1, i));
        hard.c.push_back(-1.0);
        hard.a.push_back(Vector::Unit(d - 1, i));
        hard.c.push_back(-1.0);
      }
      const Minimax mm = minimax_violation(soft, hard, d - 1);
      if (mm.ok && mm.violation < best.violation) {
        best = mm;
        best_p.resize(d);
        best_p << mm.p.head(j), sigma, mm.p.tail(d - 1 - j);
      }
    }
  }
  if (best.ok && best.violation <= kViolationTol) return best_p;
  return std::nullopt;
}

std::optional<Vector> recover_ball(const Problem& prob, const std::vector<Sample>& samples,
                                   int eta, const SynthOptions& opts, double dt) {
  const Eigen::Index d = prob.state_dim();
  const double r = prob.U.radius();
  const auto loss = [&](const Vector& x) {
    Vector p = x;
    if (eta == 0) {
      const double n = p.norm();
      if (n < 1e-12) return 1e6;
      p /= n;
    }
    double total = 0.0;
    for (const auto& s : samples) {
      const Vector sw = s.S * p;
      const double sup = std::max(static_cast<double>(eta), r * sw.norm());
      const double got = sw.dot(s.u) + (eta != 0 && is_zero(s.u, opts.zero_tol) ? 1.0 : 0.0);
      const double gap = std::max(0.0, sup - got);
      total += gap * gap * dt;
    }
    return total;
  };
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  NelderMeadOptions nm = opts.nelder_mead;
  nm.initial_step = 0.25;
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opts.recover_starts; ++s) {
    Vector x0(d);
    for (Eigen::Index i = 0; i < d; ++i) x0(i) = unif(rng);
    auto res = nelder_mead(loss, x0, nm);
    nm.initial_step = 1e-4;
    auto again = nelder_mead(loss, res.x, nm);
    nm.initial_step = 0.25;
    if (again.value < res.value) res = std::move(again);
    if (res.value < best.value) best = std::move(res);
  }
  if (!std::isfinite(best.value)) return std::nullopt;
  return best.x;
}

}  // namespace

double consistency_loss(const Problem& prob, const AdjointParams& ap,
                        const PiecewiseConstantControl& control, int samples, double window) {
  const auto grid = sample_grid(control, samples);
  const double width = window * prob.horizon();
  const double dt = prob.horizon() / static_cast<double>(grid.size());
  const auto& bps = control.breakpoints();
  double total = 0.0;
  for (double t : grid) {
    bool near = false;
    for (std::size_t k = 1; k + 1 < bps.size(); ++k) near = near || std::abs(t - bps[k]) <= width;
    if (near) continue;
    total += control_candidates(prob, ap, t).distance(control.value_at(t)) * dt;
  }
  return total;
}

std::optional<AdjointParams> recover_adjoint(const Problem& prob,
                                             const PiecewiseConstantControl& control,
                                             const SynthOptions& opts) {
  control.check_against(prob);
  const auto samples = recovery_samples(prob, control, opts.certify);
  const bool polytope = prob.U.is_box() || prob.input_dim() == 1;
  const double dt = prob.horizon() / static_cast<double>(std::max<std::size_t>(1, samples.size()));
  constexpr double kLossTol = 1e-6;

  for (int eta : {1, 0}) {
    const std::optional<Vector> p = polytope ? recover_box(prob, samples, eta, opts.zero_tol)
                                             : recover_ball(prob, samples, eta, opts, dt);
    if (!p) continue;
    const AdjointParams ap = AdjointParams::make(eta, *p);
    if (!ap.nontrivial()) continue;
    if (consistency_loss(prob, ap, control, opts.certify.samples,
                         opts.certify.breakpoint_window) > kLossTol) {
      continue;
    }
    if (certify(prob, ap, control, opts.certify).passed) return ap;
  }
  return std::nullopt;
}

SynthResult synth_l0(const Problem& prob, const SynthOptions& opts) {
  prob.validate();
  const int k_max = opts.k_max > 0 ? opts.k_max : 2 * static_cast<int>(prob.state_dim()) + 1;
  const double T = prob.horizon();

  if (prob.U.is_box()) {
    // The grid-restricted gauge overestimates the continuous one by O(1/N).
    const int N = opts.min_time_intervals;
    const double gauge = linf_feasibility(prob, T, N);
    if (gauge > 1.0 + 2.0 / N) {
      // Report the minimum time on a stretched horizon so the message can cite it.
      Problem longer = prob;
      longer.b = prob.a + 64.0 * T;
      const double mt = min_time(longer, opts.min_time_tol, N);
      throw InfeasibleError("horizon " + std::to_string(T) + " is shorter than the minimum time " +
                            (std::isfinite(mt) ? std::to_string(mt) : std::string("(unreachable)")));
    }
  }

  const auto structures = enumerate_structures(prob.input_dim(), prob.U, k_max);
  SynthResult result{PiecewiseConstantControl::constant(prob.a, prob.b, Vector::Zero(prob.input_dim())),
                     0.0, std::nullopt, std::nullopt, false, false, {}, 0, {}};

  std::optional<DurationFit> best;
  std::size_t best_index = 0;
  const double tie = 10.0 * opts.feas_tol * std::max(1.0, T);
  for (std::size_t i = 0; i < structures.size(); ++i) {
    const Structure& st = structures[i];
    const DurationFit fit = solve_durations(prob, st, {}, opts, opts.seed + 7919ULL * i);
    const bool feasible = fit.residual <= opts.feas_tol;
    result.log.push_back({i, fit.residual, fit.support, feasible});
    if (!feasible) continue;
    const bool better =
        !best || fit.support < best->support - tie ||
        (fit.support <= best->support + tie && i == best_index && fit.durations[0] < best->durations[0]);
    if (better) {
      best = fit;
      best_index = i;
    }
  }
  if (!best) {
    throw NoFeasibleStructureError("no bang-off-bang structure with at most " +
                                   std::to_string(k_max) +
                                   " segments reaches the endpoint; try a larger k_max");
  }

  result.control = control_from_fit(prob, *best);
  result.support = l0_cost(result.control, opts.zero_tol);
  result.structure = structures[best_index];
  result.structure_index = best_index;

  result.certificate = recover_adjoint(prob, result.control, opts);
  if (result.certificate) {
    result.report = certify(prob, *result.certificate, result.control, opts.certify);
    result.certified = result.report->passed;
    result.locally_optimal = result.report->locally_optimal;
  }
  return result;
}

nlohmann::json sidecar_json(const SynthResult& result) {
  nlohmann::json j;
  j["support"] = result.support;
  if (result.certificate) {
    j["eta"] = result.certificate->eta;
    nlohmann::json p = nlohmann::json::array();
    for (Eigen::Index i = 0; i < result.certificate->p_hat.size(); ++i) {
      p.push_back(result.certificate->p_hat(i));
    }
    j["p_hat"] = p;
  } else {
    j["eta"] = nullptr;
    j["p_hat"] = nullptr;
  }
  j["certified"] = result.certified;
  j["locally_optimal"] = result.locally_optimal;
  return j;
}

}  // namespace handsoff
