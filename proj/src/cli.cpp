#include "handsoff/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "handsoff/certify.hpp"
#include "handsoff/errors.hpp"
#include "handsoff/lp.hpp"
#include "handsoff/sim.hpp"
#include "handsoff/svg.hpp"
#include "handsoff/synth.hpp"

namespace handsoff::cli {
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string problem_path;
  std::string control_path;
  std::string example;
  std::string out_dir = "out";
  int intervals = kDefaultIntervals;
  int k_max = 0;
  double feas_tol = 1e-6;
  double zero_tol = kDefaultZeroTol;
  std::uint64_t seed = 42;
  bool plot = false;
  int eta = 1;
  std::vector<double> p_hat;
  double xi1 = 0.0, xi2 = 0.0, horizon = 0.0;
  double time_tol = 1e-4;
};

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string vec_str(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s + ")";
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("output directory " + dir + " is not writable");
  return p;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

std::uint64_t effective_seed(std::uint64_t seed) {
  if (const char* env = std::getenv("HANDSOFF_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("HANDSOFF_SEED", "not an unsigned integer");
    }
  }
  return seed;
}

SynthOptions synth_options(const RunConfig& cfg) {
  SynthOptions o;
  o.k_max = cfg.k_max;
  o.feas_tol = cfg.feas_tol;
  o.zero_tol = cfg.zero_tol;
  o.seed = effective_seed(cfg.seed);
  return o;
}

Series component(const std::string& label, const std::vector<double>& t,
                 const std::vector<Vector>& v, Eigen::Index i, bool dashed = false) {
  Series s{label, t, {}, dashed};
  s.y.reserve(v.size());
  for (const auto& x : v) s.y.push_back(x(i));
  return s;
}

/// Staircase polyline of a control, channel i.
Series staircase(const std::string& label, const PiecewiseConstantControl& u, Eigen::Index i,
                 bool dashed = false) {
  Series s{label, {}, {}, dashed};
  const auto& bps = u.breakpoints();
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    s.x.push_back(bps[k]);
    s.y.push_back(u.values()[k](i));
    s.x.push_back(bps[k + 1]);
    s.y.push_back(u.values()[k](i));
  }
  return s;
}

std::vector<Panel> solution_panels(const Problem& prob, const Trajectory& traj,
                                   const PiecewiseConstantControl& u,
                                   const std::optional<AdjointParams>& ap) {
  std::vector<Panel> panels;
  Panel states{"state", {}};
  for (Eigen::Index i = 0; i < prob.state_dim(); ++i) {
    states.series.push_back(component("z" + std::to_string(i + 1), traj.grid, traj.states, i));
  }
  panels.push_back(std::move(states));
  Panel control{"control", {}};
  for (Eigen::Index i = 0; i < prob.input_dim(); ++i) {
    control.series.push_back(staircase("u" + std::to_string(i + 1), u, i));
  }
  panels.push_back(std::move(control));
  if (ap) {
    Panel sw{"switching function", {}};
    std::vector<Vector> s;
    for (double t : traj.grid) s.push_back(switching_function(prob, *ap, t));
    for (Eigen::Index i = 0; i < prob.input_dim(); ++i) {
      sw.series.push_back(component("s" + std::to_string(i + 1), traj.grid, s, i));
    }
    panels.push_back(std::move(sw));
  }
  return panels;
}

void print_control(const PiecewiseConstantControl& u, std::ostream& out) {
  out << "segments=" << u.num_segments() << '\n';
  out << "breakpoints=";
  for (std::size_t k = 0; k < u.breakpoints().size(); ++k) {
    out << (k ? "," : "") << fixed6(u.breakpoints()[k]);
  }
  out << "\nvalues=";
  for (std::size_t k = 0; k < u.num_segments(); ++k) out << (k ? "," : "") << vec_str(u.values()[k]);
  out << '\n';
}

struct L0Outcome {
  SynthResult result;
  Trajectory traj;
  double residual;
};

L0Outcome solve_l0(const Problem& prob, const RunConfig& cfg, const fs::path& dir,
                   std::ostream& out) {
  SynthResult r = synth_l0(prob, synth_options(cfg));
  Trajectory traj = propagate_exact(prob, r.control);
  const double residual = endpoint_residual(traj, prob.B);

  save_control(r.control, dir / "control.csv");
  save_trajectory(prob, traj, r.certificate, dir / "trajectory.csv");
  nlohmann::json cert = r.report ? to_json(*r.report) : nlohmann::json{{"passed", false}};
  write_json(cert, dir / "certificate.json");
  write_json(sidecar_json(r), dir / "solution.json");

  out << "support=" << fixed6(r.support) << '\n';
  print_control(r.control, out);
  out << "endpoint_residual=" << format_double(residual) << '\n';
  if (r.certificate) {
    out << "eta=" << r.certificate->eta << '\n';
    out << "p_hat=" << vec_str(r.certificate->p_hat) << '\n';
  }
  out << "certified=" << bool_str(r.certified) << '\n';
  out << "locally_optimal=" << bool_str(r.locally_optimal) << '\n';
  return {std::move(r), std::move(traj), residual};
}

int cmd_solve_l0(const RunConfig& cfg, std::ostream& out) {
  const Problem prob = load_problem(cfg.problem_path);
  const fs::path dir = prepare_out(cfg.out_dir);
  const L0Outcome o = solve_l0(prob, cfg, dir, out);
  if (cfg.plot) {
    save_svg(solution_panels(prob, o.traj, o.result.control, o.result.certificate),
             dir / "plot.svg");
  }
  return kOk;
}

struct L1Outcome {
  L1Result result;
  Trajectory traj;
  double support;
};

L1Outcome solve_l1(const Problem& prob, const RunConfig& cfg, const fs::path& dir,
                   const std::string& prefix, std::ostream& out) {
  L1Result r = l1_solve(prob, cfg.intervals);
  Trajectory traj = propagate_exact(prob, r.control);
  const double support = l0_cost(r.control, cfg.zero_tol);
  save_control(r.control, dir / (prefix + "control.csv"));
  save_trajectory(prob, traj, std::nullopt, dir / (prefix + "trajectory.csv"));
  out << "l1_cost=" << fixed6(r.cost) << '\n';
  out << "l1_support=" << fixed6(support) << '\n';
  out << "l1_endpoint_residual=" << format_double(endpoint_residual(traj, prob.B)) << '\n';
  return {std::move(r), std::move(traj), support};
}

int cmd_solve_l1(const RunConfig& cfg, std::ostream& out) {
  const Problem prob = load_problem(cfg.problem_path);
  const fs::path dir = prepare_out(cfg.out_dir);
  const L1Outcome o = solve_l1(prob, cfg, dir, "", out);
  if (cfg.plot) {
    save_svg(solution_panels(prob, o.traj, o.result.control, std::nullopt), dir / "plot.svg");
  }
  return kOk;
}

int cmd_certify(const RunConfig& cfg, std::ostream& out) {
  const Problem prob = load_problem(cfg.problem_path);
  const PiecewiseConstantControl u = load_control(cfg.control_path);
  Vector p(static_cast<Eigen::Index>(cfg.p_hat.size()));
  for (std::size_t i = 0; i < cfg.p_hat.size(); ++i) p(static_cast<Eigen::Index>(i)) = cfg.p_hat[i];
  if (p.size() != prob.state_dim()) {
    throw ValidationError("phat", "expected " + std::to_string(prob.state_dim()) + " components");
  }
  const CertificateReport report = certify(prob, AdjointParams::make(cfg.eta, p), u);
  out << to_json(report).dump(2) << '\n';
  return report.passed ? kOk : kCertificateFailed;
}

int cmd_singularity(const RunConfig& cfg, std::ostream& out) {
  const double x1 = cfg.xi1, x2 = cfg.xi2, T = cfg.horizon;
  const double bound = -x2 / 2.0 - x1 / x2;
  const bool c1 = x1 > x2 * x2 / 2.0;
  const bool c2 = x2 < 0.0;
  const bool c3 = bound >= T;
  out << "xi1 > xi2^2/2: " << bool_str(c1) << " (" << format_double(x1) << " vs "
      << format_double(x2 * x2 / 2.0) << ")\n";
  out << "xi2 < 0: " << bool_str(c2) << '\n';
  out << "-xi2/2 - xi1/xi2 >= T: " << bool_str(c3) << " (" << format_double(bound) << " vs "
      << format_double(T) << ")\n";
  out << "singular=" << bool_str(c1 && c2 && c3) << '\n';
  return kOk;
}

int cmd_example(const RunConfig& cfg, std::ostream& out) {
  const Problem prob = example_problem(cfg.example);
  const fs::path dir = prepare_out(cfg.out_dir);
  save_problem(prob, dir / "problem.json");

  out << "[l0]\n";
  const L0Outcome l0 = solve_l0(prob, cfg, dir, out);
  out << "[l1]\n";
  const L1Outcome l1 = solve_l1(prob, cfg, dir, "l1_", out);

  out << "[comparison]\n";
  out << "l0_support=" << fixed6(l0.result.support) << '\n';
  out << "l1_support=" << fixed6(l1.support) << '\n';
  constexpr double kSparseThreshold = 3.05;
  if (cfg.example == "ex2") {
    if (l1.support > kSparseThreshold) {
      out << "l1_nonsparse=returned\n";
    } else {
      const auto w = l1_nonsparse_witness(prob, cfg.intervals, l1.result.control, l1.result.cost);
      if (w) {
        save_control(w->control, dir / "l1_witness_control.csv");
        out << "witness_cost=" << fixed6(l1_cost(w->control)) << '\n';
        out << "witness_support=" << fixed6(l0_cost(w->control, cfg.zero_tol)) << '\n';
        out << "witness_endpoint_residual="
            << format_double((propagate_endpoint(prob, w->control) - prob.B).norm()) << '\n';
        out << "l1_nonsparse=witness\n";
      } else {
        out << "l1_nonsparse=unshown\n";
      }
    }
  }

  std::vector<Panel> panels;
  Panel states{"state (solid L0, dashed L1)", {}};
  Panel control{"control (solid L0, dashed L1)", {}};
  for (Eigen::Index i = 0; i < prob.state_dim(); ++i) {
    const std::string n = std::to_string(i + 1);
    states.series.push_back(component("z" + n + " L0", l0.traj.grid, l0.traj.states, i));
    states.series.push_back(component("z" + n + " L1", l1.traj.grid, l1.traj.states, i, true));
  }
  for (Eigen::Index i = 0; i < prob.input_dim(); ++i) {
    const std::string n = std::to_string(i + 1);
    control.series.push_back(staircase("u" + n + " L0", l0.result.control, i));
    control.series.push_back(staircase("u" + n + " L1", l1.result.control, i, true));
  }
  panels.push_back(std::move(states));
  panels.push_back(std::move(control));
  save_svg(panels, dir / "comparison.svg");
  return kOk;
}

int cmd_min_time(const RunConfig& cfg, std::ostream& out) {
  const Problem prob = load_problem(cfg.problem_path);
  const double t = min_time(prob, cfg.time_tol, cfg.intervals);
  if (!std::isfinite(t)) {
    out << "min_time=inf\n";
    return kInfeasible;
  }
  out << "min_time=" << fixed6(t) << '\n';
  out << "feasible=" << bool_str(t <= prob.horizon()) << '\n';
  return kOk;
}

}  // namespace

Problem example_problem(const std::string& name) {
  Problem p;
  if (name == "ex1") {
    p.F = Matrix::Zero(1, 1);
    p.G = Matrix::Ones(1, 1);
    p.a = 0.0;
    p.b = 5.0;
    p.A = Vector::Constant(1, 3.0);
    p.B = Vector::Zero(1);
    p.U = AdmissibleSet::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  } else if (name == "ex2") {
    p.F = Matrix::Zero(2, 2);
    p.F(0, 1) = 1.0;
    p.G = Matrix::Zero(2, 1);
    p.G(1, 0) = 1.0;
    p.a = 0.0;
    p.b = 5.0;
    p.A = Vector(2);
    p.A << 10.0, -3.0;
    p.B = Vector::Zero(2);
    p.U = AdmissibleSet::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  } else {
    throw ValidationError("example", "unknown example \"" + name + "\" (expected ex1 or ex2)");
  }
  p.validate();
  return p;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Sparsest (maximum hands-off) control synthesis and certification", "handsoff"};
  app.require_subcommand(1);

  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  };
  auto add_zero_tol = [&](CLI::App* c) {
    c->add_option("--zero-tol", cfg.zero_tol, "Magnitude treated as zero")
        ->check(CLI::PositiveNumber);
  };
  auto add_intervals = [&](CLI::App* c) {
    c->add_option("--intervals,-N", cfg.intervals, "LP grid intervals")
        ->check(CLI::Range(2, 1'000'000))
        ->capture_default_str();
  };

  auto* l0 = app.add_subcommand("solve-l0", "Sparsest control by structure search");
  l0->add_option("problem", cfg.problem_path, "Problem JSON")->required();
  l0->add_option("--kmax", cfg.k_max, "Maximum number of segments (default 2d+1)")
      ->check(CLI::Range(1, 31));
  l0->add_option("--feas-tol", cfg.feas_tol, "Endpoint residual tolerance")
      ->check(CLI::PositiveNumber);
  l0->add_option("--seed", cfg.seed, "Optimizer seed");
  l0->add_flag("--plot", cfg.plot, "Write plot.svg");
  add_out(l0);
  add_zero_tol(l0);

  auto* l1 = app.add_subcommand("solve-l1", "L1 relaxation by linear programming");
  l1->add_option("problem", cfg.problem_path, "Problem JSON")->required();
  l1->add_flag("--plot", cfg.plot, "Write plot.svg");
  add_intervals(l1);
  add_out(l1);
  add_zero_tol(l1);

  auto* cert = app.add_subcommand("certify", "Check a control against the maximum principle");
  cert->add_option("problem", cfg.problem_path, "Problem JSON")->required();
  cert->add_option("control", cfg.control_path, "Control CSV")->required();
  cert->add_option("--eta", cfg.eta, "Cost multiplier")->required()->check(CLI::IsMember({0, 1}));
  cert->add_option("--phat", cfg.p_hat, "Terminal adjoint v1,...,vd")
      ->required()
      ->delimiter(',');

  auto* sing = app.add_subcommand("singularity", "Evaluate the L1 singularity inequalities");
  sing->add_option("--xi1", cfg.xi1)->required();
  sing->add_option("--xi2", cfg.xi2)->required();
  sing->add_option("--horizon", cfg.horizon)->required();

  auto* ex = app.add_subcommand("example", "Reproduce a built-in example (L0 against L1)");
  ex->add_option("name", cfg.example, "ex1 or ex2")->required()->check(CLI::IsMember({"ex1", "ex2"}));
  ex->add_option("--kmax", cfg.k_max)->check(CLI::Range(1, 31));
  ex->add_option("--seed", cfg.seed, "Optimizer seed");
  add_intervals(ex);
  add_out(ex);
  add_zero_tol(ex);

  auto* mt = app.add_subcommand("min-time", "Shortest feasible horizon");
  mt->add_option("problem", cfg.problem_path, "Problem JSON")->required();
  mt->add_option("--tol", cfg.time_tol, "Bisection tolerance")->check(CLI::PositiveNumber);
  add_intervals(mt);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  }

  std::string stage = "setup";
  try {
    if (l0->parsed()) {
      stage = "solve-l0";
      return cmd_solve_l0(cfg, out);
    }
    if (l1->parsed()) {
      stage = "solve-l1";
      return cmd_solve_l1(cfg, out);
    }
    if (cert->parsed()) {
      stage = "certify";
      return cmd_certify(cfg, out);
    }
    if (sing->parsed()) {
      stage = "singularity";
      return cmd_singularity(cfg, out);
    }
    if (ex->parsed()) {
      stage = "example";
      return cmd_example(cfg, out);
    }
    if (mt->parsed()) {
      stage = "min-time";
      return cmd_min_time(cfg, out);
    }
  } catch (const InfeasibleError& e) {
    err << stage << ": infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    err << stage << ": " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace handsoff::cli
