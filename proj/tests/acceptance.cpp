// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "handsoff/certify.hpp"
#include "handsoff/cli.hpp"
#include "handsoff/control_law.hpp"
#include "handsoff/linalg.hpp"
#include "handsoff/lp.hpp"
#include "handsoff/sim.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace handsoff;
using handsoff::testing::vec;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

struct CliRun {
  int code;
  std::string out;
  std::string err;
  double seconds;
};

CliRun cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cli::run(args, out, err);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {code, out.str(), err.str(), s};
}

/// Value of the first "key=value" line after `section` (or from the top).
std::string field(const std::string& text, const std::string& key, const std::string& section = "") {
  std::size_t from = section.empty() ? 0 : text.find(section);
  if (from == std::string::npos) return "";
  const std::string needle = "\n" + key + "=";
  const std::size_t pos = ("\n" + text).find(needle, from);
  if (pos == std::string::npos) return "";
  const std::size_t start = pos + needle.size() - 1;
  return text.substr(start, text.find('\n', start) - start);
}

double number(const std::string& s) {
  try {
    return std::stod(s);
  } catch (...) {
    return std::nan("");
  }
}

std::vector<double> numbers(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(number(cell));
  return out;
}

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome criterion1(const fs::path& dir) {
  Outcome o;
  const auto r = cli_run({"example", "ex1", "--out", (dir / "ex1").string()});
  const double s = number(field(r.out, "l0_support"));
  o.require(r.code == 0, "exit " + std::to_string(r.code));
  o.require(std::abs(s - 3.0) <= 1e-4, fmt("support %.6f", s));
  o.require(r.seconds < 5.0, fmt("%.2f s", r.seconds));
  return o;
}

Outcome criterion2(const fs::path& dir) {
  Outcome o;
  const auto r = cli_run({"example", "ex2", "--out", (dir / "ex2").string()});
  const double s = number(field(r.out, "support", "[l0]"));
  const auto bps = numbers(field(r.out, "breakpoints", "[l0]"));
  const std::string values = field(r.out, "values", "[l0]");
  const double res = number(field(r.out, "endpoint_residual", "[l0]"));
  o.require(r.code == 0, "exit " + std::to_string(r.code));
  o.require(std::abs(s - 3.0) <= 1e-4, fmt("support %.6f", s));
  o.require(values == "(0),(1),(0)", "values " + values);
  o.require(bps.size() == 4 && std::abs(bps[1] - 11.0 / 6.0) <= 1e-3 &&
                std::abs(bps[2] - 29.0 / 6.0) <= 1e-3,
            "breakpoints " + field(r.out, "breakpoints", "[l0]"));
  o.require(res <= 1e-6, fmt("residual %.2e", res));
  o.require(r.seconds < 30.0, fmt("%.2f s", r.seconds));
  return o;
}

Outcome criterion3(const fs::path& dir) {
  Outcome o;
  const auto prob = dir / "ex2_problem.json";
  const auto ctrl = dir / "ex2_u.csv";
  save_problem(testing::double_integrator(), prob);
  save_control(testing::off_on_off(), ctrl);
  const auto r = cli_run({"certify", prob.string(), ctrl.string(), "--eta", "1", "--phat", "0,1"});
  o.require(r.code == 0, "exit " + std::to_string(r.code));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(r.out);
  } catch (...) {
    o.require(false, "report is not JSON");
    return o;
  }
  o.require(j.value("passed", false), "passed");
  o.require(j.value("locally_optimal", false), "locally_optimal");
  for (const char* k : {"adjoint_residual", "hmax_violation", "endpoint_residual"}) {
    const double v = j.value(k, 1.0);
    o.require(v <= 1e-6, fmt((std::string(k) + " %.1e").c_str(), v));
  }
  const double spread = j.value("constancy_spread", 1.0);
  o.require(spread <= 1e-9, fmt("spread %.1e", spread));
  const double level = j.value("hamiltonian_level", 0.0);
  o.require(std::abs(level - 1.0) <= 1e-9, fmt("H=%.12f", level));
  return o;
}

Outcome criterion4(const fs::path& dir) {
  Outcome o;
  const auto p = testing::double_integrator();
  const auto prob = dir / "ex2_problem.json";
  save_problem(p, prob);
  const auto out = dir / "l1";
  const auto r = cli_run({"solve-l1", prob.string(), "--intervals", "1000", "--out", out.string()});
  const double cost = number(field(r.out, "l1_cost"));
  const double support = number(field(r.out, "l1_support"));
  o.require(r.code == 0, "exit " + std::to_string(r.code));
  o.require(std::abs(cost - 3.0) <= 1e-3, fmt("l1_cost %.6f", cost));
  if (support > 3.05) {
    o.require(true, fmt("returned support %.3f", support));
    return o;
  }
  o.detail += fmt("; returned support %.3f, building witness", support);
  const auto returned = load_control(out / "control.csv");
  const auto w = l1_nonsparse_witness(p, 1000, returned, l1_cost(returned));
  if (!w) {
    o.require(false, "witness LP");
    return o;
  }
  const double wc = l1_cost(w->control), ws = l0_cost(w->control);
  const double wr = (propagate_endpoint(p, w->control) - p.B).norm();
  o.require(wc <= 3.0 + 1e-6, fmt("witness cost %.9f", wc));
  o.require(ws >= 4.0, fmt("witness support %.3f", ws));
  o.require(wr <= 1e-6, fmt("witness residual %.1e", wr));
  return o;
}

Outcome criterion5(const fs::path& dir) {
  Outcome o;
  const auto short_prob = dir / "ex1_short.json";
  const auto prob = dir / "ex1.json";
  save_problem(testing::scalar_integrator(2.0), short_prob);
  save_problem(testing::scalar_integrator(), prob);
  const auto r = cli_run({"solve-l0", short_prob.string(), "--out", (dir / "short").string()});
  o.require(r.code == 2, "horizon 2 exit " + std::to_string(r.code));
  const auto m = cli_run({"min-time", prob.string()});
  const double t = number(field(m.out, "min_time"));
  o.require(m.code == 0 && std::abs(t - 3.0) <= 1e-2, fmt("min_time %.6f", t));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto p = testing::double_integrator();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0, ties = 0;
  for (int k = 0; k < 1000; ++k) {
    const int eta = unit(rng) < 0.8 ? 1 : 0;
    Vector ph = vec({6.0 * unit(rng) - 3.0, 6.0 * unit(rng) - 3.0});
    if (k % 20 == 0) ph = vec({0.0, 1.0});
    const double t = 5.0 * unit(rng);
    const Vector z = vec({20.0 * unit(rng) - 10.0, 20.0 * unit(rng) - 10.0});
    const auto ap = AdjointParams::make(eta, ph);
    const auto cand = control_candidates(p, ap, t);
    const auto grid = argmax_hamiltonian_bruteforce(p, ap, z, t, 10001, 1e-9);
    const auto reps = cand.representatives();
    if (reps.size() > 1) ++ties;
    for (const auto& v : reps) {
      const bool hit = std::any_of(grid.begin(), grid.end(),
                                   [&](const Vector& g) { return (g - v).norm() <= 1e-12; });
      if (!hit) ++violations;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " violations");
  o.detail += "; " + std::to_string(ties) + " tie samples";
  return o;
}

double rk4_ratio(const Problem& p, const PiecewiseConstantControl& u) {
  const auto err = [&](int steps) {
    return (propagate_rk4(linear_dynamics(p), u, p.A, steps).states.back() - propagate_endpoint(p, u))
        .norm();
  };
  return err(40) / err(80);
}

Outcome criterion7() {
  Outcome o;
  double worst_semi = 0.0, worst_inv = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 4);
    Matrix M(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) M(i, j) = g(rng);
    const double s = g(rng), t = g(rng);
    const Matrix lhs = mat_exp(M, s + t);
    worst_semi = std::max(worst_semi, (lhs - mat_exp(M, s) * mat_exp(M, t)).norm() /
                                          std::max(1.0, lhs.norm()));
    worst_inv = std::max(worst_inv, (mat_exp(M) * mat_exp(M, -1.0) - Matrix::Identity(n, n)).norm());
  }
  o.require(worst_semi <= 1e-10, fmt("semigroup %.1e", worst_semi));
  o.require(worst_inv <= 1e-10, fmt("inverse %.1e", worst_inv));

  Problem damped;
  damped.F = Matrix(2, 2);
  damped.F << -0.3, 2.0, -2.0, -0.1;
  damped.G = Matrix(2, 1);
  damped.G << 0.0, 1.0;
  damped.a = 0.0;
  damped.b = 4.0;
  damped.A = vec({1.0, 0.0});
  damped.B = vec({0.0, 0.0});
  damped.U = testing::unit_box(1);
  Problem scalar = testing::scalar_integrator();
  scalar.F(0, 0) = -1.3;
  const PiecewiseConstantControl u({0.0, 1.0, 3.0, 4.0}, {vec({0.0}), vec({1.0}), vec({-0.5})});
  const PiecewiseConstantControl v({0.0, 2.0, 5.0}, {vec({-1.0}), vec({0.0})});
  for (const auto& [name, ratio] :
       {std::pair{"rk4 damped", rk4_ratio(damped, u)}, std::pair{"rk4 scalar", rk4_ratio(scalar, v)}}) {
    o.require(ratio >= 10.0 && ratio <= 24.0, fmt((std::string(name) + " ratio %.2f").c_str(), ratio));
  }

  std::mt19937_64 rng(31);
  double worst_lp = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const LpProblem lp = testing::random_lp(rng, 1 + trial % 5, 8);
    const auto oracle = testing::vertex_oracle(lp);
    const LpSolution sol = simplex_solve(lp);
    if (!oracle || sol.status != LpStatus::Optimal) {
      ++failures;
      continue;
    }
    worst_lp = std::max(worst_lp, std::abs(sol.objective - *oracle));
  }
  o.require(failures == 0 && worst_lp <= 1e-8, fmt("lp vs vertex oracle %.1e", worst_lp));
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double a = -2.0 + 0.02 * k, b = a + 0.1 + 0.07 * k;
    const auto u = testing::random_control(rng, a, b, 1 + k % 3);
    worst = std::max(worst, std::abs(l0_cost(u) + zero_measure(u) - (b - a)));
  }
  o.require(worst <= 1e-12, fmt("max deviation %.1e", worst));
  return o;
}

Outcome criterion9() {
  Outcome o;
  struct Case {
    const char *xi1, *xi2, *T;
    const char* c1;
    const char* c3;
    const char* verdict;
  };
  const Case cases[] = {{"10", "-3", "4.8", "true", "true", "true"},
                        {"1", "-3", "1", "false", "true", "false"},
                        {"10", "-3", "5", "true", "false", "false"}};
  for (const auto& c : cases) {
    const auto r = cli_run({"singularity", "--xi1", c.xi1, "--xi2", c.xi2, "--horizon", c.T});
    const bool ok = r.code == 0 &&
                    r.out.find(std::string("xi1 > xi2^2/2: ") + c.c1) != std::string::npos &&
                    r.out.find("xi2 < 0: true") != std::string::npos &&
                    r.out.find(std::string("-xi2/2 - xi1/xi2 >= T: ") + c.c3) != std::string::npos &&
                    field(r.out, "singular") == c.verdict;
    o.require(ok, std::string("(") + c.xi1 + "," + c.xi2 + "," + c.T + ") singular=" +
                      field(r.out, "singular"));
  }
  return o;
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "handsoff_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [&] { return criterion1(dir); }}, {2, [&] { return criterion2(dir); }},
      {3, [&] { return criterion3(dir); }}, {4, [&] { return criterion4(dir); }},
      {5, [&] { return criterion5(dir); }}, {6, criterion6},
      {7, criterion7},                      {8, criterion8},
      {9, criterion9}};
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
