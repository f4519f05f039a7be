#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "handsoff/errors.hpp"
#include "handsoff/model.hpp"

namespace handsoff {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError("problem: top-level value must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("problem: missing key \"") + key + "\"");
  return *it;
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field + ": expected a number");
  return j.get<double>();
}

Vector as_vector(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = as_number(j[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix as_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ParseError(field + ": expected a nested array");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ParseError(field + ": rows must be arrays");
  const std::size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ValidationError(field, "row " + std::to_string(r) + " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return M;
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

double parse_double(const std::string& cell, std::size_t line) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("control CSV line " + std::to_string(line) + ": bad number \"" + cell +
                     "\"");
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Problem problem_from_json(const json& j) {
  Problem p;
  p.F = as_matrix(require(j, "F"), "F");
  p.G = as_matrix(require(j, "G"), "G");
  p.a = as_number(require(j, "a"), "a");
  p.b = as_number(require(j, "b"), "b");
  p.A = as_vector(require(j, "A"), "A");
  p.B = as_vector(require(j, "B"), "B");

  const json& u = require(j, "U");
  if (!u.is_object() || !u.contains("kind") || !u["kind"].is_string()) {
    throw ParseError("U: expected an object with a string \"kind\"");
  }
  const auto kind = u["kind"].get<std::string>();
  if (kind == "box") {
    if (!u.contains("lower") || !u.contains("upper")) {
      throw ParseError("U: box requires \"lower\" and \"upper\"");
    }
    p.U = AdmissibleSet::box(as_vector(u["lower"], "U.lower"), as_vector(u["upper"], "U.upper"));
  } else if (kind == "ball") {
    if (!u.contains("radius")) throw ParseError("U: ball requires \"radius\"");
    p.U = AdmissibleSet::ball(as_number(u["radius"], "U.radius"), p.G.cols());
  } else {
    throw ValidationError("U.kind", "unknown kind \"" + kind + "\"");
  }
  p.validate();
  return p;
}

json problem_to_json(const Problem& prob) {
  json j;
  j["F"] = matrix_json(prob.F);
  j["G"] = matrix_json(prob.G);
  j["a"] = prob.a;
  j["b"] = prob.b;
  j["A"] = vector_json(prob.A);
  j["B"] = vector_json(prob.B);
  if (prob.U.is_box()) {
    j["U"] = {{"kind", "box"},
              {"lower", vector_json(prob.U.lower())},
              {"upper", vector_json(prob.U.upper())}};
  } else {
    j["U"] = {{"kind", "ball"}, {"radius", prob.U.radius()}};
  }
  return j;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const Problem& prob, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << problem_to_json(prob).dump(2) << '\n';
}

void write_control_csv(const PiecewiseConstantControl& u, std::ostream& os) {
  os << "t_start,t_end";
  for (Eigen::Index i = 0; i < u.input_dim(); ++i) os << ",u_" << (i + 1);
  os << '\n';
  for (std::size_t k = 0; k < u.num_segments(); ++k) {
    os << format_double(u.breakpoints()[k]) << ',' << format_double(u.breakpoints()[k + 1]);
    const Vector& v = u.values()[k];
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v(i));
    os << '\n';
  }
}

PiecewiseConstantControl read_control_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("control CSV: missing header");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0].rfind("t_start", 0) != 0) {
    throw ParseError("control CSV: header must be t_start,t_end,u_1,...");
  }
  const std::size_t m = header.size() - 2;

  std::vector<double> bps;
  std::vector<Vector> values;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != m + 2) {
      throw ParseError("control CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(m + 2) + " fields");
    }
    const double t0 = parse_double(cells[0], lineno);
    const double t1 = parse_double(cells[1], lineno);
    if (bps.empty()) {
      bps.push_back(t0);
    } else if (t0 != bps.back()) {
      throw ValidationError("control.breakpoints", "segment at line " + std::to_string(lineno) +
                                                       " does not start where the previous ended");
    }
    bps.push_back(t1);
    Vector v(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      v(static_cast<Eigen::Index>(i)) = parse_double(cells[i + 2], lineno);
    }
    values.push_back(std::move(v));
  }
  if (values.empty()) throw ParseError("control CSV: no segments");
  return PiecewiseConstantControl(std::move(bps), std::move(values));
}

void save_control(const PiecewiseConstantControl& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_control_csv(u, out);
  if (!out) throw IoError("write failed for " + path.string());
}

PiecewiseConstantControl load_control(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open control file " + path.string());
  return read_control_csv(in);
}

}  // namespace handsoff
