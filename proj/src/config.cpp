#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "fracevo/experiment.hpp"

namespace fracevo {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

double parse_number(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  fail(field, "expected a number, got '" + text + "'");
}

// Bracketed list of numbers: [1, 2.5, -3e-2]
std::vector<double> parse_list(const std::string& field, std::string text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
    fail(field, "expected a bracketed list, got '" + text + "'");
  }
  std::vector<double> out;
  std::string item;
  std::istringstream in(text.substr(1, text.size() - 2));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(field, "empty element in list");
    out.push_back(parse_number(field, item));
  }
  return out;
}

Vector parse_vector(const std::string& field, const std::string& text) {
  const auto vals = parse_list(field, text);
  if (vals.empty()) fail(field, "vector must not be empty");
  Vector v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) v(i) = vals[i];
  return v;
}

// Row-major bracketed rows: [[a, b], [c, d]]
Matrix parse_matrix(const std::string& field, std::string text) {
  text = trim(text);
  if (text.size() < 4 || text.front() != '[' || text.back() != ']') {
    fail(field, "expected a bracketed matrix, got '" + text + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t pos = 1;
  while (pos < text.size() - 1) {
    const auto open = text.find('[', pos);
    if (open == std::string::npos) break;
    const auto close = text.find(']', open);
    if (close == std::string::npos) fail(field, "unbalanced brackets");
    rows.push_back(parse_list(field, text.substr(open, close - open + 1)));
    pos = close + 1;
  }
  if (rows.empty()) fail(field, "matrix must have at least one row");
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != cols) fail(field, "ragged matrix rows");
  }
  Matrix M(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = rows[i][j];
  }
  return M;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& field,
                                               const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) fail(field, "cannot open samples file " + p.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      cell = trim(cell);
      if (!cell.empty() && !std::isdigit(static_cast<unsigned char>(cell[0])) &&
          cell[0] != '-' && cell[0] != '+' && cell[0] != '.') {
        row.clear();  // header line
        break;
      }
      row.push_back(parse_number(field, cell));
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(field, "samples file " + p.string() + " is empty");
  return rows;
}

TimeGrid samples_grid(const std::string& field,
                      const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 3) fail(field, "need at least 3 sample rows");
  const double T = rows.back().front();
  if (!(T > 0.0)) fail(field, "sample times must end at T > 0");
  const int N = static_cast<int>(rows.size()) - 1;
  const TimeGrid grid(T, N);
  for (int i = 0; i <= N; ++i) {
    if (std::abs(rows[i].front() - grid.node(i)) > 1e-9 * T) {
      fail(field, "sample times must form a uniform grid from 0 to T");
    }
  }
  return grid;
}

TimeDependentOperator load_operator_samples(const std::string& field,
                                            const std::filesystem::path& p) {
  const auto rows = read_csv_rows(field, p);
  const auto grid = samples_grid(field, rows);
  const std::size_t entries = rows.front().size() - 1;
  const int dim = static_cast<int>(std::llround(std::sqrt(double(entries))));
  if (static_cast<std::size_t>(dim) * dim != entries) {
    fail(field, "row length must be 1 + n^2 (t plus row-major entries)");
  }
  std::vector<Matrix> values;
  values.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != entries + 1) fail(field, "ragged sample rows");
    Matrix M(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) M(i, j) = row[1 + i * dim + j];
    }
    values.push_back(std::move(M));
  }
  return TimeDependentOperator::tabulated(
      OperatorTrajectory(grid, std::move(values)));
}

ForcingTerm load_forcing_samples(const std::string& field,
                                 const std::filesystem::path& p) {
  const auto rows = read_csv_rows(field, p);
  const auto grid = samples_grid(field, rows);
  const std::size_t dim = rows.front().size() - 1;
  if (dim == 0) fail(field, "rows must carry at least one component");
  std::vector<Vector> values;
  values.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != dim + 1) fail(field, "ragged sample rows");
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) v(i) = row[1 + i];
    values.push_back(std::move(v));
  }
  return ForcingTerm::tabulated(VectorTrajectory(grid, std::move(values)));
}

SolverKind parse_solver(const std::string& name) {
  if (name == "series") return SolverKind::series;
  if (name == "nonpermutable") return SolverKind::nonpermutable;
  if (name == "permutable") return SolverKind::permutable;
  if (name == "classical") return SolverKind::classical;
  if (name == "oracle") return SolverKind::oracle;
  fail("solvers", "unknown solver '" + name + "'");
}

}  // namespace

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::series: return "series";
    case SolverKind::nonpermutable: return "nonpermutable";
    case SolverKind::permutable: return "permutable";
    case SolverKind::classical: return "classical";
    case SolverKind::oracle: return "oracle";
  }
  return "unknown";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

ExperimentConfig parse_config(std::istream& in,
                              const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> kv;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (kv.count(key)) fail(key, "duplicate key");
    kv[key] = trim(line.substr(eq + 1));
  }

  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto require = [&take](const std::string& key) -> std::string {
    auto v = take(key);
    if (!v) fail(key, "missing required field");
    return *v;
  };

  ExperimentConfig cfg;
  try {
    cfg.alpha = parse_number("problem.alpha", require("problem.alpha"));
    (void)FractionalOrder(cfg.alpha);
  } catch (const ConfigError& e) {
    if (std::string(e.what()).find("problem.alpha") != std::string::npos) throw;
    fail("problem.alpha", e.what());
  }
  cfg.T = parse_number("problem.T", require("problem.T"));
  if (!(cfg.T > 0.0)) fail("problem.T", "horizon must be positive");
  cfg.N = static_cast<int>(parse_number("problem.N", require("problem.N")));
  if (cfg.N < 8) fail("problem.N", "need at least 8 steps");
  cfg.A = parse_matrix("problem.A", require("problem.A"));
  if (cfg.A.rows() != cfg.A.cols()) fail("problem.A", "matrix must be square");
  const int dim = static_cast<int>(cfg.A.rows());

  // B: constant and/or polynomial coefficients B, B1, B2, ... or samples.
  try {
    if (auto path = take("problem.B_samples")) {
      if (kv.count("problem.B") || kv.count("problem.B1")) {
        fail("problem.B_samples", "tabulated B excludes matrix coefficients");
      }
      cfg.B = load_operator_samples("problem.B_samples", base_dir / *path);
    } else {
      std::vector<Matrix> coeffs;
      if (auto b0 = take("problem.B")) {
        coeffs.push_back(parse_matrix("problem.B", *b0));
      } else {
        coeffs.push_back(Matrix::Zero(dim, dim));
      }
      for (int k = 1;; ++k) {
        auto bk = take("problem.B" + std::to_string(k));
        if (!bk) break;
        coeffs.push_back(parse_matrix("problem.B" + std::to_string(k), *bk));
      }
      cfg.B = TimeDependentOperator::polynomial(std::move(coeffs));
    }
  } catch (const Error& e) {
    if (std::string(e.what()).find("config field") != std::string::npos) throw;
    fail("problem.B", e.what());
  }
  if (cfg.B.dim() != dim) fail("problem.B", "dimension differs from A");

  try {
    if (auto path = take("problem.f_samples")) {
      if (kv.count("problem.f")) {
        fail("problem.f_samples", "tabulated f excludes the constant form");
      }
      cfg.f = load_forcing_samples("problem.f_samples", base_dir / *path);
    } else {
      const std::string ftext = take("problem.f").value_or("zero");
      if (ftext == "zero") {
        cfg.f = ForcingTerm::zero(dim);
      } else {
        cfg.f = ForcingTerm::constant(parse_vector("problem.f", ftext));
      }
    }
  } catch (const Error& e) {
    if (std::string(e.what()).find("config field") != std::string::npos) throw;
    fail("problem.f", e.what());
  }
  if (cfg.f.dim() != dim) fail("problem.f", "dimension differs from A");

  cfg.x = parse_vector("problem.x", require("problem.x"));
  cfg.y = parse_vector("problem.y", require("problem.y"));
  if (cfg.x.size() != dim) fail("problem.x", "dimension differs from A");
  if (cfg.y.size() != dim) fail("problem.y", "dimension differs from A");

  {
    std::string list = require("solvers.enabled");
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream ls(list);
    std::string name;
    while (ls >> name) cfg.solvers.push_back(parse_solver(name));
    if (cfg.solvers.empty()) fail("solvers.enabled", "no solvers requested");
  }

  if (auto v = take("tolerances.series_tol")) {
    cfg.series_tol = parse_number("tolerances.series_tol", *v);
  }
  if (auto v = take("tolerances.quad_assert_tol")) {
    cfg.quad_assert_tol = parse_number("tolerances.quad_assert_tol", *v);
  }
  if (auto v = take("tolerances.cross_tol")) {
    cfg.cross_tol = parse_number("tolerances.cross_tol", *v);
  }
  if (!(cfg.series_tol > 0.0)) fail("tolerances.series_tol", "must be positive");

  const auto M = take("envelope.M");
  const auto omega = take("envelope.omega");
  if (M.has_value() != omega.has_value()) {
    fail("envelope.M", "provide both M and omega or neither");
  }
  if (M) {
    GrowthEnvelope env;
    env.M = parse_number("envelope.M", *M);
    env.omega = parse_number("envelope.omega", *omega);
    if (env.M < 1.0) fail("envelope.M", "M must be >= 1");
    if (env.omega < 0.0) fail("envelope.omega", "omega must be >= 0");
    cfg.envelope = env;
  }

  if (auto v = take("outputs.solution_csv")) cfg.solution_csv = *v;
  if (auto v = take("outputs.residual_csv")) cfg.residual_csv = *v;
  if (auto v = take("outputs.bounds_csv")) cfg.bounds_csv = *v;
  if (auto v = take("outputs.report")) cfg.report = *v;

  if (!kv.empty()) fail(kv.begin()->first, "unknown field");

  // Solver/coefficient compatibility.
  const bool constant_B = cfg.B.kind() == TimeDependentOperator::Kind::constant;
  for (SolverKind s : cfg.solvers) {
    if ((s == SolverKind::nonpermutable || s == SolverKind::permutable ||
         s == SolverKind::classical) &&
        !constant_B) {
      fail("solvers.enabled", "solver '" + solver_name(s) +
                                  "' needs a constant perturbation B");
    }
    if (s == SolverKind::classical && cfg.alpha != 2.0) {
      fail("solvers.enabled", "solver 'classical' needs alpha = 2");
    }
    if (s == SolverKind::permutable) {
      const auto comm = commutator(cfg.A, cfg.B(0.0));
      if (!comm.is_zero) {
        fail("solvers.enabled",
             "NotPermutable: A and B do not commute, ||[A,B]|| = " +
                 std::to_string(operator_norm(comm.value)));
      }
    }
  }
  return cfg;
}

}  // namespace fracevo
