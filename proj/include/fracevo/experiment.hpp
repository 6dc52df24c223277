#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracevo/closedform.hpp"
#include "fracevo/oracle.hpp"
#include "fracevo/perturb.hpp"

namespace fracevo {

enum class SolverKind { series, nonpermutable, permutable, classical, oracle };

std::string solver_name(SolverKind kind);

// Flat key-value experiment description with [section] headers; matrices and
// vectors are row-major bracketed lists.  See README for the format.
struct ExperimentConfig {
  double alpha = 1.5;
  double T = 1.0;
  int N = 256;
  Matrix A;
  TimeDependentOperator B = TimeDependentOperator::zero(1);
  ForcingTerm f = ForcingTerm::zero(1);
  Vector x;
  Vector y;
  std::vector<SolverKind> solvers;

  double series_tol = 1e-10;
  double quad_assert_tol = 1e-4;
  double cross_tol = 1e-6;
  std::optional<GrowthEnvelope> envelope;

  std::string solution_csv = "solution.csv";
  std::string residual_csv = "residual.csv";
  std::string bounds_csv = "bounds.csv";
  std::string report = "report.txt";

  TimeGrid grid() const { return TimeGrid(T, N); }
  FractionalOrder order() const { return FractionalOrder(alpha); }
};

// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);

struct SolverRun {
  SolverKind kind = SolverKind::series;
  VectorTrajectory trajectory;
  double max_residual = 0.0;  // interior-node defect
  // Series certificates (series solver only).
  int cosine_terms = 0, sine_terms = 0, forcing_terms = 0;
  double cosine_remainder = 0.0, sine_remainder = 0.0, forcing_remainder = 0.0;
};

struct CrossDeviation {
  SolverKind first;
  SolverKind second;
  double max_deviation = 0.0;
};

struct ExperimentOutcome {
  std::vector<SolverRun> runs;
  std::vector<CrossDeviation> deviations;
  BoundsReport bounds;
  std::vector<std::string> failures;  // failed assertions, exit 2 when set
  std::vector<std::string> warnings;  // promoted to failures under --strict
  double initial_derivative_gap = 0.0;
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool strict = false;
  unsigned seed = 0;
  int max_threads = 0;         // 0: decide from FRACEVO_THREADS / hardware
  bool write_outputs = true;
  bool run_bounds = true;
  bool run_residuals = true;
};

// Runs every requested solver, cross-checks them pairwise, evaluates the
// defect of each trajectory and the growth-bound margins, then writes the
// solution/residual/bounds CSVs and the report.  Deterministic output:
// identical config, byte-identical artifacts.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const RunOptions& opts);

// 17-significant-digit decimal, round-trip exact.
std::string format_full(double v);

int thread_budget(int requested_jobs, int max_threads_option);

}  // namespace fracevo
