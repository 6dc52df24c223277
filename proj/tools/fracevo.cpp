// Command-line harness: solve experiment configs, compare solvers, check the
// growth bounds, or evaluate the Mittag-Leffler function directly.
// Exit codes: 0 success, 1 configuration error, 2 assertion failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <random>

#include "fracevo/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAssertion = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  unsigned seed = 0;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required();
  cmd->add_option("--out-dir", args.out_dir, "directory for output artifacts");
  cmd->add_option("--seed", args.seed, "seed for randomized spot checks");
  cmd->add_flag("--strict", args.strict, "promote warnings to failures");
}

int finish(const fracevo::ExperimentOutcome& outcome) {
  for (const auto& w : outcome.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  for (const auto& f : outcome.failures) {
    std::cerr << "FAILED: " << f << '\n';
  }
  if (!outcome.failures.empty()) return kExitAssertion;
  std::cout << "all assertions passed\n";
  return kExitOk;
}

// Random superposition probe: u(c1 x1 + c2 x2, ...) against
// c1 u(x1,...) + c2 u(x2,...), exercised under --strict in compare.
void superposition_probe(const fracevo::ExperimentConfig& cfg,
                         const fracevo::RunOptions& opts,
                         fracevo::ExperimentOutcome& outcome) {
  std::mt19937 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto dim = cfg.x.size();
  fracevo::Vector x2(dim), y2(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    x2(i) = dist(rng);
    y2(i) = dist(rng);
  }
  const double c1 = dist(rng), c2 = dist(rng);

  const auto grid = cfg.grid();
  auto ctl = fracevo::prepare_control(cfg.order(), cfg.A, cfg.B, cfg.f, grid,
                                      cfg.series_tol, 64, cfg.envelope);
  const auto base = fracevo::solve_ivp(cfg.order(), cfg.A, cfg.B,
                                       fracevo::ForcingTerm::zero(int(dim)),
                                       cfg.x, cfg.y, grid, ctl);
  const auto probe = fracevo::solve_ivp(cfg.order(), cfg.A, cfg.B,
                                        fracevo::ForcingTerm::zero(int(dim)),
                                        x2, y2, grid, ctl);
  const auto mixed = fracevo::solve_ivp(
      cfg.order(), cfg.A, cfg.B, fracevo::ForcingTerm::zero(int(dim)),
      (c1 * cfg.x + c2 * x2).eval(), (c1 * cfg.y + c2 * y2).eval(), grid, ctl);

  double dev = 0.0, scale = 0.0;
  for (int i = 0; i <= grid.steps(); ++i) {
    const fracevo::Vector combo =
        c1 * base.trajectory.values[i] + c2 * probe.trajectory.values[i];
    dev = std::max(dev,
                   (mixed.trajectory.values[i] - combo).norm());
    scale = std::max(scale, combo.norm());
  }
  if (dev > 1e-10 * (1.0 + scale)) {
    outcome.failures.push_back("superposition probe deviates by " +
                               fracevo::format_full(dev));
  }
}

int run_config_command(const CommonArgs& args, bool compare_mode) {
  fracevo::ExperimentConfig cfg;
  try {
    cfg = fracevo::load_config(args.config_path);
    if (compare_mode && cfg.solvers.size() < 2) {
      throw fracevo::ConfigError(
          "config field 'solvers.enabled': compare needs at least 2 solvers");
    }
  } catch (const fracevo::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  fracevo::RunOptions opts;
  opts.out_dir = args.out_dir;
  opts.strict = args.strict;
  opts.seed = args.seed;
  try {
    auto outcome = fracevo::run_experiment(cfg, opts);
    if (compare_mode && args.strict) superposition_probe(cfg, opts, outcome);
    return finish(outcome);
  } catch (const fracevo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fracevo::Error& e) {
    std::cerr << "FAILED: " << e.what() << '\n';
    return kExitAssertion;
  }
}

int run_bounds_check(const CommonArgs& args) {
  try {
    const auto cfg = fracevo::load_config(args.config_path);
    fracevo::RunOptions opts;
    opts.out_dir = args.out_dir;
    opts.strict = args.strict;
    const auto grid = cfg.grid();
    auto ctl = fracevo::prepare_control(cfg.order(), cfg.A, cfg.B, cfg.f, grid,
                                        cfg.series_tol, 64, cfg.envelope);
    const auto report = fracevo::verify_growth_bounds(
        cfg.order(), cfg.A, cfg.B, grid, ctl, 1e-9,
        /*throw_on_violation=*/false);
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream out(opts.out_dir / std::filesystem::path(cfg.bounds_csv));
    out << "s,norm_C,bound_C,margin_C,norm_S,bound_S,margin_S\n";
    for (const auto& row : report.rows) {
      out << fracevo::format_full(row.t) << ','
          << fracevo::format_full(row.norm_cos) << ','
          << fracevo::format_full(row.bound_cos) << ','
          << fracevo::format_full(row.margin_cos) << ','
          << fracevo::format_full(row.norm_sin) << ','
          << fracevo::format_full(row.bound_sin) << ','
          << fracevo::format_full(row.margin_sin) << '\n';
    }
    std::cout << "min margin " << fracevo::format_full(report.min_margin)
              << '\n';
    if (!report.ok) {
      std::cerr << "FAILED: growth bound margins below -1e-9\n";
      return kExitAssertion;
    }
    return kExitOk;
  } catch (const fracevo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fracevo::Error& e) {
    std::cerr << "FAILED: " << e.what() << '\n';
    return kExitAssertion;
  }
}

int run_ml_eval(double alpha, double beta, double z) {
  try {
    const auto res = fracevo::ml_scalar_detailed({alpha, beta}, z);
    std::printf("E_{%g,%g}(%g) = %.17g\n", alpha, beta, z, res.value);
    std::printf("terms=%d truncation_bound=%.3g rounding_bound=%.3g\n",
                res.terms, res.truncation_bound, res.rounding_bound);
    return kExitOk;
  } catch (const fracevo::NonConvergence& e) {
    std::cerr << "FAILED: " << e.what() << '\n';
    return kExitAssertion;
  } catch (const fracevo::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracevo: fractional evolution equation solvers"};
  app.require_subcommand(1);

  CommonArgs solve_args, compare_args, bounds_args;
  auto* solve_cmd = app.add_subcommand(
      "solve", "run the configured solvers and write all artifacts");
  add_common(solve_cmd, solve_args);

  auto* compare_cmd = app.add_subcommand(
      "compare", "run two or more solvers and diff their trajectories");
  add_common(compare_cmd, compare_args);

  auto* bounds_cmd = app.add_subcommand(
      "bounds-check", "evaluate the growth-bound margins on the grid");
  add_common(bounds_cmd, bounds_args);

  double ml_alpha = 1.0, ml_beta = 1.0, ml_z = 0.0;
  auto* ml_cmd = app.add_subcommand(
      "ml-eval", "print E_{alpha,beta}(z) with its certified bounds");
  ml_cmd->add_option("alpha", ml_alpha, "first parameter, > 0")->required();
  ml_cmd->add_option("beta", ml_beta, "second parameter")->required();
  ml_cmd->add_option("z", ml_z, "argument")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (solve_cmd->parsed()) return run_config_command(solve_args, false);
  if (compare_cmd->parsed()) return run_config_command(compare_args, true);
  if (bounds_cmd->parsed()) return run_bounds_check(bounds_args);
  if (ml_cmd->parsed()) return run_ml_eval(ml_alpha, ml_beta, ml_z);
  return kExitConfig;
}
