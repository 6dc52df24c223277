#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "fracevo/experiment.hpp"

namespace fracevo {

namespace {

Vector one_sided_derivative(const VectorTrajectory& u) {
  if (u.grid.nodes() < 4) {
    throw GridTooCoarse("4-point derivative stencil needs 4 nodes");
  }
  const double h = u.grid.dt();
  return (-11.0 * u.values[0] + 18.0 * u.values[1] - 9.0 * u.values[2] +
          2.0 * u.values[3]) /
         (6.0 * h);
}

// Checks u'(0) -> y on a dedicated fine grid: the series construction
// guarantees the initial slope, the solver never imposes it.
double initial_slope_gap(const ExperimentConfig& cfg) {
  const double delta = cfg.T * 1e-8;
  const TimeGrid fine(3.0 * delta, 3);
  SeriesControl ctl = prepare_control(cfg.order(), cfg.A, cfg.B, cfg.f, fine,
                                      cfg.series_tol, 64, cfg.envelope);
  const auto sol =
      solve_ivp(cfg.order(), cfg.A, cfg.B, cfg.f, cfg.x, cfg.y, fine, ctl);
  return (one_sided_derivative(sol.trajectory) - cfg.y).norm();
}

SolverRun run_solver(SolverKind kind, const ExperimentConfig& cfg,
                     const SeriesControl& ctl) {
  const TimeGrid grid = cfg.grid();
  SolverRun run;
  run.kind = kind;
  switch (kind) {
    case SolverKind::series: {
      const auto sol =
          solve_ivp(cfg.order(), cfg.A, cfg.B, cfg.f, cfg.x, cfg.y, grid, ctl);
      run.trajectory = sol.trajectory;
      run.cosine_terms = sol.cosine_terms;
      run.sine_terms = sol.sine_terms;
      run.forcing_terms = sol.forcing_terms;
      run.cosine_remainder = sol.cosine_remainder;
      run.sine_remainder = sol.sine_remainder;
      run.forcing_remainder = sol.forcing_remainder;
      return run;
    }
    case SolverKind::nonpermutable:
      run.trajectory = solve_nonpermutable(cfg.order(), cfg.A, cfg.B(0.0),
                                           cfg.f, cfg.x, cfg.y, grid, ctl);
      return run;
    case SolverKind::permutable:
      run.trajectory = solve_permutable(cfg.order(), cfg.A, cfg.B(0.0), cfg.f,
                                        cfg.x, cfg.y, grid, ctl);
      return run;
    case SolverKind::classical: {
      const Matrix B0 = cfg.B(0.0);
      run.trajectory =
          commutator(cfg.A, B0).is_zero
              ? solve_classical_permutable(cfg.A, B0, cfg.f, cfg.x, cfg.y,
                                           grid, ctl)
              : solve_classical_nonpermutable(cfg.A, B0, cfg.f, cfg.x, cfg.y,
                                              grid, ctl);
      return run;
    }
    case SolverKind::oracle: {
      IvpSpec spec{cfg.order(), cfg.A, cfg.B, cfg.f, cfg.x, cfg.y, grid};
      run.trajectory = adams_solve(spec);
      return run;
    }
  }
  throw ConfigError("unhandled solver kind");
}

double max_deviation(const VectorTrajectory& a, const VectorTrajectory& b) {
  double dev = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dev = std::max(dev, (a.values[i] - b.values[i]).lpNorm<Eigen::Infinity>());
  }
  return dev;
}

bool all_finite(const VectorTrajectory& u) {
  return std::all_of(u.values.begin(), u.values.end(),
                     [](const Vector& v) { return v.allFinite(); });
}

void write_solution_csv(const std::filesystem::path& path,
                        const ExperimentConfig& cfg,
                        const std::vector<SolverRun>& runs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t";
  const int dim = static_cast<int>(cfg.x.size());
  for (const auto& run : runs) {
    for (int c = 1; c <= dim; ++c) {
      out << ',' << solver_name(run.kind) << "_u" << c;
    }
  }
  out << '\n';
  const TimeGrid grid = cfg.grid();
  for (int i = 0; i <= grid.steps(); ++i) {
    out << format_full(grid.node(i));
    for (const auto& run : runs) {
      for (int c = 0; c < dim; ++c) {
        out << ',' << format_full(run.trajectory.values[i](c));
      }
    }
    out << '\n';
  }
}

void write_residual_csv(const std::filesystem::path& path,
                        const ExperimentConfig& cfg,
                        const std::vector<SolverRun>& runs,
                        const std::vector<std::vector<double>>& residuals) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t";
  for (const auto& run : runs) out << ',' << solver_name(run.kind);
  out << '\n';
  const TimeGrid grid = cfg.grid();
  for (int i = 0; i <= grid.steps(); ++i) {
    out << format_full(grid.node(i));
    for (std::size_t r = 0; r < runs.size(); ++r) {
      out << ',' << format_full(residuals[r][i]);
    }
    out << '\n';
  }
}

void write_bounds_csv(const std::filesystem::path& path,
                      const BoundsReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "s,norm_C,bound_C,margin_C,norm_S,bound_S,margin_S\n";
  for (const auto& row : report.rows) {
    out << format_full(row.t) << ',' << format_full(row.norm_cos) << ','
        << format_full(row.bound_cos) << ',' << format_full(row.margin_cos)
        << ',' << format_full(row.norm_sin) << ',' << format_full(row.bound_sin)
        << ',' << format_full(row.margin_sin) << '\n';
  }
}

void write_report(const std::filesystem::path& path,
                  const ExperimentConfig& cfg, const ExperimentOutcome& out,
                  const SeriesControl& ctl) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "fracevo experiment report\n";
  os << "alpha=" << format_full(cfg.alpha) << " T=" << format_full(cfg.T)
     << " N=" << cfg.N << " dim=" << cfg.x.size() << '\n';
  os << "envelope M=" << format_full(ctl.envelope.M)
     << " omega=" << format_full(ctl.envelope.omega)
     << " K_t=" << format_full(ctl.K_t) << " N_t=" << format_full(ctl.N_t)
     << '\n';
  for (const auto& run : out.runs) {
    os << "solver " << solver_name(run.kind)
       << ": max_interior_residual=" << format_full(run.max_residual);
    if (run.kind == SolverKind::series) {
      os << " cosine_terms=" << run.cosine_terms
         << " certified_cosine_remainder=" << format_full(run.cosine_remainder)
         << " sine_terms=" << run.sine_terms
         << " certified_sine_remainder=" << format_full(run.sine_remainder);
      if (run.forcing_terms > 0) {
        os << " forcing_terms=" << run.forcing_terms
           << " certified_forcing_remainder="
           << format_full(run.forcing_remainder);
      }
    }
    os << '\n';
  }
  for (const auto& dev : out.deviations) {
    os << "cross " << solver_name(dev.first) << " vs "
       << solver_name(dev.second)
       << ": max_deviation=" << format_full(dev.max_deviation)
       << " (cross_tol=" << format_full(cfg.cross_tol) << ")\n";
  }
  if (!out.bounds.rows.empty()) {
    os << "growth bounds: min_margin=" << format_full(out.bounds.min_margin)
       << (out.bounds.ok ? " ok" : " VIOLATED") << '\n';
  }
  os << "initial_slope_gap=" << format_full(out.initial_derivative_gap) << '\n';
  for (const auto& w : out.warnings) os << "warning: " << w << '\n';
  for (const auto& f : out.failures) os << "FAILED: " << f << '\n';
  os << (out.failures.empty() ? "status: pass\n" : "status: fail\n");
}

}  // namespace

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int thread_budget(int requested_jobs, int max_threads_option) {
  int cap = max_threads_option;
  if (cap <= 0) {
    if (const char* env = std::getenv("FRACEVO_THREADS")) {
      cap = std::atoi(env);
    }
  }
  if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  return std::max(1, std::min(requested_jobs, cap));
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const RunOptions& opts) {
  ExperimentOutcome out;
  const TimeGrid grid = cfg.grid();
  SeriesControl ctl = prepare_control(cfg.order(), cfg.A, cfg.B, cfg.f, grid,
                                      cfg.series_tol, 64, cfg.envelope);

  // Independent solver runs, optionally in parallel (capped by
  // FRACEVO_THREADS); results land in request order, outputs stay serialized.
  const int jobs = static_cast<int>(cfg.solvers.size());
  const int threads = thread_budget(jobs, opts.max_threads);
  out.runs.resize(jobs);
  if (threads > 1 && jobs > 1) {
    std::vector<std::future<SolverRun>> futures;
    futures.reserve(jobs);
    for (int j = 0; j < jobs; ++j) {
      futures.push_back(std::async(std::launch::async, run_solver,
                                   cfg.solvers[j], std::cref(cfg),
                                   std::cref(ctl)));
    }
    for (int j = 0; j < jobs; ++j) out.runs[j] = futures[j].get();
  } else {
    for (int j = 0; j < jobs; ++j) {
      out.runs[j] = run_solver(cfg.solvers[j], cfg, ctl);
    }
  }

  for (const auto& run : out.runs) {
    if (!all_finite(run.trajectory)) {
      out.failures.push_back("solver " + solver_name(run.kind) +
                             " produced non-finite values");
    }
  }

  std::vector<std::vector<double>> residuals;
  if (opts.run_residuals) {
    IvpSpec spec{cfg.order(), cfg.A, cfg.B, cfg.f, cfg.x, cfg.y, grid};
    for (auto& run : out.runs) {
      residuals.push_back(residual(run.trajectory, spec));
      run.max_residual =
          *std::max_element(residuals.back().begin(), residuals.back().end());
      if (run.max_residual > cfg.quad_assert_tol) {
        std::ostringstream msg;
        msg << "residual check: solver " << solver_name(run.kind)
            << " max interior residual " << format_full(run.max_residual)
            << " exceeds quad_assert_tol " << format_full(cfg.quad_assert_tol);
        out.failures.push_back(msg.str());
      }
    }
  }

  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < out.runs.size(); ++j) {
      CrossDeviation dev{out.runs[i].kind, out.runs[j].kind,
                         max_deviation(out.runs[i].trajectory,
                                       out.runs[j].trajectory)};
      if (dev.max_deviation > cfg.cross_tol) {
        std::ostringstream msg;
        msg << "cross check: " << solver_name(dev.first) << " vs "
            << solver_name(dev.second) << " deviate by "
            << format_full(dev.max_deviation) << " > cross_tol "
            << format_full(cfg.cross_tol);
        out.failures.push_back(msg.str());
      }
      out.deviations.push_back(std::move(dev));
    }
  }

  if (opts.run_bounds) {
    out.bounds = verify_growth_bounds(cfg.order(), cfg.A, cfg.B, grid, ctl,
                                      1e-9, /*throw_on_violation=*/false);
    if (!out.bounds.ok) {
      out.failures.push_back(
          "growth bounds violated: min margin " +
          format_full(out.bounds.min_margin));
    }
  }

  out.initial_derivative_gap = initial_slope_gap(cfg);
  if (out.initial_derivative_gap > 1e-3 * (1.0 + cfg.y.norm())) {
    std::ostringstream msg;
    msg << "initial slope check: |u'(0) - y| = "
        << format_full(out.initial_derivative_gap)
        << " (finite differences at the origin converge slowly for "
           "alpha near 1)";
    out.warnings.push_back(msg.str());
  }

  if (opts.strict) {
    for (const auto& w : out.warnings) {
      out.failures.push_back("strict: " + w);
    }
  }

  if (opts.write_outputs) {
    std::filesystem::create_directories(opts.out_dir);
    write_solution_csv(opts.out_dir / cfg.solution_csv, cfg, out.runs);
    if (opts.run_residuals) {
      write_residual_csv(opts.out_dir / cfg.residual_csv, cfg, out.runs,
                         residuals);
    }
    if (opts.run_bounds) {
      write_bounds_csv(opts.out_dir / cfg.bounds_csv, out.bounds);
    }
    write_report(opts.out_dir / cfg.report, cfg, out, ctl);
  }
  return out;
}

}  // namespace fracevo
