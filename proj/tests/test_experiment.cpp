#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fracevo/experiment.hpp"

using namespace fracevo;

namespace {

const std::filesystem::path kData = FRACEVO_TEST_DATA_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fracevo_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

#ifdef FRACEVO_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(FRACEVO_CLI_PATH) + " " + args +
                          " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
#endif

}  // namespace

TEST_CASE("config parsing happy path") {
  const auto cfg = load_config(kData / "noncommuting.cfg");
  CHECK(cfg.alpha == 1.5);
  CHECK(cfg.N == 256);
  CHECK(cfg.A(1, 0) == -2.0);
  CHECK(cfg.B(0.0)(1, 0) == 1.0);
  CHECK(cfg.B.kind() == TimeDependentOperator::Kind::constant);
  CHECK(cfg.f(0.5)(0) == 0.3);
  CHECK(cfg.solvers.size() == 3);
  CHECK(cfg.cross_tol == 5e-4);
}

TEST_CASE("config errors name the offending field") {
  auto parse_text = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, ".");
  };

  // missing x
  CHECK_THROWS_WITH_AS(load_config(kData / "bad_missing_x.cfg"),
                       doctest::Contains("problem.x"), ConfigError);
  // permutable solver on a non-commuting pair
  CHECK_THROWS_WITH_AS(load_config(kData / "bad_permutable.cfg"),
                       doctest::Contains("NotPermutable"), ConfigError);
  // alpha out of range
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 0.7\nT=1\nN=16\nA=[[-1]]\nx=[1]\ny=[0]\n"
                 "[solvers]\nenabled = series\n"),
      doctest::Contains("alpha"), ConfigError);
  // unknown key
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 1.5\nT=1\nN=16\nA=[[-1]]\nx=[1]\ny=[0]\n"
                 "bogus = 3\n[solvers]\nenabled = series\n"),
      doctest::Contains("bogus"), ConfigError);
  // N too small
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 1.5\nT=1\nN=4\nA=[[-1]]\nx=[1]\ny=[0]\n"
                 "[solvers]\nenabled = series\n"),
      doctest::Contains("problem.N"), ConfigError);
  // classical at fractional order
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 1.5\nT=1\nN=16\nA=[[-1]]\nx=[1]\ny=[0]\n"
                 "[solvers]\nenabled = classical\n"),
      doctest::Contains("classical"), ConfigError);
  // non-finite coefficient entries
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 1.5\nT=1\nN=16\nA=[[-1]]\nB=[[nan]]\n"
                 "x=[1]\ny=[0]\n[solvers]\nenabled = series\n"),
      doctest::Contains("problem.B"), ConfigError);
  // polynomial coefficients of mixed dimension
  CHECK_THROWS_WITH_AS(
      parse_text("[problem]\nalpha = 1.5\nT=1\nN=16\nA=[[-1]]\nB=[[0.5]]\n"
                 "B1=[[1,0],[0,1]]\nx=[1]\ny=[0]\n"
                 "[solvers]\nenabled = series\n"),
      doctest::Contains("problem.B"), ConfigError);
}

TEST_CASE("polynomial B coefficients parse into a time-dependent map") {
  std::istringstream in(
      "[problem]\nalpha = 1.5\nT = 1\nN = 16\nA = [[-1]]\nB = [[0.5]]\n"
      "B1 = [[-2]]\nx = [1]\ny = [0]\n[solvers]\nenabled = series\n");
  const auto cfg = parse_config(in, ".");
  CHECK(cfg.B.kind() == TimeDependentOperator::Kind::polynomial);
  CHECK(cfg.B(0.0)(0, 0) == 0.5);
  CHECK(cfg.B(1.0)(0, 0) == doctest::Approx(-1.5));
  CHECK(cfg.B.derivative(0.3)(0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("run_experiment oscillator: all assertions pass, artifacts exist") {
  const auto cfg = load_config(kData / "oscillator.cfg");
  RunOptions opts;
  opts.out_dir = fresh_dir("osc");
  const auto outcome = run_experiment(cfg, opts);

  CHECK(outcome.failures.empty());
  CHECK(outcome.runs.size() == 3);
  for (const auto& dev : outcome.deviations) CHECK(dev.max_deviation < 1e-3);
  CHECK(outcome.bounds.ok);

  // u agrees with cos(t) x + sin(t) y.
  const auto& u = outcome.runs[0].trajectory;
  for (int i = 0; i <= cfg.N; ++i) {
    const double t = cfg.grid().node(i);
    CHECK(u.values[i](0) == doctest::Approx(std::cos(t)).epsilon(1e-9));
    CHECK(u.values[i](1) == doctest::Approx(std::sin(t)).epsilon(1e-9));
  }

  for (const char* name :
       {"solution.csv", "residual.csv", "bounds.csv", "report.txt"}) {
    CHECK(std::filesystem::exists(opts.out_dir / name));
  }
  const std::string header = slurp(opts.out_dir / "bounds.csv").substr(0, 52);
  CHECK(header.find("s,norm_C,bound_C,margin_C,norm_S,bound_S,margin_S") == 0);
}

TEST_CASE("run_experiment outputs are byte-identical across runs") {
  const auto cfg = load_config(kData / "noncommuting.cfg");
  RunOptions opts;
  opts.out_dir = fresh_dir("det1");
  run_experiment(cfg, opts);
  RunOptions opts2;
  opts2.out_dir = fresh_dir("det2");
  run_experiment(cfg, opts2);
  for (const char* name :
       {"solution.csv", "residual.csv", "bounds.csv", "report.txt"}) {
    CHECK(slurp(opts.out_dir / name) == slurp(opts2.out_dir / name));
  }
}

TEST_CASE("run_experiment cross-tolerance failure is reported") {
  auto cfg = load_config(kData / "noncommuting.cfg");
  cfg.cross_tol = 1e-15;  // unreachable
  RunOptions opts;
  opts.out_dir = fresh_dir("fail");
  const auto outcome = run_experiment(cfg, opts);
  CHECK(!outcome.failures.empty());
  CHECK(outcome.failures.front().find("cross check") != std::string::npos);
}

TEST_CASE("tabulated coefficient and forcing samples round through a solve") {
  const auto dir = fresh_dir("samples");
  {
    std::ofstream b(dir / "b.csv");
    std::ofstream f(dir / "f.csv");
    b << "t,b11\n";
    f << "t,f1\n";
    const int N = 64;
    for (int i = 0; i <= N; ++i) {
      const double t = 1.0 * i / N;
      b << format_full(t) << ',' << format_full(0.3 + 0.1 * t) << '\n';
      f << format_full(t) << ',' << format_full(std::sin(t)) << '\n';
    }
  }
  std::ostringstream cfg_text;
  cfg_text << "[problem]\nalpha = 1.6\nT = 1\nN = 64\nA = [[-1]]\n"
              "B_samples = b.csv\nf_samples = f.csv\nx = [1]\ny = [0]\n"
              "[solvers]\nenabled = series, oracle\n"
              "[tolerances]\ncross_tol = 1e-3\nquad_assert_tol = 0.05\n";
  std::istringstream in(cfg_text.str());
  const auto cfg = parse_config(in, dir);
  CHECK(cfg.B.kind() == TimeDependentOperator::Kind::tabulated);
  CHECK(cfg.B(0.5)(0, 0) == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(cfg.B.derivative(0.5)(0, 0) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(cfg.f(0.25)(0) == doctest::Approx(std::sin(0.25)).epsilon(1e-4));

  RunOptions opts;
  opts.out_dir = dir;
  const auto outcome = run_experiment(cfg, opts);
  CHECK(outcome.failures.empty());
}

TEST_CASE("format_full round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -7.25e-12}) {
    CHECK(std::stod(format_full(v)) == v);
  }
}

TEST_CASE("thread budget respects the environment cap") {
  setenv("FRACEVO_THREADS", "2", 1);
  CHECK(thread_budget(8, 0) == 2);
  CHECK(thread_budget(1, 0) == 1);
  unsetenv("FRACEVO_THREADS");
  CHECK(thread_budget(3, 5) == 3);
  CHECK(thread_budget(8, 2) == 2);
}

#ifdef FRACEVO_CLI_PATH
TEST_CASE("cli exit codes") {
  const auto out = fresh_dir("cli");
  const std::string osc = (kData / "oscillator.cfg").string();

  CHECK(run_cli("solve --config " + osc + " --out-dir " + out.string()) == 0);
  CHECK(run_cli("compare --config " + osc + " --out-dir " + out.string()) == 0);
  CHECK(run_cli("compare --config " + osc + " --out-dir " + out.string() +
                " --strict --seed 7") == 0);
  CHECK(run_cli("bounds-check --config " + osc + " --out-dir " + out.string()) ==
        0);
  CHECK(run_cli("ml-eval 1 1 1") == 0);

  // config errors exit 1
  CHECK(run_cli("solve --config /nonexistent.cfg") == 1);
  CHECK(run_cli("solve --config " + (kData / "bad_permutable.cfg").string()) ==
        1);
  CHECK(run_cli("solve --config " + (kData / "bad_missing_x.cfg").string()) ==
        1);

  // assertion failures exit 2
  CHECK(run_cli("ml-eval 1.5 1 -200") == 2);
}
#endif
