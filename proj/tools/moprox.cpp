// moprox: single solves, benchmark sweeps, frontier collection and metrics.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence,
// 3 internal failure.

#include "moprox/experiment.hpp"
#include "moprox/manifest.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace moprox;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNotConverged = 2;
constexpr int kFailure = 3;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::vector<std::string> manifests;
  std::uint64_t seed = 1;
  bool robust = false;
  std::string out = ".";
  SolverConfig solver;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_flag("--robust", c.robust, "Add random polyhedral uncertainty to every objective");
  cmd->add_option("--manifest", c.manifests, "YAML problem definition (repeatable)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--alpha", c.solver.alpha, "Proximal parameter alpha")->capture_default_str();
  cmd->add_option("--gamma", c.solver.gamma, "Line-search parameter gamma in (0, 2/alpha)")->capture_default_str();
  cmd->add_option("--tau1", c.solver.tau1, "Lower step-reduction factor")->capture_default_str();
  cmd->add_option("--tau2", c.solver.tau2, "Upper step-reduction factor")->capture_default_str();
  cmd->add_option("--sigma", c.solver.sigma, "Armijo parameter")->capture_default_str();
  cmd->add_option("--eps", c.solver.eps, "Stop when |theta| <= eps")->capture_default_str();
  cmd->add_option("--max-iters", c.solver.max_iters, "Iteration cap")->capture_default_str();
  cmd->add_flag("--armijo-literal-sign", c.solver.armijo_literal_sign,
                "Armijo test with F(x) - sigma t psi instead of F(x) + sigma t psi");
}

ProblemRegistry registry(const Common& c) {
  ProblemRegistry reg;
  for (const auto& path : c.manifests) reg.add(load_problem_manifest(path));
  return reg;
}

Algorithm algorithm(const std::string& s) {
  const auto a = parse_algorithm(s);
  if (!a) throw UsageError("unknown algorithm '" + s + "' (expected mpg, mpg_armijo or mpg_implicit)");
  return *a;
}

void require_problem(const ProblemRegistry& reg, const std::string& name) {
  if (!reg.known(name)) throw CatalogError("unknown problem '" + name + "'");
}

std::ofstream open_out(const std::string& dir, const std::string& file) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / file;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

Vector parse_x0(const std::string& text, Index n) {
  std::vector<double> v;
  for (const auto& cell : split_csv_line(text)) {
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw UsageError("--x0: cannot parse '" + cell + "'");
    }
  }
  if (static_cast<Index>(v.size()) != n) throw UsageError("--x0: expected " + std::to_string(n) + " values");
  return Eigen::Map<Vector>(v.data(), n);
}

int status_code(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return kOk;
    case RunStatus::max_iterations: return kNotConverged;
    default: return kFailure;
  }
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  Common common;
  std::string problem;
  std::string algo = "mpg";
  std::string x0 = "random";
};

int cmd_solve(const SolveArgs& a) {
  const ProblemRegistry reg = registry(a.common);
  require_problem(reg, a.problem);
  SolverConfig cfg = a.common.solver;
  cfg.algorithm = algorithm(a.algo);
  cfg.validate();
  const PreparedProblem prob = prepare_problem(reg, a.problem, a.common.seed, a.common.robust);

  // A random start is start 0 of a bench run with the same master seed.
  Vector x0;
  std::string run_id = a.problem + ":" + a.algo + ":";
  if (a.x0 == "random") {
    x0 = sample_start(prob.inst, start_seed(a.common.seed, a.problem, 0));
    run_id += "0";
  } else {
    x0 = parse_x0(a.x0, prob.inst.n);
    if (!prob.inst.box.contains(x0)) throw UsageError("--x0 lies outside the box");
    run_id += "x0";
  }
  cfg.seed = run_seed(a.common.seed, a.problem, 0, cfg.algorithm);
  const RunResult r = run_solver(prob.inst, x0, cfg);

  auto it = open_out(a.common.out, "iterations.csv");
  write_iterations_header(it, prob.inst.m);
  write_iterations(it, run_id, r);
  open_out(a.common.out, "result.json") << result_json(prob, cfg, x0, a.common.seed, r).dump(2) << '\n';
  spdlog::info("{} {} {}: {} after {} iterations, theta = {:.3e}", prob.inst.name, a.algo, run_id,
               to_string(r.status), r.iterations, r.theta_final);
  if (!r.message.empty()) spdlog::warn("{}", r.message);
  return status_code(r.status);
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  Common common;
  std::vector<std::string> problems;
  std::vector<std::string> algos{"mpg", "mpg_armijo", "mpg_implicit"};
  int starts = 100;
  bool trace = false;
};

int cmd_bench(const BenchArgs& a) {
  const ProblemRegistry reg = registry(a.common);
  ExperimentConfig cfg;
  cfg.problems = a.problems;
  if (cfg.problems.empty())
    for (const auto& e : problem_catalog()) cfg.problems.push_back(e.name);
  cfg.algorithms.clear();
  for (const auto& s : a.algos) cfg.algorithms.push_back(algorithm(s));
  cfg.starts_per_problem = a.starts;
  cfg.master_seed = a.common.seed;
  cfg.robust = a.common.robust;
  cfg.solver = a.common.solver;
  cfg.output_dir = a.common.out;
  cfg.keep_traces = a.trace;
  cfg.validate(reg);

  spdlog::info("bench: {} problems x {} starts x {} algorithms on {} workers", cfg.problems.size(),
               cfg.starts_per_problem, cfg.algorithms.size(), worker_count());
  const auto runs = run_bench(cfg, reg);
  auto rs = open_out(cfg.output_dir, "results.csv");
  write_results_csv(rs, runs);
  open_out(cfg.output_dir, "summary.json") << summary_json(cfg, runs).dump(2) << '\n';
  if (a.trace) {
    // One file per problem, since m differs between problems.
    for (const auto& p : cfg.problems) {
      auto os = open_out((fs::path(cfg.output_dir) / "iterations").string(), p + ".csv");
      bool header = false;
      for (const auto& r : runs) {
        if (r.problem != p) continue;
        if (!header) write_iterations_header(os, r.m);
        header = true;
        write_iterations(os, r.problem + ":" + std::string(to_string(r.algorithm)) + ":" + std::to_string(r.start),
                         r.result);
      }
    }
  }
  int failures = 0;
  for (const auto& r : runs) failures += r.result.status == RunStatus::linesearch_failure ||
                                         r.result.status == RunStatus::subproblem_failure;
  if (failures) spdlog::warn("{} runs ended with a solver failure", failures);
  return kOk;
}

// ---------------------------------------------------------------------------

struct FrontierArgs {
  Common common;
  std::string problem;
  std::string algo = "mpg";
  int starts = 100;
  double budget_seconds = 0.0;
};

int cmd_frontier(const FrontierArgs& a) {
  const ProblemRegistry reg = registry(a.common);
  require_problem(reg, a.problem);
  const Algorithm algo = algorithm(a.algo);
  SolverConfig cfg = a.common.solver;
  cfg.algorithm = algo;
  cfg.validate();
  const FrontierResult fr =
      run_frontier(reg, a.problem, algo, a.starts, a.common.seed, a.common.robust, cfg, a.budget_seconds);
  const ProblemInstance inst = reg.get(a.problem);
  auto os = open_out(a.common.out, "front.csv");
  write_front_csv(os, fr, inst.n, inst.m);
  const nlohmann::json meta = {{"problem", a.problem},     {"algo", a.algo},
                               {"seed", a.common.seed},    {"robust", a.common.robust},
                               {"starts", a.starts},       {"runs", fr.runs},
                               {"converged", fr.converged}, {"front_points", fr.front.size()},
                               {"budget_seconds", a.budget_seconds}};
  open_out(a.common.out, "front.json") << meta.dump(2) << '\n';
  spdlog::info("frontier {} {}: {} of {} runs converged, {} nondominated points", a.problem, a.algo, fr.converged,
               fr.runs, fr.front.size());
  return fr.converged == 0 ? kNotConverged : kOk;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::vector<std::string> results;
  std::vector<std::string> fronts;
  std::vector<std::string> measures{"time", "h_evals"};
  std::string out = ".";
};

int cmd_metrics(const MetricsArgs& a) {
  if (a.results.empty() && a.fronts.empty()) throw UsageError("metrics: give --results and/or --fronts");
  nlohmann::json report = nlohmann::json::object();

  if (!a.results.empty()) {
    std::vector<ResultRow> rows;
    for (const auto& path : a.results) {
      std::ifstream is(path);
      if (!is) throw UsageError("cannot read " + path);
      const auto part = read_results_csv(is, path);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) throw UsageError("metrics: results files contain no runs");
    nlohmann::json profiles = nlohmann::json::object();
    for (const auto& measure : a.measures) {
      const PerformanceProfile prof = performance_profile(profile_table(rows, measure));
      auto os = open_out(a.out, "profile_" + measure + ".csv");
      write_profile_csv(os, prof);
      nlohmann::json per = nlohmann::json::object();
      for (std::size_t s = 0; s < prof.solvers.size(); ++s)
        per[prof.solvers[s]] = {{"rho_at_1", prof.at(s, 1.0)}, {"rho_limit", prof.rho[s].back()}};
      profiles[measure] = per;
    }
    report["profiles"] = profiles;
  }

  if (!a.fronts.empty()) {
    std::map<std::string, std::vector<FrontSet>> by_problem;
    for (const auto& dir : a.fronts) {
      const fs::path meta_path = fs::path(dir) / "front.json";
      std::ifstream meta_is(meta_path);
      if (!meta_is) throw UsageError("cannot read " + meta_path.string());
      const auto meta = nlohmann::json::parse(meta_is);
      std::ifstream is(fs::path(dir) / "front.csv");
      if (!is) throw UsageError("cannot read front.csv in " + dir);
      FrontSet f = read_front_csv(is, (fs::path(dir) / "front.csv").string());
      f.solver = meta.at("algo").get<std::string>();
      by_problem[meta.at("problem").get<std::string>()].push_back(std::move(f));
    }
    nlohmann::json fronts = nlohmann::json::object();
    for (const auto& [problem, sets] : by_problem) fronts[problem] = front_metrics_json(sets);
    report["fronts"] = fronts;
  }
  open_out(a.out, "metrics.json") << report.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("moprox"));
  spdlog::set_pattern("%v");
  CLI::App app{"Proximal gradient methods for convex multiobjective problems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values ([solve], [bench], ... sections)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only report warnings and errors");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run one algorithm from one start");
  add_common(s, solve.common);
  s->add_option("--problem", solve.problem, "Catalog or manifest problem")->required();
  s->add_option("--algo", solve.algo, "mpg, mpg_armijo or mpg_implicit")->capture_default_str();
  s->add_option("--x0", solve.x0, "'random' or comma-separated start point")->capture_default_str();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run every (problem, start, algorithm) triple");
  add_common(b, bench.common);
  b->add_option("--problems", bench.problems, "Problems (default: whole catalog)");
  b->add_option("--algos", bench.algos, "Algorithms")->capture_default_str();
  b->add_option("--starts", bench.starts, "Random starts per problem")->capture_default_str();
  b->add_flag("--trace", bench.trace, "Also write iterations/<problem>.csv");

  FrontierArgs frontier;
  auto* f = app.add_subcommand("frontier", "Collect the nondominated final points of many starts");
  add_common(f, frontier.common);
  f->add_option("--problem", frontier.problem, "Catalog or manifest problem")->required();
  f->add_option("--algo", frontier.algo, "Algorithm")->capture_default_str();
  f->add_option("--starts", frontier.starts, "Random starts")->capture_default_str();
  f->add_option("--budget-seconds", frontier.budget_seconds, "Stop launching starts after this many seconds");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Performance profiles and front metrics");
  m->add_option("--results", metrics.results, "results.csv files from bench");
  m->add_option("--fronts", metrics.fronts, "Output directories of frontier runs");
  m->add_option("--measures", metrics.measures, "Profile measures: time, h_evals, g_evals")->capture_default_str();
  m->add_option("--out", metrics.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (s->parsed()) return cmd_solve(solve);
    if (b->parsed()) return cmd_bench(bench);
    if (f->parsed()) return cmd_frontier(frontier);
    if (m->parsed()) return cmd_metrics(metrics);
  } catch (const std::invalid_argument& e) {  // ContractViolation, CatalogError, UsageError
    spdlog::error("error: {}", e.what());
    return kUsage;
  } catch (const ManifestError& e) {
    spdlog::error("error: {}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("internal failure: {}", e.what());
    return kFailure;
  }
  return kUsage;
}
