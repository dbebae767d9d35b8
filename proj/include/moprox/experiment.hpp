#pragma once

#include "moprox/metrics.hpp"
#include "moprox/problems.hpp"
#include "moprox/solvers.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace moprox {

// ---------------------------------------------------------------------------
// Seeding
//
// Every random draw of an experiment comes from one master seed:
//   problem key   FNV-1a of the problem name
//   robust draw   derive_seed({master, key})            one per problem
//   start point   derive_seed({master, key, start})     shared by all algorithms
//   run seed      derive_seed({master, key, start, algorithm index})

inline std::uint64_t problem_key(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t robust_seed(std::uint64_t master, std::string_view problem) {
  return derive_seed({master, problem_key(problem)});
}

inline std::uint64_t start_seed(std::uint64_t master, std::string_view problem, std::uint64_t start) {
  return derive_seed({master, problem_key(problem), start});
}

inline std::uint64_t run_seed(std::uint64_t master, std::string_view problem, std::uint64_t start, Algorithm a) {
  return derive_seed({master, problem_key(problem), start, static_cast<std::uint64_t>(a)});
}

// ---------------------------------------------------------------------------
// Problems

/// Catalog problems plus any loaded from manifests. Manifest names shadow the
/// catalog.
class ProblemRegistry {
 public:
  void add(ProblemInstance inst) {
    inst.validate();
    std::string name = inst.name;
    extra_.insert_or_assign(std::move(name), std::move(inst));
  }

  [[nodiscard]] ProblemInstance get(const std::string& name) const {
    if (const auto it = extra_.find(name); it != extra_.end()) return it->second;
    return make_problem(name);
  }

  [[nodiscard]] bool known(const std::string& name) const {
    if (extra_.count(name)) return true;
    const auto& cat = problem_catalog();
    return std::any_of(cat.begin(), cat.end(), [&](const auto& e) { return e.name == name; });
  }

 private:
  std::map<std::string, ProblemInstance> extra_;
};

struct PreparedProblem {
  std::string name;  // name as requested, without the robust suffix
  ProblemInstance inst;
  std::optional<RobustSpec> robust;
};

/// Robust augmentation is applied only to problems without support terms of
/// their own.
inline PreparedProblem prepare_problem(const ProblemRegistry& reg, const std::string& name, std::uint64_t master,
                                       bool robust) {
  PreparedProblem p{name, reg.get(name), std::nullopt};
  if (robust && !p.inst.has_support_terms()) {
    p.robust = make_robust_spec(p.inst, robust_seed(master, name));
    p.inst = apply_robust_spec(std::move(p.inst), *p.robust);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Parallel execution

/// Worker count: MOPROX_THREADS if set and positive, else the hardware count.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MOPROX_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Calls job(i) for i in [0, count) on up to `threads` workers. The first
/// exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  std::vector<std::string> problems;
  std::vector<Algorithm> algorithms{Algorithm::mpg, Algorithm::mpg_armijo, Algorithm::mpg_implicit};
  int starts_per_problem = 100;
  std::uint64_t master_seed = 0;
  bool robust = false;
  SolverConfig solver;
  std::string output_dir = ".";
  unsigned threads = 0;  // 0: worker_count()
  // Keep full traces in the returned runs.
  bool keep_traces = false;

  void validate(const ProblemRegistry& reg) const {
    require(!problems.empty(), "ExperimentConfig: no problems given");
    require(!algorithms.empty(), "ExperimentConfig: no algorithms given");
    require(starts_per_problem >= 1, "ExperimentConfig: starts must be at least 1");
    for (const auto& p : problems)
      if (!reg.known(p)) throw CatalogError("unknown problem '" + p + "'");
    solver.validate();
  }
};

struct BenchRun {
  std::string problem;
  Algorithm algorithm = Algorithm::mpg;
  int start = 0;
  std::uint64_t seed = 0;      // start-point seed, identifies the instance
  std::uint64_t run_seed = 0;  // includes the algorithm index
  Index m = 0;
  RunResult result;
};

/// Every (problem, start, algorithm) triple, returned in that order.
inline std::vector<BenchRun> run_bench(const ExperimentConfig& cfg, const ProblemRegistry& reg) {
  cfg.validate(reg);
  std::vector<PreparedProblem> probs;
  for (const auto& name : cfg.problems) probs.push_back(prepare_problem(reg, name, cfg.master_seed, cfg.robust));

  const std::size_t A = cfg.algorithms.size();
  const auto S = static_cast<std::size_t>(cfg.starts_per_problem);
  std::vector<BenchRun> runs(probs.size() * S * A);
  for (std::size_t p = 0; p < probs.size(); ++p)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        BenchRun& r = runs[(p * S + s) * A + a];
        r.problem = probs[p].name;
        r.algorithm = cfg.algorithms[a];
        r.start = static_cast<int>(s);
        r.seed = start_seed(cfg.master_seed, r.problem, s);
        r.run_seed = run_seed(cfg.master_seed, r.problem, s, r.algorithm);
        r.m = probs[p].inst.m;
      }
  parallel_for(runs.size(), cfg.threads ? cfg.threads : worker_count(), [&](std::size_t i) {
    BenchRun& r = runs[i];
    const ProblemInstance& inst = probs[i / (S * A)].inst;
    SolverConfig sc = cfg.solver;
    sc.algorithm = r.algorithm;
    sc.seed = r.run_seed;
    r.result = run_solver(inst, sample_start(inst, r.seed), sc);
    if (!cfg.keep_traces) {
      r.result.trace.clear();
      r.result.trace.shrink_to_fit();
    }
  });
  return runs;
}

struct FrontierResult {
  std::string problem;
  Algorithm algorithm = Algorithm::mpg;
  int runs = 0;
  int converged = 0;
  std::vector<Vector> x;
  FrontSet front;  // filtered, F-vectors with run ids
};

/// Pools the final points of converged runs from `starts` random starts and
/// filters them. With budget_seconds > 0, no new start is launched after the
/// budget is spent.
inline FrontierResult run_frontier(const ProblemRegistry& reg, const std::string& problem, Algorithm algo, int starts,
                                   std::uint64_t master, bool robust, SolverConfig solver, double budget_seconds = 0.0,
                                   unsigned threads = 0) {
  require(starts >= 1, "frontier: starts must be at least 1");
  if (!reg.known(problem)) throw CatalogError("unknown problem '" + problem + "'");
  solver.algorithm = algo;
  solver.validate();
  const PreparedProblem prep = prepare_problem(reg, problem, master, robust);
  const auto clock_start = std::chrono::steady_clock::now();
  std::vector<std::optional<RunResult>> results(static_cast<std::size_t>(starts));
  parallel_for(results.size(), threads ? threads : worker_count(), [&](std::size_t s) {
    if (budget_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count() > budget_seconds)
      return;
    SolverConfig sc = solver;
    sc.seed = run_seed(master, problem, s, algo);
    RunResult r = run_solver(prep.inst, sample_start(prep.inst, start_seed(master, problem, s)), sc);
    r.trace.clear();
    results[s] = std::move(r);
  });

  FrontierResult out;
  out.problem = problem;
  out.algorithm = algo;
  FrontSet pooled;
  pooled.solver = std::string(to_string(algo));
  std::vector<Vector> xs;
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s]) continue;
    ++out.runs;
    if (!results[s]->converged()) continue;
    ++out.converged;
    pooled.points.push_back(results[s]->F_final);
    pooled.run_ids.push_back(std::to_string(s));
    xs.push_back(results[s]->x_final);
  }
  out.front = nondominated_filter(pooled);
  for (const auto& id : out.front.run_ids) {
    const auto it = std::find(pooled.run_ids.begin(), pooled.run_ids.end(), id);
    out.x.push_back(xs[static_cast<std::size_t>(it - pooled.run_ids.begin())]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline void write_iterations_header(std::ostream& os, Index m) {
  os << "run_id,k,t,theta,norm_d,omega,alpha_used";
  for (Index j = 1; j <= m; ++j) os << ",F_" << j;
  os << '\n';
}

inline void write_iterations(std::ostream& os, const std::string& run_id, const RunResult& r) {
  for (const auto& rec : r.trace) {
    os << run_id << ',' << rec.k << ',' << num(rec.t) << ',' << num(rec.theta) << ',' << num(rec.norm_d) << ','
       << rec.omega << ',' << num(rec.alpha_used);
    for (Index j = 0; j < rec.F.size(); ++j) os << ',' << num(rec.F(j));
    os << '\n';
  }
}

inline constexpr std::string_view kResultsHeader =
    "problem,algo,seed,status,iterations,time_ms,g_evals,grad_evals,h_evals,subproblem_solves,lp_solves,theta_final";

inline void write_results_csv(std::ostream& os, const std::vector<BenchRun>& runs) {
  os << kResultsHeader << '\n';
  for (const auto& r : runs) {
    const auto& c = r.result.counters;
    os << r.problem << ',' << to_string(r.algorithm) << ',' << r.seed << ',' << to_string(r.result.status) << ','
       << r.result.iterations << ',' << num(r.result.time_ms) << ',' << c.g_evals << ',' << c.grad_evals << ','
       << c.h_evals << ',' << c.subproblem_solves << ',' << c.lp_solves << ',' << num(r.result.theta_final) << '\n';
  }
}

/// One results.csv row as read back for profiles.
struct ResultRow {
  std::string problem;
  std::string algo;
  std::string seed;
  std::string status;
  double time_ms = kNaN;
  double g_evals = kNaN;
  double h_evals = kNaN;
};

inline std::vector<ResultRow> read_results_csv(std::istream& is, const std::string& source = "results.csv") {
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader)
    throw std::runtime_error(source + ": unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 12) throw std::runtime_error(source + ": malformed row '" + line + "'");
    ResultRow r;
    r.problem = c[0];
    r.algo = c[1];
    r.seed = c[2];
    r.status = c[3];
    r.time_ms = std::stod(c[5]);
    r.g_evals = std::stod(c[6]);
    r.h_evals = std::stod(c[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> as_result_rows(const std::vector<BenchRun>& runs) {
  std::vector<ResultRow> rows;
  for (const auto& r : runs)
    rows.push_back({r.problem, std::string(to_string(r.algorithm)), std::to_string(r.seed),
                    std::string(to_string(r.result.status)), r.result.time_ms,
                    static_cast<double>(r.result.counters.g_evals), static_cast<double>(r.result.counters.h_evals)});
  return rows;
}

/// Each (problem, seed) pair is one profile instance; failures are runs that
/// did not converge. Solvers keep their first-appearance order.
inline ProfileTable profile_table(const std::vector<ResultRow>& rows, const std::string& measure) {
  std::function<double(const ResultRow&)> get;
  if (measure == "time")
    get = [](const ResultRow& r) { return r.time_ms; };
  else if (measure == "h_evals")
    get = [](const ResultRow& r) { return r.h_evals; };
  else if (measure == "g_evals")
    get = [](const ResultRow& r) { return r.g_evals; };
  else
    throw ContractViolation("unknown profile measure '" + measure + "'");

  ProfileTable t;
  t.measure = measure;
  std::map<std::pair<std::string, std::string>, std::size_t> row_of;
  std::map<std::string, std::size_t> col_of;
  for (const auto& r : rows) {
    if (!col_of.count(r.algo)) {
      col_of[r.algo] = t.solvers.size();
      t.solvers.push_back(r.algo);
    }
    const auto key = std::make_pair(r.problem, r.seed);
    if (!row_of.count(key)) {
      row_of[key] = t.problems.size();
      t.problems.push_back(r.problem + "#" + r.seed);
    }
  }
  t.cost.assign(t.problems.size(), std::vector<std::optional<double>>(t.solvers.size()));
  for (const auto& r : rows) {
    if (r.status != "converged") continue;
    // A zero wall time would break the ratios; clamp to one microsecond.
    const double v = measure == "time" ? std::max(get(r), 1e-3) : get(r);
    t.cost[row_of[{r.problem, r.seed}]][col_of[r.algo]] = v;
  }
  return t;
}

inline void write_profile_csv(std::ostream& os, const PerformanceProfile& prof) {
  os << "tau";
  for (const auto& s : prof.solvers) os << ",rho_" << s;
  os << '\n';
  for (std::size_t i = 0; i < prof.taus.size(); ++i) {
    os << num(prof.taus[i]);
    for (std::size_t s = 0; s < prof.solvers.size(); ++s) os << ',' << num(prof.rho[s][i]);
    os << '\n';
  }
}

inline nlohmann::json to_json(const Vector& v) {
  auto a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json to_json(const EvalCounters& c) {
  return {{"g_evals", c.g_evals},
          {"grad_evals", c.grad_evals},
          {"h_evals", c.h_evals},
          {"subproblem_solves", c.subproblem_solves},
          {"lp_solves", c.lp_solves}};
}

inline nlohmann::json to_json(const SolverConfig& c) {
  return {{"algorithm", to_string(c.algorithm)},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"tau1", c.tau1},
          {"tau2", c.tau2},
          {"sigma", c.sigma},
          {"eps", c.eps},
          {"max_iters", c.max_iters},
          {"armijo_literal_sign", c.armijo_literal_sign}};
}

inline nlohmann::json to_json(const std::optional<RobustSpec>& spec) {
  if (!spec) return nullptr;
  return {{"delta_hat", spec->delta_hat}, {"delta", spec->delta}, {"x_hat", to_json(spec->x_hat)}};
}

inline nlohmann::json result_json(const PreparedProblem& prob, const SolverConfig& cfg, const Vector& x0,
                                  std::uint64_t seed, const RunResult& r) {
  return {{"problem", prob.name},
          {"instance", prob.inst.name},
          {"n", prob.inst.n},
          {"m", prob.inst.m},
          {"seed", seed},
          {"config", to_json(cfg)},
          {"robust", to_json(prob.robust)},
          {"status", to_string(r.status)},
          {"message", r.message},
          {"iterations", r.iterations},
          {"theta_final", r.theta_final},
          {"alpha_final", r.alpha_final},
          {"time_ms", r.time_ms},
          {"x0", to_json(x0)},
          {"x_final", to_json(r.x_final)},
          {"F_final", to_json(r.F_final)},
          {"counters", to_json(r.counters)}};
}

inline double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Per-algorithm robustness (converged fraction) and efficiency (share of
/// instances where the algorithm is the cheapest, ties included) on time and
/// on H evaluations.
inline nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<BenchRun>& runs) {
  const auto rows = as_result_rows(runs);
  const auto time_prof = performance_profile(profile_table(rows, "time"));
  const auto h_prof = performance_profile(profile_table(rows, "h_evals"));
  nlohmann::json algos = nlohmann::json::object();
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    const std::string name(to_string(cfg.algorithms[a]));
    int total = 0;
    int conv = 0;
    std::vector<double> h;
    std::vector<double> it;
    for (const auto& r : runs) {
      if (r.algorithm != cfg.algorithms[a]) continue;
      ++total;
      if (!r.result.converged()) continue;
      ++conv;
      h.push_back(static_cast<double>(r.result.counters.h_evals));
      it.push_back(r.result.iterations);
    }
    const auto col = static_cast<std::size_t>(
        std::find(time_prof.solvers.begin(), time_prof.solvers.end(), name) - time_prof.solvers.begin());
    algos[name] = {{"runs", total},
                   {"converged", conv},
                   {"robustness", total ? static_cast<double>(conv) / total : kNaN},
                   {"efficiency_time", time_prof.at(col, 1.0)},
                   {"efficiency_h_evals", h_prof.at(col, 1.0)},
                   {"median_h_evals", median(h)},
                   {"median_iterations", median(it)}};
  }
  return {{"master_seed", cfg.master_seed},
          {"robust", cfg.robust},
          {"starts_per_problem", cfg.starts_per_problem},
          {"problems", cfg.problems},
          {"config", to_json(cfg.solver)},
          {"algorithms", algos}};
}

inline void write_front_csv(std::ostream& os, const FrontierResult& fr, Index n, Index m) {
  for (Index i = 1; i <= n; ++i) os << (i > 1 ? "," : "") << "x_" << i;
  for (Index j = 1; j <= m; ++j) os << ",F_" << j;
  os << '\n';
  for (std::size_t k = 0; k < fr.front.size(); ++k) {
    for (Index i = 0; i < n; ++i) os << (i ? "," : "") << num(fr.x[k](i));
    for (Index j = 0; j < m; ++j) os << ',' << num(fr.front.points[k](j));
    os << '\n';
  }
}

/// Reads the F columns of a front.csv.
inline FrontSet read_front_csv(std::istream& is, const std::string& source = "front.csv") {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(source + ": missing header");
  const auto head = split_csv_line(line);
  std::vector<std::size_t> fcols;
  for (std::size_t i = 0; i < head.size(); ++i)
    if (head[i].rfind("F_", 0) == 0) fcols.push_back(i);
  if (fcols.empty()) throw std::runtime_error(source + ": no F columns");
  FrontSet f;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != head.size()) throw std::runtime_error(source + ": malformed row '" + line + "'");
    Vector p(static_cast<Index>(fcols.size()));
    for (std::size_t j = 0; j < fcols.size(); ++j) p(static_cast<Index>(j)) = std::stod(c[fcols[j]]);
    f.points.push_back(std::move(p));
  }
  return f;
}

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

/// Purity against the filtered union of all fronts of the problem, and the
/// spread metrics with extremes taken from that union.
inline nlohmann::json front_metrics_json(const std::vector<FrontSet>& fronts) {
  const FrontSet ref = reference_front(fronts);
  nlohmann::json out = nlohmann::json::object();
  const double tol = ref.empty() ? 0.0 : default_purity_tol(ref);
  const bool biobjective = !ref.empty() && ref.points.front().size() == 2;
  for (const auto& f : fronts) {
    nlohmann::json e = {{"points", f.size()}, {"purity", opt_json(purity(f, ref, tol))}};
    if (biobjective && !f.empty()) {
      const FrontExtremes ext = front_extremes(ref);
      e["spread_gamma"] = opt_json(spread_gamma(f, ext));
      e["spread_delta"] = opt_json(spread_delta(f, ext));
    } else {
      e["spread_gamma"] = nullptr;
      e["spread_delta"] = nullptr;
    }
    out[f.solver] = e;
  }
  return {{"reference_points", ref.size()}, {"purity_tol", tol}, {"solvers", out}};
}

}  // namespace moprox
