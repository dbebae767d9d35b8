#pragma once

#include "moprox/core.hpp"
#include "moprox/linesearch.hpp"
#include "moprox/subproblem.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace moprox {

enum class Algorithm { mpg, mpg_armijo, mpg_implicit };

constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::mpg: return "mpg";
    case Algorithm::mpg_armijo: return "mpg_armijo";
    case Algorithm::mpg_implicit: return "mpg_implicit";
  }
  return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (const Algorithm a : {Algorithm::mpg, Algorithm::mpg_armijo, Algorithm::mpg_implicit})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

struct SolverConfig {
  Algorithm algorithm = Algorithm::mpg;
  double alpha = 1.0;
  double gamma = 1.9999;
  double tau1 = 0.1;
  double tau2 = 0.9;
  double sigma = 1e-4;
  double eps = 1e-4;
  int max_iters = 200;
  std::uint64_t seed = 0;
  // Use F_j(x + td) <= F_j(x) - sigma t psi in the Armijo test.
  bool armijo_literal_sign = false;
  int max_backtracks = 200;
  // Full iterates are kept in the trace only up to this dimension.
  Index trace_x_max_dim = 1000;

  void validate() const {
    require(alpha > 0.0 && std::isfinite(alpha), "SolverConfig: alpha must be positive");
    require(gamma > 0.0 && gamma < 2.0 / alpha, "SolverConfig: gamma must lie in (0, 2/alpha)");
    require(0.0 < tau1 && tau1 < tau2 && tau2 < 1.0, "SolverConfig: need 0 < tau1 < tau2 < 1");
    require(sigma > 0.0 && sigma < 1.0, "SolverConfig: sigma must lie in (0, 1)");
    require(eps > 0.0, "SolverConfig: eps must be positive");
    require(max_iters >= 0, "SolverConfig: max_iters must be nonnegative");
    require(max_backtracks >= 1, "SolverConfig: max_backtracks must be positive");
  }
};

enum class RunStatus { converged, max_iterations, linesearch_failure, subproblem_failure };

constexpr std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iterations: return "max_iterations";
    case RunStatus::linesearch_failure: return "linesearch_failure";
    case RunStatus::subproblem_failure: return "subproblem_failure";
  }
  return "unknown";
}

/// State at x^k and the step taken from it. The last record of a run has no
/// step: t = 0, omega = 0 and accepted_case = none.
struct IterationRecord {
  int k = 0;
  Vector x;  // empty when n exceeds SolverConfig::trace_x_max_dim
  Vector F;
  double theta = kNaN;
  double norm_d = kNaN;
  double t = 0.0;
  AcceptedCase accepted_case = AcceptedCase::none;
  int omega = 0;
  double alpha_used = kNaN;
  Index j_star = -1;
  // Subproblems solved at this iteration (more than one only for MPG-Implicit).
  int subproblems = 0;
  long ls_g_evals_search = 0;
  long ls_g_evals_check = 0;
  long ls_h_evals = 0;
  // Counters accumulated up to the end of this iteration.
  EvalCounters counters;
  double wall_time = 0.0;  // seconds since the run started
};

struct RunResult {
  RunStatus status = RunStatus::max_iterations;
  Vector x_final;
  Vector F_final;
  double theta_final = kNaN;
  int iterations = 0;
  double alpha_final = kNaN;
  std::vector<IterationRecord> trace;
  EvalCounters counters;
  double time_ms = 0.0;
  std::string message;

  [[nodiscard]] bool converged() const { return status == RunStatus::converged; }
};

namespace detail {

class RunRecorder {
 public:
  RunRecorder(const ProblemInstance& inst, const SolverConfig& cfg)
      : inst_(inst), cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  [[nodiscard]] double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  IterationRecord open(int k, const Vector& x, const ObjectiveValues& Fx, const SubproblemSolution& sub,
                       double alpha) const {
    IterationRecord rec;
    rec.k = k;
    if (inst_.n <= cfg_.trace_x_max_dim) rec.x = x;
    rec.F = Fx.f;
    rec.theta = sub.theta;
    rec.norm_d = sub.d.norm();
    rec.alpha_used = alpha;
    return rec;
  }

  void step(IterationRecord& rec, const LineSearchResult& ls) const {
    rec.t = ls.t;
    rec.accepted_case = ls.accepted_case;
    rec.omega = ls.omega;
    rec.j_star = ls.j_star;
    rec.ls_g_evals_search = ls.g_evals_search;
    rec.ls_g_evals_check = ls.g_evals_check;
    rec.ls_h_evals = ls.h_evals;
  }

  void push(RunResult& out, IterationRecord rec, const EvalCounters& c) const {
    rec.counters = c;
    rec.wall_time = elapsed();
    out.trace.push_back(std::move(rec));
  }

  void finish(RunResult& out, RunStatus status, const Vector& x, const ObjectiveValues& Fx, double theta,
              int iterations, double alpha, const EvalCounters& c, std::string message = {}) const {
    out.status = status;
    out.x_final = x;
    out.F_final = Fx.f;
    out.theta_final = theta;
    out.iterations = iterations;
    out.alpha_final = alpha;
    out.counters = c;
    out.message = std::move(message);
    out.time_ms = 1e3 * elapsed();
  }

 private:
  const ProblemInstance& inst_;
  const SolverConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
};

inline ObjectiveValues values_after_step(const ProblemInstance& inst, const LineSearchResult& ls,
                                         EvalCounters& counters) {
  ObjectiveValues v;
  v.g = ls.g_new;
  v.h = ls.h_new ? *ls.h_new : eval_h_all(inst, ls.x_new, counters);
  v.f = v.g + v.h;
  return v;
}

// Shared loop of MPG and MPG-Armijo: one subproblem per iteration, then a
// step-size search along d.
template <class Search>
RunResult run_fixed_alpha(const ProblemInstance& inst, const Vector& x0, const SolverConfig& cfg, Search&& search) {
  inst.validate();
  cfg.validate();
  require(inst.box.contains(x0), "solver: x0 must lie in the box");
  const RunRecorder rec(inst, cfg);
  RunResult out;
  EvalCounters c;
  Vector x = x0;
  ObjectiveValues Fx = evaluate(inst, x, c);
  double theta = kNaN;
  for (int k = 0;; ++k) {
    const std::vector<Vector> grads = eval_grads(inst, x, c);
    SubproblemSolution sub;
    try {
      sub = solve_proximal(inst, x, cfg.alpha, grads, Fx.h, c);
    } catch (const std::runtime_error& e) {
      rec.finish(out, RunStatus::subproblem_failure, x, Fx, theta, k, cfg.alpha, c, e.what());
      return out;
    }
    theta = sub.theta;
    IterationRecord r = rec.open(k, x, Fx, sub, cfg.alpha);
    r.subproblems = 1;
    if (sub.degraded) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::subproblem_failure, x, Fx, theta, k, cfg.alpha, c, "QP iteration cap reached");
      return out;
    }
    if (std::abs(theta) <= cfg.eps) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::converged, x, Fx, theta, k, cfg.alpha, c);
      return out;
    }
    if (k >= cfg.max_iters) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::max_iterations, x, Fx, theta, k, cfg.alpha, c);
      return out;
    }
    if (sub.d.squaredNorm() == 0.0) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::subproblem_failure, x, Fx, theta, k, cfg.alpha, c, "zero direction with large theta");
      return out;
    }
    LineSearchResult ls;
    try {
      ls = search(x, grads, sub, Fx, c);
    } catch (const LineSearchFailure& e) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::linesearch_failure, x, Fx, theta, k, cfg.alpha, c, e.what());
      return out;
    } catch (const InvalidUncertaintySet& e) {
      rec.push(out, r, c);
      rec.finish(out, RunStatus::subproblem_failure, x, Fx, theta, k, cfg.alpha, c, e.what());
      return out;
    }
    rec.step(r, ls);
    x = ls.x_new;
    Fx = values_after_step(inst, ls, c);
    rec.push(out, r, c);
  }
}

}  // namespace detail

/// Proximal gradient method with the explicit line search on the G_j.
inline RunResult run_mpg(const ProblemInstance& inst, const Vector& x0, const SolverConfig& cfg) {
  return detail::run_fixed_alpha(
      inst, x0, cfg,
      [&](const Vector& x, const std::vector<Vector>& grads, const SubproblemSolution& sub, const ObjectiveValues& Fx,
          EvalCounters& c) {
        return explicit_search(inst, x, sub.d, grads, Fx, cfg.gamma, cfg.tau1, cfg.tau2, c, cfg.max_backtracks);
      });
}

/// Baseline: proximal gradient with an Armijo halving search on the F_j.
inline RunResult run_mpg_armijo(const ProblemInstance& inst, const Vector& x0, const SolverConfig& cfg) {
  return detail::run_fixed_alpha(
      inst, x0, cfg,
      [&](const Vector& x, const std::vector<Vector>&, const SubproblemSolution& sub, const ObjectiveValues& Fx,
          EvalCounters& c) {
        const double psi_p = sub.theta - sub.d.squaredNorm() / (2.0 * cfg.alpha);
        return armijo_search(inst, x, sub.d, psi_p, cfg.sigma, Fx, c, cfg.armijo_literal_sign);
      });
}

/// Baseline: full proximal steps, halving alpha (and re-solving) until the
/// descent-lemma test holds for every G_j. alpha is kept across iterations.
inline RunResult run_mpg_implicit(const ProblemInstance& inst, const Vector& x0, const SolverConfig& cfg) {
  inst.validate();
  cfg.validate();
  require(inst.box.contains(x0), "solver: x0 must lie in the box");
  const detail::RunRecorder rec(inst, cfg);
  RunResult out;
  EvalCounters c;
  Vector x = x0;
  ObjectiveValues Fx = evaluate(inst, x, c);
  double alpha = cfg.alpha;
  double theta = kNaN;
  for (int k = 0;; ++k) {
    const std::vector<Vector> grads = eval_grads(inst, x, c);
    int solves = 0;
    int halvings = 0;
    while (true) {
      SubproblemSolution sub;
      try {
        sub = solve_proximal(inst, x, alpha, grads, Fx.h, c);
      } catch (const std::runtime_error& e) {
        rec.finish(out, RunStatus::subproblem_failure, x, Fx, theta, k, alpha, c, e.what());
        return out;
      }
      ++solves;
      theta = sub.theta;
      IterationRecord r = rec.open(k, x, Fx, sub, alpha);
      r.subproblems = solves;
      r.omega = halvings;
      auto stop = [&](RunStatus s, std::string msg = {}) {
        rec.push(out, r, c);
        rec.finish(out, s, x, Fx, theta, k, alpha, c, std::move(msg));
        return out;
      };
      if (sub.degraded) return stop(RunStatus::subproblem_failure, "QP iteration cap reached");
      if (std::abs(theta) <= cfg.eps) return stop(RunStatus::converged);
      if (k >= cfg.max_iters) return stop(RunStatus::max_iterations);
      if (sub.d.squaredNorm() == 0.0) return stop(RunStatus::subproblem_failure, "zero direction with large theta");
      Vector g_p;
      if (implicit_test(inst, x, sub.p, grads, Fx.g, alpha, c, &g_p)) {
        r.t = 1.0;
        r.accepted_case = AcceptedCase::implicit;
        x = sub.p;
        Fx.g = g_p;
        try {
          Fx.h = eval_h_all(inst, x, c);
        } catch (const InvalidUncertaintySet& e) {
          return stop(RunStatus::subproblem_failure, e.what());
        }
        Fx.f = Fx.g + Fx.h;
        rec.push(out, r, c);
        break;
      }
      alpha *= 0.5;
      ++halvings;
      if (alpha < 1e-12) return stop(RunStatus::subproblem_failure, "alpha fell below 1e-12");
    }
  }
}

inline RunResult run_solver(const ProblemInstance& inst, const Vector& x0, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::mpg: return run_mpg(inst, x0, cfg);
    case Algorithm::mpg_armijo: return run_mpg_armijo(inst, x0, cfg);
    case Algorithm::mpg_implicit: return run_mpg_implicit(inst, x0, cfg);
  }
  throw ContractViolation("unknown algorithm");
}

/// |theta_alpha(x)| <= eps from a fresh subproblem solve.
inline bool check_stationarity(const ProblemInstance& inst, const Vector& x, double alpha, double eps) {
  EvalCounters scratch;
  return std::abs(solve_proximal(inst, x, alpha, scratch).theta) <= eps;
}

}  // namespace moprox
