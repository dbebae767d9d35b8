#pragma once

#include "moprox/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace moprox {

enum class AcceptedCase { none, ls1, ls2, armijo, implicit };

constexpr std::string_view to_string(AcceptedCase c) {
  switch (c) {
    case AcceptedCase::none: return "none";
    case AcceptedCase::ls1: return "LS1";
    case AcceptedCase::ls2: return "LS2";
    case AcceptedCase::armijo: return "armijo";
    case AcceptedCase::implicit: return "implicit";
  }
  return "unknown";
}

class LineSearchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LineSearchResult {
  double t = 0.0;
  AcceptedCase accepted_case = AcceptedCase::none;
  // Number of trial step sizes computed after the unit step.
  int omega = 0;
  // Objective index driving the single-function search (explicit search only).
  Index j_star = -1;
  long g_evals = 0;
  long h_evals = 0;
  // G evaluations spent backtracking vs. completing the F-dominance check.
  long g_evals_search = 0;
  long g_evals_check = 0;
  Vector x_new;
  Vector g_new;
  // H values at x_new, present only when every H_j(x_new) was evaluated.
  std::optional<Vector> h_new;
};

/// Minimizer of the quadratic through phi(0) = phi0, phi'(0) = dphi0 and
/// phi(t) = phit, clamped to [tau1 t, tau2 t]. Nondescent slopes and flat or
/// concave fits fall back to the midpoint factor.
inline double interpolate_step(double t, double phi0, double dphi0, double phit, double tau1, double tau2) {
  require(t > 0.0, "interpolate_step: t must be positive");
  const double fallback = 0.5 * (tau1 + tau2) * t;
  if (!(dphi0 < 0.0) || !std::isfinite(phit)) return fallback;
  const double denom = 2.0 * (phit - phi0 - dphi0 * t);
  const double scale = std::max({1.0, std::abs(phi0), std::abs(phit), std::abs(dphi0 * t)});
  if (!(denom > 1e-14 * scale)) return fallback;
  const double tq = -dphi0 * t * t / denom;
  return std::clamp(tq, tau1 * t, tau2 * t);
}

namespace detail {

inline Vector trial_point(const ProblemInstance& inst, const Vector& x, const Vector& d, double t) {
  // x and x + d are box points; clamping only removes rounding drift.
  return inst.box.clamp(x + t * d);
}

// Evaluates H_j(y) in index order until F_j(y) exceeds bound_j. Returns true
// when every j passes; h receives the computed values.
inline bool dominance_check(const ProblemInstance& inst, const Vector& y, const Vector& g_y, const Vector& bound,
                            Vector& h, EvalCounters& counters) {
  h = Vector::Constant(inst.m, kNaN);
  for (Index j = 0; j < inst.m; ++j) {
    h(j) = eval_h(inst.nonsmooth[static_cast<std::size_t>(j)], y, counters);
    if (g_y(j) + h(j) > bound(j)) return false;
  }
  return true;
}

}  // namespace detail

/// Explicit backtracking on the smooth parts only. Step 3.1 backtracks on
/// j* = argmax_j g_j'd, then F-dominance is tested; if it fails, t is shrunk
/// until the decrease condition holds for every G_j.
inline LineSearchResult explicit_search(const ProblemInstance& inst, const Vector& x, const Vector& d,
                                        const std::vector<Vector>& grads, const ObjectiveValues& F_at_x,
                                        double gamma, double tau1, double tau2, EvalCounters& counters,
                                        int max_backtracks = 200) {
  require(d.size() == inst.n && x.size() == inst.n, "explicit_search: dimension mismatch");
  require(gamma > 0.0, "explicit_search: gamma must be positive");
  require(0.0 < tau1 && tau1 < tau2 && tau2 < 1.0, "explicit_search: need 0 < tau1 < tau2 < 1");
  const EvalCounters start = counters;
  const Index m = inst.m;
  const double half_gamma_dd = 0.5 * gamma * d.squaredNorm();

  Vector slope(m);
  for (Index j = 0; j < m; ++j) slope(j) = grads[static_cast<std::size_t>(j)].dot(d);
  Index js = 0;
  for (Index j = 1; j < m; ++j)
    if (slope(j) > slope(js)) js = j;

  LineSearchResult r;
  r.j_star = js;
  auto bound = [&](Index j, double t) { return F_at_x.g(j) + t * slope(j) + t * half_gamma_dd; };
  auto budget = [&] {
    if (r.omega >= max_backtracks)
      throw LineSearchFailure("explicit line search exceeded " + std::to_string(max_backtracks) + " backtracks");
  };

  // Step 3.1
  double t = 1.0;
  Vector y = detail::trial_point(inst, x, d, t);
  double gs = eval_g(inst, js, y, counters);
  long search_evals = 1;
  while (!(gs <= bound(js, t))) {
    budget();
    t = interpolate_step(t, F_at_x.g(js), slope(js), gs, tau1, tau2);
    ++r.omega;
    y = detail::trial_point(inst, x, d, t);
    gs = eval_g(inst, js, y, counters);
    ++search_evals;
  }

  // Step 3.2
  Vector g_y(m);
  for (Index j = 0; j < m; ++j) g_y(j) = j == js ? gs : eval_g(inst, j, y, counters);
  r.g_evals_check = m - 1;
  Vector h_y;
  if (detail::dominance_check(inst, y, g_y, F_at_x.f, h_y, counters)) {
    r.accepted_case = AcceptedCase::ls1;
    r.h_new = h_y;
  } else {
    // Step 3.3
    while (true) {
      budget();
      Index jv = 0;
      double worst = -kInf;
      for (Index j = 0; j < m; ++j) {
        const double v = g_y(j) - bound(j, t);
        if (v > worst) {
          worst = v;
          jv = j;
        }
      }
      t = interpolate_step(t, F_at_x.g(jv), slope(jv), g_y(jv), tau1, tau2);
      ++r.omega;
      y = detail::trial_point(inst, x, d, t);
      bool ok = true;
      for (Index j = 0; j < m; ++j) {
        g_y(j) = eval_g(inst, j, y, counters);
        ok = ok && g_y(j) <= bound(j, t);
      }
      search_evals += m;
      if (ok) break;
    }
    r.accepted_case = AcceptedCase::ls2;
  }

  r.t = t;
  r.x_new = y;
  r.g_new = g_y;
  r.g_evals_search = search_evals;
  const EvalCounters used = counters - start;
  r.g_evals = used.g_evals;
  r.h_evals = used.h_evals;
  return r;
}

/// Halving search t = 2^-l accepting the first t with
/// F_j(x + td) <= F_j(x) + sigma t psi for every j. With literal_sign the
/// right-hand side uses -sigma t psi instead.
inline LineSearchResult armijo_search(const ProblemInstance& inst, const Vector& x, const Vector& d, double psi_p,
                                      double sigma, const ObjectiveValues& F_at_x, EvalCounters& counters,
                                      bool literal_sign = false, int max_halvings = 60) {
  require(d.size() == inst.n && x.size() == inst.n, "armijo_search: dimension mismatch");
  require(sigma > 0.0 && sigma < 1.0, "armijo_search: sigma must lie in (0, 1)");
  const EvalCounters start = counters;
  const double signed_psi = literal_sign ? -psi_p : psi_p;
  LineSearchResult r;
  double t = 1.0;
  for (int l = 0;; ++l) {
    if (l > max_halvings)
      throw LineSearchFailure("Armijo search exceeded " + std::to_string(max_halvings) + " halvings");
    const Vector y = detail::trial_point(inst, x, d, t);
    Vector g_y(inst.m);
    for (Index j = 0; j < inst.m; ++j) g_y(j) = eval_g(inst, j, y, counters);
    const Vector bound = F_at_x.f.array() + sigma * t * signed_psi;
    Vector h_y;
    if (detail::dominance_check(inst, y, g_y, bound, h_y, counters)) {
      r.t = t;
      r.omega = l;
      r.accepted_case = AcceptedCase::armijo;
      r.x_new = y;
      r.g_new = g_y;
      r.h_new = h_y;
      break;
    }
    t *= 0.5;
  }
  const EvalCounters used = counters - start;
  r.g_evals = used.g_evals;
  r.h_evals = used.h_evals;
  r.g_evals_search = used.g_evals;
  return r;
}

/// G_j(p) <= G_j(x) + g_j'd + |d|^2 / (2 alpha) for every j. Stops at the
/// first failing j; on success g_at_p (if given) receives every G_j(p).
inline bool implicit_test(const ProblemInstance& inst, const Vector& x, const Vector& p,
                          const std::vector<Vector>& grads, const Vector& g_at_x, double alpha,
                          EvalCounters& counters, Vector* g_at_p = nullptr) {
  require(alpha > 0.0, "implicit_test: alpha must be positive");
  const Vector d = p - x;
  const double quad = d.squaredNorm() / (2.0 * alpha);
  Vector g(inst.m);
  for (Index j = 0; j < inst.m; ++j) {
    g(j) = eval_g(inst, j, p, counters);
    if (!(g(j) <= g_at_x(j) + grads[static_cast<std::size_t>(j)].dot(d) + quad)) return false;
  }
  if (g_at_p) *g_at_p = g;
  return true;
}

}  // namespace moprox
