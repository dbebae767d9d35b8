#pragma once

#include "moprox/convexprog.hpp"
#include "moprox/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace moprox {

/// Closed box {x : lb <= x <= ub}; the common domain of every H_j.
class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(Vector lb, Vector ub) : lb_(std::move(lb)), ub_(std::move(ub)) {
    require(lb_.size() == ub_.size(), "BoxDomain: lb and ub lengths differ");
    require(lb_.allFinite() && ub_.allFinite(), "BoxDomain: bounds must be finite");
    require((lb_.array() <= ub_.array()).all(), "BoxDomain: lb must not exceed ub");
  }

  [[nodiscard]] Index dim() const { return lb_.size(); }
  [[nodiscard]] const Vector& lb() const { return lb_; }
  [[nodiscard]] const Vector& ub() const { return ub_; }

  [[nodiscard]] bool contains(const Vector& x) const {
    return x.size() == dim() && (x.array() >= lb_.array()).all() && (x.array() <= ub_.array()).all();
  }
  [[nodiscard]] Vector clamp(const Vector& x) const { return x.cwiseMax(lb_).cwiseMin(ub_); }
  [[nodiscard]] double diameter() const { return (ub_ - lb_).norm(); }

 private:
  Vector lb_;
  Vector ub_;
};

/// Differentiable convex part G_j with its gradient. Oracles must be pure.
struct SmoothPart {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::optional<double> lipschitz;
};

/// Nonsmooth part H_j: the indicator of the box, plus the support function of
/// an uncertainty polyhedron when one is attached.
struct NonsmoothPart {
  BoxDomain domain;
  std::optional<PolyhedralSet> support;
};

/// Per-run evaluation counters. Oracles never touch them; the evaluation
/// helpers below do.
struct EvalCounters {
  long g_evals = 0;
  long grad_evals = 0;
  long h_evals = 0;
  long subproblem_solves = 0;
  long lp_solves = 0;

  EvalCounters& operator+=(const EvalCounters& o) {
    g_evals += o.g_evals;
    grad_evals += o.grad_evals;
    h_evals += o.h_evals;
    subproblem_solves += o.subproblem_solves;
    lp_solves += o.lp_solves;
    return *this;
  }
  friend EvalCounters operator-(EvalCounters a, const EvalCounters& b) {
    a.g_evals -= b.g_evals;
    a.grad_evals -= b.grad_evals;
    a.h_evals -= b.h_evals;
    a.subproblem_solves -= b.subproblem_solves;
    a.lp_solves -= b.lp_solves;
    return a;
  }
  bool operator==(const EvalCounters&) const = default;
};

/// F_j = G_j + H_j, j = 1..m, over a shared box.
struct ProblemInstance {
  std::string name;
  Index n = 0;
  Index m = 0;
  BoxDomain box;
  std::vector<SmoothPart> smooth;
  std::vector<NonsmoothPart> nonsmooth;

  void validate() const {
    require(m >= 1, "ProblemInstance: at least one objective is required");
    require(box.dim() == n, "ProblemInstance: box dimension mismatch");
    require(static_cast<Index>(smooth.size()) == m && static_cast<Index>(nonsmooth.size()) == m,
            "ProblemInstance: need m smooth and m nonsmooth parts");
    for (const auto& s : smooth) require(s.value && s.gradient, "ProblemInstance: smooth oracle missing");
    for (const auto& h : nonsmooth) {
      require(h.domain.dim() == n, "ProblemInstance: nonsmooth domain dimension mismatch");
      if (h.support) require(h.support->dim() == n, "ProblemInstance: uncertainty set dimension mismatch");
    }
  }

  [[nodiscard]] bool has_support_terms() const {
    for (const auto& h : nonsmooth)
      if (h.support) return true;
    return false;
  }

  /// Largest gradient Lipschitz constant, when every G_j has one.
  [[nodiscard]] std::optional<double> lipschitz_max() const {
    double l = 0.0;
    for (const auto& s : smooth) {
      if (!s.lipschitz) return std::nullopt;
      l = std::max(l, *s.lipschitz);
    }
    return l;
  }
};

struct ObjectiveValues {
  Vector f;
  Vector g;
  Vector h;
};

/// a <= b componentwise.
inline bool dominates_weakly(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dominates_weakly: length mismatch");
  return (a.array() <= b.array()).all();
}

/// a < b componentwise.
inline bool dominates_strictly(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dominates_strictly: length mismatch");
  return (a.array() < b.array()).all();
}

/// True iff no other vector of the set is strictly smaller in every component.
inline bool is_weak_pareto_in_set(std::size_t index, const std::vector<Vector>& values) {
  require(index < values.size(), "is_weak_pareto_in_set: index out of range");
  for (std::size_t k = 0; k < values.size(); ++k)
    if (k != index && dominates_strictly(values[k], values[index])) return false;
  return true;
}

inline double eval_g(const ProblemInstance& inst, Index j, const Vector& x, EvalCounters& counters) {
  ++counters.g_evals;
  return inst.smooth[static_cast<std::size_t>(j)].value(x);
}

inline Vector eval_grad(const ProblemInstance& inst, Index j, const Vector& x, EvalCounters& counters) {
  ++counters.grad_evals;
  return inst.smooth[static_cast<std::size_t>(j)].gradient(x);
}

inline std::vector<Vector> eval_grads(const ProblemInstance& inst, const Vector& x, EvalCounters& counters) {
  std::vector<Vector> grads;
  grads.reserve(static_cast<std::size_t>(inst.m));
  for (Index j = 0; j < inst.m; ++j) grads.push_back(eval_grad(inst, j, x, counters));
  return grads;
}

/// H_j(x): +inf outside the box, 0 without a support term, otherwise the
/// optimum of max { x'z : z in Z_j } computed by the simplex solver.
inline double eval_h(const NonsmoothPart& part, const Vector& x, EvalCounters& counters) {
  if (!part.domain.contains(x)) return kInf;
  ++counters.h_evals;
  if (!part.support) return 0.0;
  ++counters.lp_solves;
  const ProgramSolution sol = solve_lp({x, *part.support});
  if (!sol.optimal()) throw InvalidUncertaintySet("support LP is " + std::string(to_string(sol.status)));
  return sol.objective_value;
}

inline Vector eval_h_all(const ProblemInstance& inst, const Vector& x, EvalCounters& counters) {
  Vector h(inst.m);
  for (Index j = 0; j < inst.m; ++j) h(j) = eval_h(inst.nonsmooth[static_cast<std::size_t>(j)], x, counters);
  return h;
}

inline ObjectiveValues evaluate(const ProblemInstance& inst, const Vector& x, EvalCounters& counters) {
  ObjectiveValues v;
  v.g.resize(inst.m);
  for (Index j = 0; j < inst.m; ++j) v.g(j) = eval_g(inst, j, x, counters);
  v.h = eval_h_all(inst, x, counters);
  v.f = v.g + v.h;
  return v;
}

/// psi_x(u) = max_j grad G_j(x)'(u - x) + H_j(u) - H_j(x), with H_j(x) given.
inline double psi_value(const ProblemInstance& inst, const Vector& x, const Vector& u,
                        const std::vector<Vector>& grads, const Vector& h_at_x, EvalCounters& counters) {
  require(static_cast<Index>(grads.size()) == inst.m && h_at_x.size() == inst.m, "psi_value: need m gradients");
  if (!inst.box.contains(u)) return kInf;
  const Vector step = u - x;
  double best = -kInf;
  for (Index j = 0; j < inst.m; ++j) {
    const auto& part = inst.nonsmooth[static_cast<std::size_t>(j)];
    const double hu = part.support ? eval_h(part, u, counters) : 0.0;
    best = std::max(best, grads[static_cast<std::size_t>(j)].dot(step) + hu - h_at_x(j));
  }
  return best;
}

inline double psi_value(const ProblemInstance& inst, const Vector& x, const Vector& u,
                        const std::vector<Vector>& grads, EvalCounters& counters) {
  require(inst.box.contains(x), "psi_value: x must lie in the box");
  return psi_value(inst, x, u, grads, eval_h_all(inst, x, counters), counters);
}

}  // namespace moprox
