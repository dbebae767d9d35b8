#pragma once

#include "moprox/convexprog.hpp"
#include "moprox/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace moprox {

/// p_alpha(x), theta_alpha(x) and the certificate of the QP that produced them.
struct SubproblemSolution {
  Vector p;
  double theta = kNaN;
  Vector d;
  double tau = kNaN;
  // Multipliers of the epigraph rows (one per objective).
  Vector epigraph_duals;
  // Dual blocks w_j; empty vectors for objectives without a support term.
  std::vector<Vector> support_duals;
  double kkt_residual = kInf;
  ProgramStatus qp_status = ProgramStatus::max_iterations;
  // Set when the QP stopped at its iteration cap and p is only its best iterate.
  bool degraded = false;
  int qp_iterations = 0;
  Vector h_at_x;
};

/// Thrown when the QP returns a point farther than 1e-9 outside the box.
class SubproblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct EpigraphLayout {
  Index n = 0;
  Index m = 0;
  // Offset of w_j inside the variable vector, -1 when j has no support term.
  std::vector<Index> w_offset;
  std::vector<Index> w_size;
  Index num_vars = 0;
  Index num_w = 0;
};

inline EpigraphLayout epigraph_layout(const ProblemInstance& inst) {
  EpigraphLayout l;
  l.n = inst.n;
  l.m = inst.m;
  Index next = 1 + inst.n;
  for (const auto& part : inst.nonsmooth) {
    if (part.support) {
      l.w_offset.push_back(next);
      l.w_size.push_back(part.support->rows());
      next += part.support->rows();
    } else {
      l.w_offset.push_back(-1);
      l.w_size.push_back(0);
    }
  }
  l.num_vars = next;
  l.num_w = next - 1 - inst.n;
  return l;
}

}  // namespace detail

/// Epigraph form of the proximal subproblem with the support functions
/// replaced by their LP duals. Variables are ordered (tau, u, w_1, ..., w_k).
///
///   min  tau + |u - x|^2 / (2 alpha)
///   s.t. g_j'(u - x) + b_j'w_j - H_j(x) <= tau       (w_j only if Z_j exists)
///        A_j'w_j = u,  w_j >= 0,  lb <= u <= ub
inline QpProblem build_epigraph_qp(const ProblemInstance& inst, const Vector& x, const std::vector<Vector>& grads,
                                   const Vector& h_at_x, double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "build_epigraph_qp: alpha must be positive");
  require(x.size() == inst.n, "build_epigraph_qp: x has the wrong dimension");
  require(static_cast<Index>(grads.size()) == inst.m && h_at_x.size() == inst.m,
          "build_epigraph_qp: need m gradients and m H values");
  const auto lay = detail::epigraph_layout(inst);
  const Index n = inst.n;
  const Index nv = lay.num_vars;

  QpProblem qp;
  qp.P = Matrix::Zero(nv, nv);
  qp.P.block(1, 1, n, n).diagonal().setConstant(1.0 / alpha);
  qp.q = Vector::Zero(nv);
  qp.q(0) = 1.0;
  qp.q.segment(1, n) = -x / alpha;
  qp.constant = x.squaredNorm() / (2.0 * alpha);

  const Index rows_ineq = inst.m + 2 * n + lay.num_w;
  qp.C = Matrix::Zero(rows_ineq, nv);
  qp.c = Vector::Zero(rows_ineq);
  Index num_eq = 0;
  for (Index j = 0; j < inst.m; ++j)
    if (lay.w_offset[static_cast<std::size_t>(j)] >= 0) num_eq += n;
  qp.E = Matrix::Zero(num_eq, nv);
  qp.e = Vector::Zero(num_eq);

  Index eq_row = 0;
  for (Index j = 0; j < inst.m; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const Vector& g = grads[uj];
    require(g.size() == n, "build_epigraph_qp: gradient has the wrong dimension");
    qp.C(j, 0) = -1.0;
    qp.C.block(j, 1, 1, n) = g.transpose();
    qp.c(j) = g.dot(x) + h_at_x(j);
    const Index off = lay.w_offset[uj];
    if (off < 0) continue;
    const PolyhedralSet& set = *inst.nonsmooth[uj].support;
    qp.C.block(j, off, 1, set.rows()) = set.b().transpose();
    qp.E.block(eq_row, off, n, set.rows()) = set.A().transpose();
    qp.E.block(eq_row, 1, n, n).diagonal().setConstant(-1.0);
    eq_row += n;
  }

  const Index box0 = inst.m;
  for (Index i = 0; i < n; ++i) {
    qp.C(box0 + i, 1 + i) = 1.0;
    qp.c(box0 + i) = inst.box.ub()(i);
    qp.C(box0 + n + i, 1 + i) = -1.0;
    qp.c(box0 + n + i) = -inst.box.lb()(i);
  }
  const Index sign0 = inst.m + 2 * n;
  for (Index k = 0; k < lay.num_w; ++k) qp.C(sign0 + k, 1 + n + k) = -1.0;
  return qp;
}

/// Solves min_u psi_x(u) + |u - x|^2 / (2 alpha) with gradients and H(x)
/// supplied by the caller.
inline SubproblemSolution solve_proximal(const ProblemInstance& inst, const Vector& x, double alpha,
                                         const std::vector<Vector>& grads, const Vector& h_at_x,
                                         EvalCounters& counters) {
  require(inst.box.contains(x), "solve_proximal: x must lie in the box");
  const QpProblem qp = build_epigraph_qp(inst, x, grads, h_at_x, alpha);
  ++counters.subproblem_solves;
  const ProgramSolution sol = solve_qp(qp);

  const auto lay = detail::epigraph_layout(inst);
  const Index n = inst.n;
  SubproblemSolution out;
  out.qp_status = sol.status;
  out.degraded = !sol.optimal();
  out.kkt_residual = sol.kkt_residual;
  out.qp_iterations = sol.iterations;
  out.h_at_x = h_at_x;

  const Vector u = sol.primal.segment(1, n);
  const Vector violation = (inst.box.lb() - u).cwiseMax(u - inst.box.ub());
  if (violation.maxCoeff() > 1e-9)
    throw SubproblemError("subproblem solution leaves the box by " + std::to_string(violation.maxCoeff()));
  out.p = inst.box.clamp(u);
  out.d = out.p - x;

  // Re-derive tau from the epigraph rows at the clamped point so that theta is
  // the objective of a feasible (tau, u, w).
  out.support_duals.resize(static_cast<std::size_t>(inst.m));
  double tau = -kInf;
  for (Index j = 0; j < inst.m; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    double row = grads[uj].dot(out.d) - h_at_x(j);
    const Index off = lay.w_offset[uj];
    if (off >= 0) {
      out.support_duals[uj] = sol.primal.segment(off, lay.w_size[uj]).cwiseMax(0.0);
      row += inst.nonsmooth[uj].support->b().dot(out.support_duals[uj]);
    }
    tau = std::max(tau, row);
  }
  out.tau = tau;
  out.theta = tau + out.d.squaredNorm() / (2.0 * alpha);
  out.epigraph_duals = sol.dual_ineq.head(inst.m);
  return out;
}

inline SubproblemSolution solve_proximal(const ProblemInstance& inst, const Vector& x, double alpha,
                                         EvalCounters& counters) {
  require(inst.box.contains(x), "solve_proximal: x must lie in the box");
  const std::vector<Vector> grads = eval_grads(inst, x, counters);
  const Vector h = eval_h_all(inst, x, counters);
  return solve_proximal(inst, x, alpha, grads, h, counters);
}

}  // namespace moprox
