#pragma once

#include "moprox/convexprog/simplex.hpp"
#include "moprox/convexprog/solution.hpp"

#include <optional>
#include <utility>

namespace moprox {

namespace detail {

inline ProgramSolution support_lp(const Matrix& A, const Vector& b, const Vector& c) {
  ProgramSolution sol;
  const SimplexOutcome out = DualSimplex(A, b, c).solve();
  sol.status = out.status;
  sol.iterations = out.pivots;
  if (out.status != ProgramStatus::optimal) return sol;

  sol.primal = out.z;
  sol.dual_ineq = out.w;
  sol.dual_eq = Vector(0);
  sol.objective_value = c.dot(out.z);

  const double scale = 1.0 + std::max({inf_norm(A), inf_norm(b), inf_norm(c)});
  const Vector slack = b - A * out.z;
  KktResiduals r;
  r.stationarity = inf_norm(Vector(A.transpose() * out.w - c)) / scale;
  r.primal_feasibility = std::max(0.0, -(slack.size() ? slack.minCoeff() : 0.0)) / scale;
  r.dual_feasibility = std::max(0.0, -(out.w.size() ? out.w.minCoeff() : 0.0)) / scale;
  r.complementarity = inf_norm(Vector(out.w.cwiseProduct(slack))) / scale;
  sol.residuals = r;
  sol.kkt_residual = r.max();
  return sol;
}

}  // namespace detail

/// The bounded polyhedron {z : Az <= b}. The structured variant
/// {z : -delta e <= Bz <= delta e} keeps B and delta so callers can use the
/// closed form of its support function.
class PolyhedralSet {
 public:
  struct Structure {
    Matrix B;
    double delta = 0.0;
  };

  /// Validates nonemptiness and boundedness by maximizing +-z_i over the set.
  static PolyhedralSet general(Matrix A, Vector b) {
    require(A.rows() == b.size(), "PolyhedralSet: A rows must match b");
    require(A.cols() > 0, "PolyhedralSet: dimension must be positive");
    for (Index i = 0; i < A.cols(); ++i) {
      for (const double s : {1.0, -1.0}) {
        const ProgramSolution sol = detail::support_lp(A, b, s * Vector::Unit(A.cols(), i));
        if (sol.status == ProgramStatus::infeasible) throw InvalidUncertaintySet("uncertainty set is empty");
        if (sol.status != ProgramStatus::optimal) throw InvalidUncertaintySet("uncertainty set is unbounded");
      }
    }
    return PolyhedralSet(std::move(A), std::move(b), std::nullopt);
  }

  /// A nonsingular B and delta > 0 make the set a bounded neighbourhood of 0.
  static PolyhedralSet structured(Matrix B, double delta) {
    require(B.rows() == B.cols() && B.rows() > 0, "PolyhedralSet: B must be square");
    require(delta > 0.0 && std::isfinite(delta), "PolyhedralSet: delta must be positive");
    if (B.fullPivLu().rank() < B.rows()) throw InvalidUncertaintySet("uncertainty matrix B is singular");
    const Index n = B.rows();
    Matrix A(2 * n, n);
    A << B, -B;
    Vector b = Vector::Constant(2 * n, delta);
    return PolyhedralSet(std::move(A), std::move(b), Structure{std::move(B), delta});
  }

  [[nodiscard]] const Matrix& A() const { return A_; }
  [[nodiscard]] const Vector& b() const { return b_; }
  [[nodiscard]] Index dim() const { return A_.cols(); }
  [[nodiscard]] Index rows() const { return A_.rows(); }
  [[nodiscard]] const std::optional<Structure>& structure() const { return structure_; }

 private:
  PolyhedralSet(Matrix A, Vector b, std::optional<Structure> s)
      : A_(std::move(A)), b_(std::move(b)), structure_(std::move(s)) {}

  Matrix A_;
  Vector b_;
  std::optional<Structure> structure_;
};

/// max c'z subject to z in the constraint set.
struct LpProblem {
  Vector objective;
  const PolyhedralSet& set;
};

/// Solves the support LP through its standard-form dual with the simplex method.
/// The returned primal is the maximizer z*, dual_ineq the optimal w >= 0 with
/// A'w = c, and objective_value = c'z* (= b'w* by strong duality).
inline ProgramSolution solve_lp(const LpProblem& p) {
  require(p.objective.size() == p.set.dim(), "solve_lp: objective dimension mismatch");
  return detail::support_lp(p.set.A(), p.set.b(), p.objective);
}

}  // namespace moprox
