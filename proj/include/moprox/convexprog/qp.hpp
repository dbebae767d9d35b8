#pragma once

#include "moprox/convexprog/solution.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

namespace moprox {

/// min 1/2 v'Pv + q'v + constant  s.t.  Cv <= c,  Ev = e.
struct QpProblem {
  Matrix P;
  Vector q;
  double constant = 0.0;
  Matrix C;
  Vector c;
  Matrix E;
  Vector e;

  [[nodiscard]] Index num_vars() const { return q.size(); }

  void validate() const {
    const Index n = q.size();
    require(P.rows() == n && P.cols() == n, "QpProblem: P must be n x n");
    require(C.cols() == n && C.rows() == c.size(), "QpProblem: inequality block dimensions");
    require(E.cols() == n && E.rows() == e.size(), "QpProblem: equality block dimensions");
    require(inf_norm(Matrix(P - P.transpose())) <= 1e-12 * (1.0 + inf_norm(P)), "QpProblem: P must be symmetric");
  }

  [[nodiscard]] double objective(const Vector& v) const { return 0.5 * v.dot(P * v) + q.dot(v) + constant; }

  [[nodiscard]] double data_scale() const {
    return 1.0 + std::max({inf_norm(P), inf_norm(q), inf_norm(C), inf_norm(c), inf_norm(E), inf_norm(e)});
  }
};

struct QpOptions {
  // Iterations stop once the scaled KKT residual reaches this level or stalls.
  double tolerance = 1e-14;
  // Largest scaled KKT residual reported as optimal.
  double acceptable = 1e-8;
  int max_iterations = 120;
  double regularization = 1e-10;
};

inline KktResiduals qp_residuals(const QpProblem& p, const Vector& v, const Vector& z, const Vector& y) {
  const double scale = p.data_scale();
  KktResiduals r;
  const Vector slack = p.c - p.C * v;
  r.stationarity = inf_norm(Vector(p.P * v + p.q + p.C.transpose() * z + p.E.transpose() * y)) / scale;
  r.primal_feasibility =
      std::max(slack.size() ? std::max(0.0, -slack.minCoeff()) : 0.0, inf_norm(Vector(p.E * v - p.e))) / scale;
  r.dual_feasibility = (z.size() ? std::max(0.0, -z.minCoeff()) : 0.0) / scale;
  r.complementarity = inf_norm(Vector(z.cwiseProduct(slack))) / scale;
  return r;
}

namespace detail {

/// Mehrotra predictor-corrector interior point method on dense data.
///
/// Inequality rows with a single nonzero are folded into the Hessian diagonal.
/// Variables whose Hessian row is diagonal are eliminated, so the factorized
/// matrix only couples the remaining variables with the general inequality
/// rows and the equality rows.
class QpInteriorPoint {
 public:
  QpInteriorPoint(const QpProblem& p, const QpOptions& opt) : p_(p), opt_(opt) {
    n_ = p.num_vars();
    mi_ = p.C.rows();
    me_ = p.E.rows();
    scale_ = p.data_scale();
    P_ = p.P.sparseView();
    C_ = p.C.sparseView();
    E_ = p.E.sparseView();
    classify();
  }

  ProgramSolution solve() {
    ProgramSolution out;
    out.regularization = opt_.regularization;

    Vector v = Vector::Zero(n_);
    Vector s = (p_.c - p_.C * v).cwiseMax(1.0);
    Vector z = Vector::Ones(mi_);
    Vector y = Vector::Zero(me_);
    initial_point(v, s, z, y);

    Vector best_v = v, best_z = z, best_y = y;
    KktResiduals best_r = residuals(v, z, y);
    int since_improvement = 0;
    int iter = 0;

    for (; iter < opt_.max_iterations; ++iter) {
      if (best_r.max() <= opt_.tolerance) break;
      if (since_improvement >= 6 && best_r.max() <= opt_.acceptable) break;

      const Vector r_d = P_ * v + p_.q + C_.transpose() * z + E_.transpose() * y;
      const Vector r_in = C_ * v + s - p_.c;
      const Vector r_eq = E_ * v - p_.e;
      const double mu = mi_ > 0 ? s.dot(z) / static_cast<double>(mi_) : 0.0;

      factorize(s, z);

      // Predictor.
      Vector r_c = s.cwiseProduct(z);
      Vector dv, ds, dz, dy;
      direction(r_d, r_in, r_eq, r_c, s, z, dv, ds, dz, dy);
      const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
      double sigma = 0.0;
      if (mi_ > 0 && mu > 0) {
        const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(mi_);
        sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      }

      // Corrector.
      r_c = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vector::Constant(mi_, sigma * mu);
      direction(r_d, r_in, r_eq, r_c, s, z, dv, ds, dz, dy);
      const double eta = std::max(0.995, 1.0 - mu);
      const double a = std::min(1.0, eta * std::min(max_step(s, ds), max_step(z, dz)));

      v += a * dv;
      s += a * ds;
      z += a * dz;
      y += a * dy;
      s = s.cwiseMax(1e-300);
      z = z.cwiseMax(1e-300);

      const KktResiduals r = residuals(v, z, y);
      if (r.max() < best_r.max()) {
        since_improvement = r.max() < 0.5 * best_r.max() ? 0 : since_improvement + 1;
        best_r = r;
        best_v = v;
        best_z = z;
        best_y = y;
      } else {
        ++since_improvement;
      }
      if (!v.allFinite() || !z.allFinite() || !y.allFinite()) break;
    }

    polish(best_v, best_z, best_y, best_r);

    out.iterations = iter;
    out.primal = best_v;
    out.dual_ineq = best_z;
    out.dual_eq = best_y;
    out.residuals = best_r;
    out.kkt_residual = best_r.max();
    out.objective_value = p_.objective(best_v);
    out.status = out.kkt_residual <= opt_.acceptable ? ProgramStatus::optimal : ProgramStatus::max_iterations;
    return out;
  }

 private:
  // Fixes the constraints the interior iterate identifies as active and solves
  // the equality-constrained QP that remains. Kept only when the KKT residual
  // does not get worse, which removes the square-root error interior points
  // leave on weakly active constraints.
  void polish(Vector& v, Vector& z, Vector& y, KktResiduals& r) const {
    const Vector slack = p_.c - p_.C * v;
    std::vector<Index> fixed_row(static_cast<std::size_t>(n_), -1);
    std::vector<Index> active_general;
    for (Index k = 0; k < mi_; ++k) {
      if (z(k) <= slack(k)) continue;
      const Index i = bound_var_[static_cast<std::size_t>(k)];
      if (i < 0) {
        active_general.push_back(k);
        continue;
      }
      auto& slot = fixed_row[static_cast<std::size_t>(i)];
      if (slot < 0 || z(k) > z(slot)) slot = k;
    }
    Vector fixed_value = Vector::Zero(n_);
    std::vector<Index> elim, kept;
    for (Index i = 0; i < n_; ++i) {
      const Index k = fixed_row[static_cast<std::size_t>(i)];
      if (k >= 0) {
        fixed_value(i) = p_.c(k) / bound_coef_[static_cast<std::size_t>(k)];
        continue;
      }
      const bool eliminable = std::find(elim_.begin(), elim_.end(), i) != elim_.end() && p_.P(i, i) > 0.0;
      (eliminable ? elim : kept).push_back(i);
    }

    const auto na = static_cast<Index>(active_general.size());
    const Index nl = na + me_;
    Matrix M(nl, n_);
    Vector rhs_l(nl);
    for (Index r = 0; r < na; ++r) {
      M.row(r) = p_.C.row(active_general[static_cast<std::size_t>(r)]);
      rhs_l(r) = p_.c(active_general[static_cast<std::size_t>(r)]);
    }
    if (me_ > 0) {
      M.bottomRows(me_) = p_.E;
      rhs_l.tail(me_) = p_.e;
    }
    rhs_l -= M * fixed_value;
    const Vector rhs_v = -(p_.q + p_.P * fixed_value);

    const auto nk = static_cast<Index>(kept.size());
    const Matrix Mk = M(Eigen::all, kept);
    const Matrix Me = M(Eigen::all, elim);
    Vector he(static_cast<Index>(elim.size()));
    for (Index t = 0; t < he.size(); ++t) he(t) = p_.P(elim[static_cast<std::size_t>(t)], elim[static_cast<std::size_t>(t)]);

    Matrix R = Matrix::Zero(nk + nl, nk + nl);
    R.topLeftCorner(nk, nk) = p_.P(kept, kept);
    R.topLeftCorner(nk, nk).diagonal().array() += opt_.regularization;
    R.topRightCorner(nk, nl) = Mk.transpose();
    R.bottomLeftCorner(nl, nk) = Mk;
    R.bottomRightCorner(nl, nl) = -(Me * he.cwiseInverse().asDiagonal() * Me.transpose());
    R.bottomRightCorner(nl, nl).diagonal().array() -= opt_.regularization;
    Eigen::PartialPivLU<Matrix> lu;
    if (R.size() > 0) lu.compute(R);

    auto solve = [&](const Vector& bv, const Vector& bl, Vector& xv, Vector& xl) {
      const Vector t = bv(elim).cwiseQuotient(he);
      Vector rhs(nk + nl);
      rhs.head(nk) = bv(kept);
      rhs.tail(nl) = bl - Me * t;
      const Vector sol = rhs.size() > 0 ? Vector(lu.solve(rhs)) : Vector(0);
      xl = sol.tail(nl);
      xv = Vector::Zero(n_);
      xv(kept) = sol.head(nk);
      xv(elim) = (bv(elim) - Me.transpose() * xl).cwiseQuotient(he);
    };
    // Free-variable rows of the stationarity condition and the active rows.
    auto apply = [&](const Vector& xv, const Vector& xl, Vector& ov, Vector& ol) {
      ov = p_.P * xv + M.transpose() * xl;
      for (Index i = 0; i < n_; ++i)
        if (fixed_row[static_cast<std::size_t>(i)] >= 0) ov(i) = 0.0;
      ol = M * xv;
    };
    Vector bv = rhs_v;
    for (Index i = 0; i < n_; ++i)
      if (fixed_row[static_cast<std::size_t>(i)] >= 0) bv(i) = 0.0;
    Vector xv, xl;
    solve(bv, rhs_l, xv, xl);
    for (int round = 0; round < 3; ++round) {
      Vector ov, ol, cv, cl;
      apply(xv, xl, ov, ol);
      solve(bv - ov, rhs_l - ol, cv, cl);
      xv += cv;
      xl += cl;
    }

    Vector pv = xv + fixed_value;
    Vector pz = Vector::Zero(mi_);
    for (Index r = 0; r < na; ++r) pz(active_general[static_cast<std::size_t>(r)]) = xl(r);
    Vector py = me_ > 0 ? Vector(xl.tail(me_)) : Vector(0);
    const Vector grad = p_.P * pv + p_.q + p_.C.transpose() * pz + p_.E.transpose() * py;
    for (Index i = 0; i < n_; ++i) {
      const Index k = fixed_row[static_cast<std::size_t>(i)];
      if (k >= 0) pz(k) = -grad(i) / bound_coef_[static_cast<std::size_t>(k)];
    }
    if (!pv.allFinite() || !pz.allFinite() || !py.allFinite()) return;
    const KktResiduals pr = qp_residuals(p_, pv, pz, py);
    if (pr.max() <= std::max(r.max(), 1e-12)) {
      v = pv;
      z = pz;
      y = py;
      r = pr;
    }
  }

  // One affine-scaling step from the trivial point, after which slacks and
  // multipliers are lifted to at least 1 in magnitude.
  void initial_point(Vector& v, Vector& s, Vector& z, Vector& y) {
    if (mi_ == 0) return;
    factorize(s, z);
    const Vector r_d = P_ * v + p_.q + C_.transpose() * z + E_.transpose() * y;
    const Vector r_in = C_ * v + s - p_.c;
    const Vector r_eq = E_ * v - p_.e;
    Vector dv, ds, dz, dy;
    direction(r_d, r_in, r_eq, s.cwiseProduct(z), s, z, dv, ds, dz, dy);
    if (!dv.allFinite() || !ds.allFinite() || !dz.allFinite()) return;
    v += dv;
    y += dy;
    s = (s + ds).cwiseAbs().cwiseMax(1.0);
    z = (z + dz).cwiseAbs().cwiseMax(1.0);
  }

  [[nodiscard]] KktResiduals residuals(const Vector& v, const Vector& z, const Vector& y) const {
    KktResiduals r;
    const Vector slack = p_.c - C_ * v;
    r.stationarity = inf_norm(Vector(P_ * v + p_.q + C_.transpose() * z + E_.transpose() * y)) / scale_;
    r.primal_feasibility =
        std::max(slack.size() ? std::max(0.0, -slack.minCoeff()) : 0.0, inf_norm(Vector(E_ * v - p_.e))) / scale_;
    r.dual_feasibility = (z.size() ? std::max(0.0, -z.minCoeff()) : 0.0) / scale_;
    r.complementarity = inf_norm(Vector(z.cwiseProduct(slack))) / scale_;
    return r;
  }

  void classify() {
    bound_var_.assign(static_cast<std::size_t>(mi_), -1);
    bound_coef_.assign(static_cast<std::size_t>(mi_), 0.0);
    std::vector<bool> has_bound(static_cast<std::size_t>(n_), false);
    for (Index k = 0; k < mi_; ++k) {
      Index nnz = 0, idx = -1;
      for (Index i = 0; i < n_; ++i) {
        if (p_.C(k, i) != 0.0) {
          ++nnz;
          idx = i;
        }
      }
      if (nnz == 1) {
        bound_var_[static_cast<std::size_t>(k)] = idx;
        bound_coef_[static_cast<std::size_t>(k)] = p_.C(k, idx);
        has_bound[static_cast<std::size_t>(idx)] = true;
      } else {
        general_.push_back(k);
      }
    }
    for (Index i = 0; i < n_; ++i) {
      bool diagonal = true;
      for (Index j = 0; j < n_ && diagonal; ++j)
        if (j != i && p_.P(i, j) != 0.0) diagonal = false;
      if (diagonal && (has_bound[static_cast<std::size_t>(i)] || p_.P(i, i) > 0.0))
        elim_.push_back(i);
      else
        kept_.push_back(i);
    }
    ng_ = static_cast<Index>(general_.size());
    nl_ = ng_ + me_;
    M_.resize(nl_, n_);
    for (Index r = 0; r < ng_; ++r) M_.row(r) = p_.C.row(general_[static_cast<std::size_t>(r)]);
    if (me_ > 0) M_.bottomRows(me_) = p_.E;
    M_kept_ = M_(Eigen::all, kept_);
    M_elim_ = M_(Eigen::all, elim_);
    Ms_ = M_.sparseView();
    Ms_elim_ = M_elim_.sparseView();

    // Eliminated columns sharing a row pattern form one dense Schur block.
    std::map<std::vector<Index>, std::size_t> pattern_index;
    for (Index t = 0; t < M_elim_.cols(); ++t) {
      std::vector<Index> pattern;
      for (Index r = 0; r < nl_; ++r)
        if (M_elim_(r, t) != 0.0) pattern.push_back(r);
      if (pattern.empty()) continue;
      auto [it, inserted] = pattern_index.try_emplace(pattern, schur_groups_.size());
      if (inserted) schur_groups_.push_back({pattern, {}});
      schur_groups_[it->second].cols.push_back(t);
    }
  }

  void factorize(const Vector& s, const Vector& z) {
    bound_diag_ = Vector::Zero(n_);
    for (Index k = 0; k < mi_; ++k) {
      const Index i = bound_var_[static_cast<std::size_t>(k)];
      if (i < 0) continue;
      const double a = bound_coef_[static_cast<std::size_t>(k)];
      bound_diag_(i) += a * a * z(k) / s(k);
    }
    d_lambda_ = Vector::Zero(nl_);
    for (Index r = 0; r < ng_; ++r) {
      const Index k = general_[static_cast<std::size_t>(r)];
      d_lambda_(r) = -s(k) / z(k);
    }

    const auto nk = static_cast<Index>(kept_.size());
    h_elim_.resize(static_cast<Index>(elim_.size()));
    for (Index t = 0; t < h_elim_.size(); ++t) {
      const Index i = elim_[static_cast<std::size_t>(t)];
      h_elim_(t) = p_.P(i, i) + bound_diag_(i) + opt_.regularization;
    }

    Matrix R = Matrix::Zero(nk + nl_, nk + nl_);
    if (nk > 0) {
      R.topLeftCorner(nk, nk) = p_.P(kept_, kept_);
      for (Index t = 0; t < nk; ++t)
        R(t, t) += bound_diag_(kept_[static_cast<std::size_t>(t)]) + opt_.regularization;
      R.topRightCorner(nk, nl_) = M_kept_.transpose();
      R.bottomLeftCorner(nl_, nk) = M_kept_;
    }
    if (nl_ > 0) {
      Vector dl = d_lambda_;
      dl.tail(me_).setConstant(-opt_.regularization);
      const Vector inv_sqrt = h_elim_.cwiseSqrt().cwiseInverse();
      for (const auto& g : schur_groups_) {
        const Matrix block = M_elim_(g.rows, g.cols) * inv_sqrt(g.cols).asDiagonal();
        Matrix outer = Matrix::Zero(block.rows(), block.rows());
        outer.selfadjointView<Eigen::Lower>().rankUpdate(block, -1.0);
        const Matrix full = outer.selfadjointView<Eigen::Lower>();
        for (std::size_t a = 0; a < g.rows.size(); ++a)
          for (std::size_t b = 0; b < g.rows.size(); ++b)
            R(nk + g.rows[a], nk + g.rows[b]) += full(static_cast<Index>(a), static_cast<Index>(b));
      }
      R.bottomRightCorner(nl_, nl_).diagonal() += dl;
    }
    if (R.size() > 0) lu_.compute(R);
  }

  // Solves the reduced Newton system (unregularized) with iterative refinement.
  void reduced_solve(const Vector& rhs_v, const Vector& rhs_l, Vector& dv, Vector& dl) const {
    dv = Vector::Zero(n_);
    dl = Vector::Zero(nl_);
    Vector res_v = rhs_v, res_l = rhs_l;
    for (int round = 0; round < 3; ++round) {
      Vector cv, cl;
      regularized_solve(res_v, res_l, cv, cl);
      dv += cv;
      dl += cl;
      res_v = rhs_v - (P_ * dv + bound_diag_.cwiseProduct(dv) + Ms_.transpose() * dl);
      res_l = rhs_l - (Ms_ * dv + d_lambda_.cwiseProduct(dl));
      const double scale = 1.0 + std::max(inf_norm(rhs_v), inf_norm(rhs_l));
      if (std::max(inf_norm(res_v), inf_norm(res_l)) <= 1e-15 * scale) break;
    }
  }

  void regularized_solve(const Vector& rhs_v, const Vector& rhs_l, Vector& dv, Vector& dl) const {
    const auto nk = static_cast<Index>(kept_.size());
    const Vector r_elim = rhs_v(elim_);
    const Vector t = r_elim.cwiseQuotient(h_elim_);
    Vector rhs(nk + nl_);
    rhs.head(nk) = rhs_v(kept_);
    rhs.tail(nl_) = rhs_l - Ms_elim_ * t;
    const Vector sol = rhs.size() > 0 ? Vector(lu_.solve(rhs)) : Vector(0);
    dl = sol.tail(nl_);
    dv.resize(n_);
    dv(kept_) = sol.head(nk);
    dv(elim_) = (r_elim - Ms_elim_.transpose() * dl).cwiseQuotient(h_elim_);
  }

  void direction(const Vector& r_d, const Vector& r_in, const Vector& r_eq, const Vector& r_c, const Vector& s,
                 const Vector& z, Vector& dv, Vector& ds, Vector& dz, Vector& dy) const {
    Vector rhs_v = -r_d;
    for (Index k = 0; k < mi_; ++k) {
      const Index i = bound_var_[static_cast<std::size_t>(k)];
      if (i < 0) continue;
      rhs_v(i) -= bound_coef_[static_cast<std::size_t>(k)] * (z(k) * r_in(k) - r_c(k)) / s(k);
    }
    Vector rhs_l(nl_);
    for (Index r = 0; r < ng_; ++r) {
      const Index k = general_[static_cast<std::size_t>(r)];
      rhs_l(r) = -r_in(k) + r_c(k) / z(k);
    }
    if (me_ > 0) rhs_l.tail(me_) = -r_eq;

    Vector dl;
    reduced_solve(rhs_v, rhs_l, dv, dl);
    ds = -r_in - C_ * dv;
    dz = -(r_c + z.cwiseProduct(ds)).cwiseQuotient(s);
    for (Index r = 0; r < ng_; ++r) dz(general_[static_cast<std::size_t>(r)]) = dl(r);
    dy = dl.tail(me_);
  }

  static double max_step(const Vector& x, const Vector& dx) {
    double a = 1.0;
    for (Index i = 0; i < x.size(); ++i)
      if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
    return a;
  }

  const QpProblem& p_;
  QpOptions opt_;
  Index n_ = 0, mi_ = 0, me_ = 0, ng_ = 0, nl_ = 0;
  std::vector<Index> bound_var_;
  std::vector<double> bound_coef_;
  std::vector<Index> general_;
  std::vector<Index> kept_;
  std::vector<Index> elim_;
  struct SchurGroup {
    std::vector<Index> rows;
    std::vector<Index> cols;
  };
  std::vector<SchurGroup> schur_groups_;
  Matrix M_, M_kept_, M_elim_;
  // Sparse copies for the matrix-vector products of the iteration.
  Eigen::SparseMatrix<double> P_, C_, E_, Ms_, Ms_elim_;
  double scale_ = 1.0;
  Vector bound_diag_, d_lambda_, h_elim_;
  Eigen::PartialPivLU<Matrix> lu_;
};

}  // namespace detail

/// Dense primal-dual interior point solve of a convex QP. The reported
/// kkt_residual is recomputed from the returned iterate, not taken from the
/// internal slack variables.
inline ProgramSolution solve_qp(const QpProblem& p, const QpOptions& options = {}) {
  p.validate();
  return detail::QpInteriorPoint(p, options).solve();
}

}  // namespace moprox
