#pragma once

#include "moprox/convexprog/solution.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace moprox::detail {

struct SimplexOutcome {
  ProgramStatus status = ProgramStatus::max_iterations;
  Vector z;  // maximizer of c'z over {z : Az <= b}
  Vector w;  // minimizer of b'w over {w >= 0 : A'w = c}
  int pivots = 0;
};

/// Dense two-phase primal simplex on the standard form
///
///     min b'w   s.t.  A'w = c,  w >= 0,
///
/// which is the dual of the support problem max { c'z : Az <= b }. The simplex
/// multipliers of the optimal basis are the support maximizer z. Status is
/// reported from the point of view of the support problem: an infeasible
/// standard form means the support problem is unbounded and vice versa.
class DualSimplex {
 public:
  DualSimplex(const Matrix& A, const Vector& b, const Vector& c)
      : A_(A), b_(b), c_(c), d_(A.rows()), n_(A.cols()) {
    sign_ = Vector::Ones(n_);
    for (Index i = 0; i < n_; ++i)
      if (c_(i) < 0) sign_(i) = -1.0;
    // Flipped system [S A' | I] with nonnegative right-hand side.
    columns_.resize(n_, d_ + n_);
    columns_.leftCols(d_) = sign_.asDiagonal() * A_.transpose();
    columns_.rightCols(n_).setIdentity();
    rhs_ = sign_.cwiseProduct(c_);
    basis_.resize(static_cast<std::size_t>(n_));
    is_basic_.assign(static_cast<std::size_t>(d_ + n_), false);
    for (Index i = 0; i < n_; ++i) {
      basis_[static_cast<std::size_t>(i)] = d_ + i;
      is_basic_[static_cast<std::size_t>(d_ + i)] = true;
    }
    allowed_.assign(static_cast<std::size_t>(d_ + n_), true);
    skip_.assign(static_cast<std::size_t>(d_ + n_), false);
    tableau_ = columns_;
    beta_ = rhs_;
    pivot_cap_ = 50 * static_cast<int>(d_ + n_) + 1000;
  }

  SimplexOutcome solve() {
    SimplexOutcome out;
    // Phase 1: minimize the sum of artificials.
    Vector cost = Vector::Zero(d_ + n_);
    cost.tail(n_).setOnes();
    const ProgramStatus p1 = iterate(cost, true);
    out.pivots = pivots_;
    if (p1 == ProgramStatus::max_iterations) return out;
    reinvert();
    const double infeasibility = basic_cost(cost).dot(beta_);
    if (infeasibility > 1e-9 * (1.0 + inf_norm(c_))) {
      out.status = ProgramStatus::unbounded;
      return out;
    }
    drive_out_artificials();

    // Phase 2: original costs, artificials may not re-enter.
    cost.head(d_) = b_;
    cost.tail(n_).setZero();
    for (Index j = d_; j < d_ + n_; ++j) allowed_[static_cast<std::size_t>(j)] = false;
    const ProgramStatus p2 = iterate(cost, false);
    out.pivots = pivots_;
    if (p2 != ProgramStatus::optimal) {
      // An unbounded standard form means the support problem is infeasible.
      out.status = p2 == ProgramStatus::unbounded ? ProgramStatus::infeasible : p2;
      return out;
    }
    reinvert();

    out.w = Vector::Zero(d_);
    for (Index i = 0; i < n_; ++i) {
      const Index j = basis_[static_cast<std::size_t>(i)];
      if (j < d_) out.w(j) = std::max(beta_(i), 0.0);
    }
    out.z = sign_.cwiseProduct(multipliers(cost));
    out.status = ProgramStatus::optimal;
    return out;
  }

 private:
  [[nodiscard]] Vector basic_cost(const Vector& cost) const {
    Vector cb(n_);
    for (Index i = 0; i < n_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
    return cb;
  }

  [[nodiscard]] Matrix basis_matrix() const {
    Matrix B(n_, n_);
    for (Index i = 0; i < n_; ++i) B.col(i) = columns_.col(basis_[static_cast<std::size_t>(i)]);
    return B;
  }

  [[nodiscard]] Vector multipliers(const Vector& cost) const {
    if (n_ == 0) return Vector(0);
    return basis_matrix().transpose().partialPivLu().solve(basic_cost(cost));
  }

  void reinvert() {
    if (n_ == 0) return;
    const auto lu = basis_matrix().partialPivLu();
    tableau_ = lu.solve(columns_);
    beta_ = lu.solve(rhs_);
  }

  void pivot(Index row, Index col) {
    const double p = tableau_(row, col);
    tableau_.row(row) /= p;
    beta_(row) /= p;
    Vector f = tableau_.col(col);
    f(row) = 0.0;
    const Eigen::RowVectorXd pivot_row = tableau_.row(row);
    tableau_.noalias() -= f * pivot_row;
    beta_ -= f * beta_(row);
    tableau_.col(col).setZero();
    tableau_(row, col) = 1.0;
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(row)])] = false;
    is_basic_[static_cast<std::size_t>(col)] = true;
    basis_[static_cast<std::size_t>(row)] = col;
    ++pivots_;
    if (pivots_ % 50 == 0) reinvert();
  }

  // Dantzig pricing: most negative reduced cost.
  [[nodiscard]] Index entering(const Vector& reduced, double tol) const {
    Index pick = -1;
    for (Index j = 0; j < d_ + n_; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (is_basic_[uj] || !allowed_[uj] || skip_[uj] || reduced(j) >= -tol) continue;
      if (pick < 0 || reduced(j) < reduced(pick)) pick = j;
    }
    return pick;
  }

  // Ratio test with lexicographic tie-breaking. The artificial block of the
  // tableau holds the basis inverse, so ties are resolved on the rows of
  // B^-1 / a_i; this rule cannot cycle whatever the pricing.
  [[nodiscard]] Index leaving(Index col, double best) const {
    std::vector<Index> tied;
    const double cutoff = best + 1e-12 * (1.0 + best);
    for (Index i = 0; i < n_; ++i) {
      const double a = tableau_(i, col);
      if (a > kPivotTol && std::max(beta_(i), 0.0) / a <= cutoff) tied.push_back(i);
    }
    for (Index k = 0; k < n_ && tied.size() > 1; ++k) {
      double lo = kInf;
      for (const Index i : tied) lo = std::min(lo, tableau_(i, d_ + k) / tableau_(i, col));
      const double keep = lo + 1e-12 * (1.0 + std::abs(lo));
      std::erase_if(tied, [&](Index i) { return tableau_(i, d_ + k) / tableau_(i, col) > keep; });
    }
    return tied.front();
  }

  ProgramStatus iterate(const Vector& cost, bool phase_one) {
    std::fill(skip_.begin(), skip_.end(), false);
    const double tol = 1e-11 * (1.0 + inf_norm(cost));
    bool fresh = false;
    while (true) {
      const Vector cb = basic_cost(cost);
      if (phase_one && cb.dot(beta_.cwiseMax(0.0)) <= 1e-12 * (1.0 + inf_norm(rhs_))) return ProgramStatus::optimal;
      const Vector reduced = cost.transpose() - cb.transpose() * tableau_;
      const Index col = entering(reduced, tol);
      // Optimality and unboundedness are only trusted on a freshly
      // factorized tableau; the updated one drifts.
      if (col < 0) {
        if (fresh) return ProgramStatus::optimal;
        reinvert();
        fresh = true;
        continue;
      }
      double best = kInf;
      for (Index i = 0; i < n_; ++i) {
        const double a = tableau_(i, col);
        if (a > kPivotTol) best = std::min(best, std::max(beta_(i), 0.0) / a);
      }
      if (best == kInf) {
        if (!fresh) {
          reinvert();
          fresh = true;
          continue;
        }
        // A barely negative reduced cost over a column with no positive
        // pivot is rounding noise; skip the column until the next pivot.
        const double noise = 1e-8 * (1.0 + inf_norm(cost)) * (1.0 + inf_norm(Vector(tableau_.col(col))));
        if (phase_one || reduced(col) > -noise) {
          skip_[static_cast<std::size_t>(col)] = true;
          continue;
        }
        return ProgramStatus::unbounded;
      }
      if (pivots_ >= pivot_cap_) return ProgramStatus::max_iterations;
      pivot(leaving(col, best), col);
      fresh = false;
      std::fill(skip_.begin(), skip_.end(), false);
    }
  }

  void drive_out_artificials() {
    for (Index i = 0; i < n_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < d_) continue;
      Index col = -1;
      double biggest = 1e-9;
      for (Index j = 0; j < d_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        if (std::abs(tableau_(i, j)) > biggest) {
          biggest = std::abs(tableau_(i, j));
          col = j;
        }
      }
      // No candidate: the row is redundant and its artificial stays at zero.
      if (col >= 0) pivot(i, col);
    }
  }

  const Matrix& A_;
  const Vector& b_;
  const Vector& c_;
  Index d_;
  Index n_;
  Vector sign_;
  Matrix columns_;
  Vector rhs_;
  Matrix tableau_;
  Vector beta_;
  std::vector<Index> basis_;
  std::vector<bool> is_basic_;
  std::vector<bool> allowed_;
  std::vector<bool> skip_;
  int pivots_ = 0;
  int pivot_cap_ = 0;
  static constexpr double kPivotTol = 1e-10;
};

}  // namespace moprox::detail
