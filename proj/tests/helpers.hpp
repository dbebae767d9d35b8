#pragma once

#include "moprox/problems.hpp"
#include "moprox/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace moprox::testing {

/// delta |B^{-T} x|_1, the support function of {z : -delta e <= Bz <= delta e}
/// in closed form. Uses an LU solve and nothing from the simplex code.
inline double structured_support(const Matrix& B, double delta, const Vector& x) {
  return delta * B.transpose().partialPivLu().solve(x).lpNorm<1>();
}

inline Vector vec(std::initializer_list<double> v) { return detail::vec(v); }

inline ProblemInstance instance(std::string name, const BoxDomain& box, std::vector<SmoothPart> smooth) {
  ProblemInstance inst;
  inst.name = std::move(name);
  inst.n = box.dim();
  inst.m = static_cast<Index>(smooth.size());
  inst.box = box;
  inst.smooth = std::move(smooth);
  inst.nonsmooth.assign(static_cast<std::size_t>(inst.m), NonsmoothPart{box, std::nullopt});
  inst.validate();
  return inst;
}

/// G(x) = 1/2 x^2 on [-10, 10].
inline ProblemInstance half_square() {
  return instance("half-square", BoxDomain(vec({-10}), vec({10})),
                  {make_quadratic(Matrix::Identity(1, 1), Vector::Zero(1))});
}

/// G_1(x) = x, G_2(x) = -x on [-1, 1]; every point is weakly Pareto.
inline ProblemInstance opposite_lines() {
  return instance("opposite-lines", BoxDomain(vec({-1}), vec({1})),
                  {make_quadratic(Matrix::Zero(1, 1), vec({1})), make_quadratic(Matrix::Zero(1, 1), vec({-1}))});
}

inline Matrix random_matrix(Rng& rng, Index r, Index c, double lo = -1.0, double hi = 1.0) {
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = rng.uniform(lo, hi);
  return M;
}

inline Vector random_vector(Rng& rng, Index n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

/// Bounded polytope containing 0 in its interior: a box plus random cuts.
inline PolyhedralSet random_polytope(Rng& rng, Index n) {
  const Index cuts = 1 + static_cast<Index>(rng.uniform() * 4.0);
  Matrix A(2 * n + cuts, n);
  Vector b(2 * n + cuts);
  A.topRows(n).setIdentity();
  A.middleRows(n, n) = -Matrix::Identity(n, n);
  for (Index i = 0; i < 2 * n; ++i) b(i) = rng.uniform(0.5, 2.0);
  A.bottomRows(cuts) = random_matrix(rng, cuts, n);
  for (Index i = 0; i < cuts; ++i) b(2 * n + i) = rng.uniform(0.2, 1.5);
  return PolyhedralSet::general(A, b);
}

/// Random convex instance with n <= 6, m <= 3. Smooth parts are PSD
/// quadratics or weighted sums of squares; with `robust` each H_j gains a
/// structured or general polyhedral support term.
inline ProblemInstance random_convex_instance(std::uint64_t seed, bool robust) {
  Rng rng(seed);
  const Index n = 1 + static_cast<Index>(rng.uniform() * 6.0);
  const Index m = 1 + static_cast<Index>(rng.uniform() * 3.0);
  Vector lb(n);
  Vector ub(n);
  for (Index i = 0; i < n; ++i) {
    lb(i) = rng.uniform(-5.0, 0.0);
    ub(i) = lb(i) + rng.uniform(0.5, 8.0);
  }
  std::vector<SmoothPart> smooth;
  for (Index j = 0; j < m; ++j) {
    if (rng.uniform() < 0.5) {
      const Matrix M = random_matrix(rng, n, n);
      smooth.push_back(make_quadratic(M.transpose() * M, random_vector(rng, n, -3.0, 3.0)));
    } else {
      const Index k = 1 + static_cast<Index>(rng.uniform() * 3.0);
      smooth.push_back(make_squares(random_matrix(rng, k, n), random_vector(rng, k), random_vector(rng, k, 0.1, 2.0),
                                    random_vector(rng, n)));
    }
  }
  ProblemInstance inst = instance("random", BoxDomain(lb, ub), std::move(smooth));
  if (robust) {
    for (auto& part : inst.nonsmooth) {
      if (rng.uniform() < 0.5) {
        Matrix B;
        do {
          B = random_matrix(rng, n, n);
        } while (!(condition_number(B) <= 1e3));
        part.support = PolyhedralSet::structured(B, rng.uniform(0.05, 1.0));
      } else {
        part.support = random_polytope(rng, n);
      }
    }
  }
  return inst;
}

inline Vector random_point(Rng& rng, const BoxDomain& box) {
  Vector x(box.dim());
  for (Index i = 0; i < box.dim(); ++i) x(i) = rng.uniform(box.lb()(i), box.ub()(i));
  return x;
}

}  // namespace moprox::testing
