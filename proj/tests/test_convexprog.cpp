#include "helpers.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace moprox;
using namespace moprox::testing;

namespace {

// Largest c'z over the vertices of {Az <= b}, by enumerating every n-subset
// of rows.
double vertex_enumeration_max(const Matrix& A, const Vector& b, const Vector& c) {
  const Index n = A.cols();
  const Index d = A.rows();
  double best = -kInf;
  std::vector<Index> pick(static_cast<std::size_t>(n));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == n) {
      Matrix As(n, n);
      Vector bs(n);
      for (Index k = 0; k < n; ++k) {
        As.row(k) = A.row(pick[static_cast<std::size_t>(k)]);
        bs(k) = b(pick[static_cast<std::size_t>(k)]);
      }
      Eigen::FullPivLU<Matrix> lu(As);
      if (lu.rank() < n) return;
      const Vector z = lu.solve(bs);
      if (((A * z - b).array() <= 1e-9).all()) best = std::max(best, c.dot(z));
      return;
    }
    for (Index i = start; i < d; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

QpProblem box_qp(const Matrix& P, const Vector& q, const Vector& lb, const Vector& ub) {
  const Index n = q.size();
  QpProblem qp;
  qp.P = P;
  qp.q = q;
  qp.C.resize(2 * n, n);
  qp.C << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  qp.c.resize(2 * n);
  qp.c << ub, -lb;
  qp.E = Matrix::Zero(0, n);
  qp.e = Vector::Zero(0);
  return qp;
}

// Euclidean projection onto {lb <= v <= ub, a'v = e} with a > 0. With
// v(l) = clamp(y - l a), phi(l) = a'v(l) is nonincreasing and piecewise linear
// with kinks where a coordinate hits a bound; interpolate between kinks.
Vector project_box_hyperplane(const Vector& y, const Vector& lb, const Vector& ub, const Vector& a, double e) {
  auto at = [&](double l) { return Vector((y - l * a).cwiseMax(lb).cwiseMin(ub)); };
  std::vector<double> kinks;
  for (Index i = 0; i < y.size(); ++i) {
    kinks.push_back((y(i) - ub(i)) / a(i));
    kinks.push_back((y(i) - lb(i)) / a(i));
  }
  std::sort(kinks.begin(), kinks.end());
  double l0 = kinks.front();
  double p0 = a.dot(at(l0));
  if (p0 <= e) return at(l0);
  for (std::size_t k = 1; k < kinks.size(); ++k) {
    const double l1 = kinks[k];
    const double p1 = a.dot(at(l1));
    if (p1 <= e) return at(p0 == p1 ? l1 : l0 + (l1 - l0) * (p0 - e) / (p0 - p1));
    l0 = l1;
    p0 = p1;
  }
  return at(l0);
}

// Accelerated projected gradient with function-value restarts.
double projected_gradient_reference(const Matrix& P, const Vector& q, const std::function<Vector(const Vector&)>& proj,
                                    Vector x, long steps) {
  const double L = Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().maxCoeff();
  auto f = [&](const Vector& v) { return 0.5 * v.dot(P * v) + q.dot(v); };
  x = proj(x);
  Vector y = x;
  double t = 1.0;
  double fx = f(x);
  for (long k = 0; k < steps; ++k) {
    const Vector xn = proj(y - (P * y + q) / L);
    const double fn = f(xn);
    if (fn > fx) {  // restart
      y = x;
      t = 1.0;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    fx = fn;
    t = tn;
  }
  return fx;
}

}  // namespace

TEST(Lp, L1SupportExample) {
  const auto set = PolyhedralSet::structured(Matrix::Identity(2, 2), 1.0);
  const ProgramSolution s = solve_lp({vec({3, -4}), set});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective_value, 7.0, 1e-12);
  EXPECT_NEAR(s.primal(0), 1.0, 1e-12);
  EXPECT_NEAR(s.primal(1), -1.0, 1e-12);
}

TEST(Lp, ZeroObjective) {
  Rng rng(4);
  const auto set = random_polytope(rng, 3);
  const ProgramSolution s = solve_lp({Vector::Zero(3), set});
  ASSERT_TRUE(s.optimal());
  EXPECT_EQ(s.objective_value, 0.0);
}

TEST(Lp, SingleVariableBound) {
  Matrix A(2, 1);
  A << 1, -1;
  const auto set = PolyhedralSet::general(A, vec({2, 0}));
  const ProgramSolution s = solve_lp({vec({1}), set});
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective_value, 2.0, 1e-12);
}

TEST(Lp, RejectsEmptyUnboundedAndSingularSets) {
  Matrix A(2, 1);
  A << 1, -1;
  EXPECT_THROW(PolyhedralSet::general(A, vec({-1, -1})), InvalidUncertaintySet);  // z <= -1 and z >= 1
  Matrix half(1, 1);
  half << 1;
  EXPECT_THROW(PolyhedralSet::general(half, vec({1})), InvalidUncertaintySet);
  Matrix singular(2, 2);
  singular << 1, 2, 2, 4;
  EXPECT_THROW(PolyhedralSet::structured(singular, 1.0), InvalidUncertaintySet);
  EXPECT_THROW(PolyhedralSet::structured(Matrix::Identity(2, 2), 0.0), ContractViolation);
}

TEST(Lp, StrongDualityOnRandomBoundedSets) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 10);
    const PolyhedralSet set = random_polytope(rng, n);
    const Vector c = random_vector(rng, n, -5, 5);
    const ProgramSolution s = solve_lp({c, set});
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    const double scale = 1.0 + std::abs(s.objective_value);
    EXPECT_NEAR(c.dot(s.primal), set.b().dot(s.dual_ineq), 1e-8 * scale);
    EXPECT_LE((set.A() * s.primal - set.b()).maxCoeff(), 1e-9);
    EXPECT_GE(s.dual_ineq.minCoeff(), -1e-12);
    EXPECT_LE(inf_norm(Vector(set.A().transpose() * s.dual_ineq - c)), 1e-9 * (1.0 + inf_norm(c)));
    EXPECT_LE(s.kkt_residual, 1e-8);
  }
}

TEST(Lp, MatchesVertexEnumeration) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 3);
    const PolyhedralSet set = random_polytope(rng, n);
    const Vector c = random_vector(rng, n, -5, 5);
    const ProgramSolution s = solve_lp({c, set});
    ASSERT_TRUE(s.optimal());
    const double ref = vertex_enumeration_max(set.A(), set.b(), c);
    EXPECT_NEAR(s.objective_value, ref, 1e-9 * (1.0 + std::abs(ref)));
  }
}

TEST(Lp, StructuredSetsMatchClosedForm) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 12);
    Matrix B;
    do {
      B = random_matrix(rng, n, n);
    } while (!(condition_number(B) <= 1e6));
    const double delta = rng.uniform(0.01, 5.0);
    const Vector x = random_vector(rng, n, -100, 100);
    const ProgramSolution s = solve_lp({x, PolyhedralSet::structured(B, delta)});
    ASSERT_TRUE(s.optimal());
    const double ref = structured_support(B, delta, x);
    EXPECT_NEAR(s.objective_value, ref, 1e-8 * (1.0 + std::abs(ref)));
  }
}

TEST(Lp, DegenerateDirectionsStayOptimal) {
  // Objectives parallel to facets and exactly zero components.
  const auto set = PolyhedralSet::structured(Matrix::Identity(3, 3), 2.0);
  for (const Vector& c : {vec({1, 0, 0}), vec({0, 0, -1}), vec({1, 1, 0}), vec({1e-14, 0, 1})}) {
    const ProgramSolution s = solve_lp({c, set});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.objective_value, 2.0 * c.lpNorm<1>(), 1e-12);
  }
}

TEST(Qp, ScalarQuadratic) {
  const QpProblem qp = box_qp(Matrix::Identity(1, 1), vec({-1}), vec({-10}), vec({10}));
  const ProgramSolution s = solve_qp(qp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.primal(0), 1.0, 1e-8);
  EXPECT_NEAR(s.objective_value, -0.5, 1e-8);
}

TEST(Qp, EqualityConstrainedNorm) {
  QpProblem qp;
  qp.P = Matrix::Identity(2, 2);
  qp.q = Vector::Zero(2);
  qp.C = Matrix::Zero(0, 2);
  qp.c = Vector::Zero(0);
  qp.E = Matrix::Ones(1, 2);
  qp.e = vec({2});
  const ProgramSolution s = solve_qp(qp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.primal(0), 1.0, 1e-8);
  EXPECT_NEAR(s.primal(1), 1.0, 1e-8);
  EXPECT_NEAR(s.objective_value, 1.0, 1e-8);
}

TEST(Qp, ProjectionOntoBox) {
  // 1/2 |u - (2, 0)|^2 over 0 <= u <= 1.
  QpProblem qp = box_qp(Matrix::Identity(2, 2), vec({-2, 0}), vec({0, 0}), vec({1, 1}));
  qp.constant = 2.0;
  const ProgramSolution s = solve_qp(qp);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.primal(0), 1.0, 1e-8);
  EXPECT_NEAR(s.primal(1), 0.0, 1e-8);
  EXPECT_NEAR(s.objective_value, 0.5, 1e-8);
}

TEST(Qp, RandomPsdProblemsReachKktTolerance) {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 12);
    const Index mi = static_cast<Index>(rng.uniform() * 8);
    const Index me = static_cast<Index>(rng.uniform() * std::min<double>(3.0, static_cast<double>(n)));
    const Matrix M = random_matrix(rng, n, n);
    const Vector feasible = random_vector(rng, n);
    QpProblem qp = box_qp(M.transpose() * M + 1e-6 * Matrix::Identity(n, n), random_vector(rng, n, -5, 5),
                          Vector::Constant(n, -3), Vector::Constant(n, 3));
    const Matrix G = random_matrix(rng, mi, n);
    qp.C.conservativeResize(2 * n + mi, n);
    qp.C.bottomRows(mi) = G;
    qp.c.conservativeResize(2 * n + mi);
    qp.c.tail(mi) = G * feasible + random_vector(rng, mi, 0.0, 1.0);
    qp.E = random_matrix(rng, me, n);
    qp.e = qp.E * feasible;
    const ProgramSolution s = solve_qp(qp);
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    EXPECT_LE(s.kkt_residual, 1e-8) << "trial " << trial;
    const KktResiduals r = qp_residuals(qp, s.primal, s.dual_ineq, s.dual_eq);
    EXPECT_LE(r.max(), 1e-8);
  }
}

TEST(Qp, MatchesProjectedGradientReference) {
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 4);
    const Matrix M = random_matrix(rng, n, n);
    const Matrix P = M.transpose() * M + 1e-6 * Matrix::Identity(n, n);
    const Vector q = random_vector(rng, n, -3, 3);
    const Vector lb = random_vector(rng, n, -2, 0);
    const Vector ub = lb + random_vector(rng, n, 0.5, 3);
    QpProblem qp = box_qp(P, q, lb, ub);
    std::function<Vector(const Vector&)> proj = [&](const Vector& y) { return Vector(y.cwiseMax(lb).cwiseMin(ub)); };
    if (trial % 2 == 1) {
      // Add a'v = e through a box point.
      const Vector a = random_vector(rng, n, 0.2, 1.0);
      const double e = a.dot(random_point(rng, BoxDomain(lb, ub)));
      qp.E = a.transpose();
      qp.e = vec({e});
      proj = [=](const Vector& y) { return project_box_hyperplane(y, lb, ub, a, e); };
    }
    const ProgramSolution s = solve_qp(qp);
    ASSERT_TRUE(s.optimal());
    const double ref = projected_gradient_reference(P, q, proj, Vector::Zero(n), 1000000);
    EXPECT_NEAR(s.objective_value, ref, 1e-6 * (1.0 + std::abs(ref))) << "trial " << trial;
  }
}

TEST(Qp, DeterministicForIdenticalInputs) {
  Rng rng(5);
  const Matrix M = random_matrix(rng, 6, 6);
  const QpProblem qp =
      box_qp(M.transpose() * M, random_vector(rng, 6), Vector::Constant(6, -1), Vector::Constant(6, 1));
  const ProgramSolution a = solve_qp(qp);
  const ProgramSolution b = solve_qp(qp);
  EXPECT_EQ(a.primal, b.primal);
  EXPECT_EQ(a.dual_ineq, b.dual_ineq);
  EXPECT_EQ(a.iterations, b.iterations);
}
