#pragma once

#include "moprox/convexprog.hpp"
#include "moprox/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moprox {

class CatalogError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Deterministic randomness

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into one seed: h <- splitmix64(h ^ v) per value,
/// starting from splitmix64 of the first.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0;
  bool first = true;
  for (const auto v : parts) {
    h = first ? splitmix64(v) : splitmix64(h ^ v);
    first = false;
  }
  return h;
}

/// splitmix64 stream; doubles take the top 53 bits so draws are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Smooth building blocks

/// G(x) = 1/2 x'Qx + c'x + r with symmetric PSD Q; L = lambda_max(Q).
inline SmoothPart make_quadratic(Matrix Q, Vector c, double r = 0.0) {
  require(Q.rows() == Q.cols() && Q.rows() == c.size(), "make_quadratic: dimension mismatch");
  require(inf_norm(Matrix(Q - Q.transpose())) <= 1e-12 * (1.0 + inf_norm(Q)), "make_quadratic: Q must be symmetric");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-10 * (1.0 + inf_norm(Q)), "make_quadratic: Q must be PSD");
  SmoothPart s;
  s.lipschitz = std::max(0.0, eig.eigenvalues().maxCoeff());
  s.value = [Q, c, r](const Vector& x) { return 0.5 * x.dot(Q * x) + c.dot(x) + r; };
  s.gradient = [Q, c](const Vector& x) -> Vector { return Q * x + c; };
  return s;
}

/// G(x) = sum_k w_k (A_k x + beta_k)^2 + c'x + r with w >= 0. Evaluated in
/// residual form, which keeps values accurate near the minimizer.
inline SmoothPart make_squares(Matrix A, Vector beta, Vector w, Vector c, double r = 0.0) {
  require(A.rows() == beta.size() && A.rows() == w.size(), "make_squares: term count mismatch");
  require(A.cols() == c.size(), "make_squares: dimension mismatch");
  require((w.array() >= 0.0).all(), "make_squares: weights must be nonnegative");
  const Matrix H = 2.0 * A.transpose() * w.asDiagonal() * A;
  SmoothPart s;
  s.lipschitz = A.rows() == 0 ? 0.0 : std::max(0.0, Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly)
                                                        .eigenvalues()
                                                        .maxCoeff());
  s.value = [A, beta, w, c, r](const Vector& x) {
    const Vector res = A * x + beta;
    return w.dot(res.cwiseAbs2()) + c.dot(x) + r;
  };
  s.gradient = [A, beta, w, c](const Vector& x) -> Vector {
    return 2.0 * A.transpose() * w.cwiseProduct(A * x + beta) + c;
  };
  return s;
}

namespace detail {

// Objectives built from single-coordinate squares sum_i w_i (x_i - s_i)^2.
inline SmoothPart coordinate_squares(const Vector& w, const Vector& shift, double r = 0.0) {
  const Index n = w.size();
  return make_squares(Matrix::Identity(n, n), -shift, w, Vector::Zero(n), r);
}

inline Matrix rows(std::initializer_list<std::initializer_list<double>> data) {
  Matrix M(static_cast<Index>(data.size()), static_cast<Index>(data.begin()->size()));
  Index i = 0;
  for (const auto& row : data) {
    Index j = 0;
    for (const double v : row) M(i, j++) = v;
    ++i;
  }
  return M;
}

inline Vector vec(std::initializer_list<double> data) {
  Vector v(static_cast<Index>(data.size()));
  Index i = 0;
  for (const double x : data) v(i++) = x;
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Catalog

struct ProblemCatalogEntry {
  std::string name;
  Index n = 0;
  Index m = 0;
  Vector lb;
  Vector ub;
  std::string reference;
};

inline const std::vector<ProblemCatalogEntry>& problem_catalog() {
  static const std::vector<ProblemCatalogEntry> catalog = [] {
    const double r2 = std::sqrt(2.0);
    auto box = [](Index n, double lo, double hi) {
      return std::pair{Vector::Constant(n, lo).eval(), Vector::Constant(n, hi).eval()};
    };
    std::vector<ProblemCatalogEntry> c;
    auto add = [&](std::string name, Index n, Index m, std::pair<Vector, Vector> b, std::string ref) {
      c.push_back({std::move(name), n, m, std::move(b.first), std::move(b.second), std::move(ref)});
    };
    add("AP2", 1, 2, box(1, -100, 100), "Ansary and Panda (2015)");
    add("BK1", 2, 2, box(2, -5, 10), "Huband et al. (2006)");
    add("FDS", 5, 3, box(5, -2, 2), "Fliege, Grana Drummond and Svaiter (2009)");
    add("JOS1", 100, 2, box(100, -100, 100), "Jin, Olhofer and Sendhoff (2001)");
    add("Lov1", 2, 2, box(2, -10, 10), "Lovison (2011)");
    add("MOP7", 2, 3, box(2, -400, 400), "Huband et al. (2006)");
    add("SD", 4, 2, {detail::vec({1.0, r2, r2, 1.0}), Vector::Constant(4, 3.0)}, "Stadler and Dauer (1993)");
    add("SP1", 2, 2, box(2, -100, 100), "Huband et al. (2006)");
    add("Toi4", 4, 2, box(4, -2, 5), "Toint test set");
    add("VU2", 2, 2, box(2, -3, 3), "Huband et al. (2006)");
    return c;
  }();
  return catalog;
}

inline const ProblemCatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : problem_catalog())
    if (e.name == name) return e;
  throw CatalogError("unknown problem '" + name + "'");
}

namespace detail {

inline std::vector<SmoothPart> catalog_objectives(const std::string& name, Index n) {
  using detail::rows;
  using detail::vec;
  const double r2 = std::sqrt(2.0);
  std::vector<SmoothPart> f;
  if (name == "AP2") {
    f.push_back(coordinate_squares(vec({1}), vec({0}), -4.0));
    f.push_back(coordinate_squares(vec({1}), vec({1})));
  } else if (name == "BK1") {
    f.push_back(coordinate_squares(Vector::Ones(2), Vector::Zero(2)));
    f.push_back(coordinate_squares(Vector::Ones(2), Vector::Constant(2, 5.0)));
  } else if (name == "FDS") {
    const double nd = static_cast<double>(n);
    SmoothPart f1;
    f1.value = [nd](const Vector& x) {
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) s += static_cast<double>(i + 1) * std::pow(x(i) - static_cast<double>(i + 1), 4);
      return s / (nd * nd);
    };
    f1.gradient = [nd](const Vector& x) -> Vector {
      Vector g(x.size());
      for (Index i = 0; i < x.size(); ++i)
        g(i) = 4.0 * static_cast<double>(i + 1) * std::pow(x(i) - static_cast<double>(i + 1), 3) / (nd * nd);
      return g;
    };
    SmoothPart f2;
    f2.value = [nd](const Vector& x) { return std::exp(x.sum() / nd) + x.squaredNorm(); };
    f2.gradient = [nd](const Vector& x) -> Vector {
      return (Vector::Constant(x.size(), std::exp(x.sum() / nd) / nd) + 2.0 * x).eval();
    };
    SmoothPart f3;
    auto weight = [nd](Index i) {
      const double k = static_cast<double>(i + 1);
      return k * (nd - k + 1.0) / (nd * (nd + 1.0));
    };
    f3.value = [weight](const Vector& x) {
      double s = 0.0;
      for (Index i = 0; i < x.size(); ++i) s += weight(i) * std::exp(-x(i));
      return s;
    };
    f3.gradient = [weight](const Vector& x) -> Vector {
      Vector g(x.size());
      for (Index i = 0; i < x.size(); ++i) g(i) = -weight(i) * std::exp(-x(i));
      return g;
    };
    f = {f1, f2, f3};
  } else if (name == "JOS1") {
    const Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    f.push_back(coordinate_squares(w, Vector::Zero(n)));
    f.push_back(coordinate_squares(w, Vector::Constant(n, 2.0)));
  } else if (name == "Lov1") {
    f.push_back(coordinate_squares(vec({1.05, 0.98}), Vector::Zero(2)));
    f.push_back(coordinate_squares(vec({0.99, 1.03}), vec({3.0, 2.5})));
  } else if (name == "MOP7") {
    f.push_back(make_squares(rows({{1, 0}, {0, 1}}), vec({-2, 1}), vec({0.5, 1.0 / 13}), Vector::Zero(2), 3.0));
    f.push_back(make_squares(rows({{1, 1}, {-1, 1}}), vec({-3, 2}), vec({1.0 / 36, 1.0 / 8}), Vector::Zero(2), -17.0));
    f.push_back(make_squares(rows({{1, 2}, {-1, 2}}), vec({-1, 0}), vec({1.0 / 175, 1.0 / 17}), Vector::Zero(2), -13.0));
  } else if (name == "SD") {
    // Convex form with all reciprocal terms positive.
    const Vector lin = vec({2.0, r2, r2, 1.0});
    const Vector rec = vec({2.0, 2.0 * r2, 2.0 * r2, 2.0});
    f.push_back(make_squares(Matrix(0, 4), Vector(0), Vector(0), lin));
    SmoothPart f2;
    f2.value = [rec](const Vector& x) { return rec.cwiseQuotient(x).sum(); };
    f2.gradient = [rec](const Vector& x) -> Vector { return -rec.cwiseQuotient(x.cwiseAbs2()); };
    f.push_back(f2);
  } else if (name == "SP1") {
    f.push_back(make_squares(rows({{1, 0}, {1, -1}}), vec({-1, 0}), Vector::Ones(2), Vector::Zero(2)));
    f.push_back(make_squares(rows({{0, 1}, {1, -1}}), vec({-3, 0}), Vector::Ones(2), Vector::Zero(2)));
  } else if (name == "Toi4") {
    f.push_back(make_squares(rows({{1, 0, 0, 0}, {0, 1, 0, 0}}), Vector::Zero(2), Vector::Ones(2), Vector::Zero(4), 1.0));
    f.push_back(make_squares(rows({{1, -1, 0, 0}, {0, 0, 1, -1}}), Vector::Zero(2), Vector::Constant(2, 0.5),
                             Vector::Zero(4), 1.0));
  } else if (name == "VU2") {
    f.push_back(make_squares(Matrix(0, 2), Vector(0), Vector(0), vec({1, 1}), 1.0));
    f.push_back(make_squares(rows({{1, 0}}), vec({0}), vec({1}), vec({0, 2}), -1.0));
  }
  return f;
}

}  // namespace detail

/// Builds a catalog problem with box-indicator nonsmooth parts.
inline ProblemInstance make_problem(const std::string& name) {
  const ProblemCatalogEntry& e = catalog_entry(name);
  ProblemInstance inst;
  inst.name = e.name;
  inst.n = e.n;
  inst.m = e.m;
  inst.box = BoxDomain(e.lb, e.ub);
  inst.smooth = detail::catalog_objectives(e.name, e.n);
  inst.nonsmooth.assign(static_cast<std::size_t>(e.m), NonsmoothPart{inst.box, std::nullopt});
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// Robust augmentation

struct RobustSpec {
  double delta_hat = 0.0;
  Vector x_hat;
  std::vector<Matrix> B;
  double delta = 0.0;
};

inline double condition_number(const Matrix& M) {
  const Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : kInf;
}

/// delta_hat ~ U[0.02, 0.10], x_hat = ub, delta = delta_hat |x_hat|, and one
/// B_j per objective with U[-1, 1] entries, redrawn until cond(B_j) <= 1e6.
inline RobustSpec make_robust_spec(const ProblemInstance& inst, std::uint64_t seed) {
  inst.validate();
  Rng rng(seed);
  RobustSpec spec;
  spec.delta_hat = rng.uniform(0.02, 0.10);
  spec.x_hat = inst.box.ub();
  spec.delta = spec.delta_hat * spec.x_hat.norm();
  require(spec.delta > 0.0, "make_robust_spec: x_hat = ub must be nonzero");
  for (Index j = 0; j < inst.m; ++j) {
    Matrix B(inst.n, inst.n);
    do {
      for (Index c = 0; c < inst.n; ++c)
        for (Index r = 0; r < inst.n; ++r) B(r, c) = rng.uniform(-1.0, 1.0);
    } while (!(condition_number(B) <= 1e6));
    spec.B.push_back(std::move(B));
  }
  return spec;
}

inline ProblemInstance apply_robust_spec(ProblemInstance inst, const RobustSpec& spec) {
  require(static_cast<Index>(spec.B.size()) == inst.m, "apply_robust_spec: need one B per objective");
  for (Index j = 0; j < inst.m; ++j)
    inst.nonsmooth[static_cast<std::size_t>(j)].support =
        PolyhedralSet::structured(spec.B[static_cast<std::size_t>(j)], spec.delta);
  inst.name += "-robust";
  inst.validate();
  return inst;
}

inline ProblemInstance robustify(const ProblemInstance& inst, std::uint64_t seed) {
  return apply_robust_spec(inst, make_robust_spec(inst, seed));
}

/// Uniform point of the box.
inline Vector sample_start(const ProblemInstance& inst, std::uint64_t seed) {
  Rng rng(seed);
  Vector x(inst.n);
  for (Index i = 0; i < inst.n; ++i) x(i) = rng.uniform(inst.box.lb()(i), inst.box.ub()(i));
  return inst.box.clamp(x);
}

}  // namespace moprox
