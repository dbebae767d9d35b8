#pragma once

#include "moprox/core.hpp"
#include "moprox/problems.hpp"

#include <yaml-cpp/yaml.h>

#include <string>
#include <vector>

namespace moprox {

/// Problem definition files (YAML):
///
///   name: toy
///   n: 2
///   box: {lb: [-1, -1], ub: [1, 1]}
///   objectives:
///     - quadratic: {Q: [[2, 0], [0, 2]], c: [0, 0], r: 0}
///     - squares: {A: [[1, 1]], beta: [-1], w: [1], c: [0, 0], r: 0}
///       support: {B: [[1, 0], [0, 1]], delta: 0.1}     # or {A: ..., b: ...}
///
/// m is the number of objectives. Everything but name, n, box and objectives
/// is optional.
class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline YAML::Node need(const YAML::Node& node, const char* key, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) throw ManifestError(where + ": missing key '" + key + "'");
  return v;
}

inline Vector yaml_vector(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ManifestError(where + ": expected a list of numbers");
  Vector v(static_cast<Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Index>(i)) = node[i].as<double>();
  return v;
}

inline Matrix yaml_matrix(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) throw ManifestError(where + ": expected a nonempty list of rows");
  const std::size_t cols = node[0].size();
  Matrix M(static_cast<Index>(node.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].IsSequence() || node[i].size() != cols) throw ManifestError(where + ": ragged matrix");
    for (std::size_t j = 0; j < cols; ++j) M(static_cast<Index>(i), static_cast<Index>(j)) = node[i][j].as<double>();
  }
  return M;
}

inline Vector optional_vector(const YAML::Node& node, const char* key, Index n, const std::string& where) {
  if (!node[key]) return Vector::Zero(n);
  Vector v = yaml_vector(node[key], where + "." + key);
  if (v.size() != n) throw ManifestError(where + "." + key + ": expected length " + std::to_string(n));
  return v;
}

inline SmoothPart manifest_smooth(const YAML::Node& obj, Index n, const std::string& where) {
  if (const YAML::Node q = obj["quadratic"]) {
    const Matrix Q = yaml_matrix(need(q, "Q", where), where + ".Q");
    if (Q.rows() != n || Q.cols() != n) throw ManifestError(where + ".Q: expected an n x n matrix");
    return make_quadratic(Q, optional_vector(q, "c", n, where), q["r"] ? q["r"].as<double>() : 0.0);
  }
  if (const YAML::Node s = obj["squares"]) {
    const Matrix A = yaml_matrix(need(s, "A", where), where + ".A");
    if (A.cols() != n) throw ManifestError(where + ".A: expected n columns");
    const Vector beta = optional_vector(s, "beta", A.rows(), where);
    const Vector w = s["w"] ? yaml_vector(s["w"], where + ".w") : Vector::Ones(A.rows());
    return make_squares(A, beta, w, optional_vector(s, "c", n, where), s["r"] ? s["r"].as<double>() : 0.0);
  }
  throw ManifestError(where + ": objective needs a 'quadratic' or 'squares' entry");
}

inline PolyhedralSet manifest_support(const YAML::Node& s, Index n, const std::string& where) {
  if (s["B"]) {
    const Matrix B = yaml_matrix(s["B"], where + ".B");
    if (B.rows() != n || B.cols() != n) throw ManifestError(where + ".B: expected an n x n matrix");
    return PolyhedralSet::structured(B, need(s, "delta", where).as<double>());
  }
  const Matrix A = yaml_matrix(need(s, "A", where), where + ".A");
  if (A.cols() != n) throw ManifestError(where + ".A: expected n columns");
  return PolyhedralSet::general(A, yaml_vector(need(s, "b", where), where + ".b"));
}

}  // namespace detail

inline ProblemInstance problem_from_yaml(const YAML::Node& root) {
  const std::string name = detail::need(root, "name", "manifest").as<std::string>();
  const std::string where = "manifest '" + name + "'";
  const auto n = static_cast<Index>(detail::need(root, "n", where).as<long>());
  if (n < 1) throw ManifestError(where + ": n must be positive");
  const YAML::Node box = detail::need(root, "box", where);
  const Vector lb = detail::yaml_vector(detail::need(box, "lb", where), where + ".box.lb");
  const Vector ub = detail::yaml_vector(detail::need(box, "ub", where), where + ".box.ub");
  if (lb.size() != n || ub.size() != n) throw ManifestError(where + ": box bounds must have length n");
  const YAML::Node objs = detail::need(root, "objectives", where);
  if (!objs.IsSequence() || objs.size() == 0) throw ManifestError(where + ": objectives must be a nonempty list");

  ProblemInstance inst;
  inst.name = name;
  inst.n = n;
  inst.m = static_cast<Index>(objs.size());
  try {
    inst.box = BoxDomain(lb, ub);
    for (std::size_t j = 0; j < objs.size(); ++j) {
      const std::string at = where + ".objectives[" + std::to_string(j) + "]";
      inst.smooth.push_back(detail::manifest_smooth(objs[j], n, at));
      NonsmoothPart part{inst.box, std::nullopt};
      if (objs[j]["support"]) part.support = detail::manifest_support(objs[j]["support"], n, at + ".support");
      inst.nonsmooth.push_back(std::move(part));
    }
    inst.validate();
  } catch (const ContractViolation& e) {
    throw ManifestError(where + ": " + e.what());
  } catch (const InvalidUncertaintySet& e) {
    throw ManifestError(where + ": " + e.what());
  } catch (const YAML::Exception& e) {
    throw ManifestError(where + ": " + e.what());
  }
  return inst;
}

inline ProblemInstance load_problem_manifest(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ManifestError("cannot read manifest " + path + ": " + e.what());
  }
  return problem_from_yaml(root);
}

}  // namespace moprox
