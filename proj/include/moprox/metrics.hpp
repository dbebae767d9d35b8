#pragma once

#include "moprox/core.hpp"
#include "moprox/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace moprox {

/// Points in objective space with optional provenance (one run id per point).
struct FrontSet {
  std::vector<Vector> points;
  std::string solver;
  std::vector<std::string> run_ids;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] bool empty() const { return points.empty(); }
};

/// a <= b componentwise with at least one strict inequality.
inline bool pareto_dominates(const Vector& a, const Vector& b) {
  return dominates_weakly(a, b) && (a.array() < b.array()).any();
}

/// Keeps the points no other point Pareto-dominates, in input order. Exact
/// duplicates survive together.
inline FrontSet nondominated_filter(const FrontSet& in) {
  const std::size_t N = in.points.size();
  if (N > 0) {
    const Index m = in.points.front().size();
    for (const auto& p : in.points) require(p.size() == m, "nondominated_filter: points differ in length");
  }
  const bool with_ids = in.run_ids.size() == N;
  // Sorting by the first objective lets each point be compared only against
  // points that can dominate it.
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return in.points[a](0) < in.points[b](0); });
  std::vector<bool> keep(N, true);
  for (std::size_t a = 0; a < N; ++a) {
    const Vector& p = in.points[order[a]];
    for (std::size_t b = 0; b < N && in.points[order[b]](0) <= p(0); ++b) {
      if (pareto_dominates(in.points[order[b]], p)) {
        keep[order[a]] = false;
        break;
      }
    }
  }
  FrontSet out;
  out.solver = in.solver;
  for (std::size_t i = 0; i < N; ++i) {
    if (!keep[i]) continue;
    out.points.push_back(in.points[i]);
    if (with_ids) out.run_ids.push_back(in.run_ids[i]);
  }
  return out;
}

inline FrontSet nondominated_filter(const std::vector<Vector>& points) {
  return nondominated_filter(FrontSet{points, {}, {}});
}

/// Filtered union of several fronts; the reference set for purity.
inline FrontSet reference_front(const std::vector<FrontSet>& fronts) {
  FrontSet all;
  all.solver = "reference";
  for (const auto& f : fronts) all.points.insert(all.points.end(), f.points.begin(), f.points.end());
  return nondominated_filter(all);
}

inline double default_purity_tol(const FrontSet& reference) {
  double r = 0.0;
  for (const auto& p : reference.points) r = std::max(r, inf_norm(p));
  return 1e-8 * (1.0 + r);
}

/// Fraction of front points within tol (infinity norm) of some reference
/// point; nullopt for an empty front.
inline std::optional<double> purity(const FrontSet& front, const FrontSet& reference, double tol) {
  require(tol >= 0.0, "purity: tol must be nonnegative");
  if (front.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (const auto& p : front.points) {
    for (const auto& r : reference.points) {
      require(r.size() == p.size(), "purity: dimension mismatch");
      if ((p - r).lpNorm<Eigen::Infinity>() <= tol) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(front.size());
}

inline std::optional<double> purity(const FrontSet& front, const FrontSet& reference) {
  return purity(front, reference, default_purity_tol(reference));
}

/// Per-objective extreme values used as the boundary points of the spread
/// metrics. Usually taken from the reference front.
struct FrontExtremes {
  Vector lo;
  Vector hi;
};

inline FrontExtremes front_extremes(const FrontSet& front) {
  require(!front.empty(), "front_extremes: empty front");
  FrontExtremes e{front.points.front(), front.points.front()};
  for (const auto& p : front.points) {
    e.lo = e.lo.cwiseMin(p);
    e.hi = e.hi.cwiseMax(p);
  }
  return e;
}

namespace detail {

struct Gaps {
  double first = 0.0;  // extreme low value to the smallest front value
  double last = 0.0;   // largest front value to the extreme high value
  std::vector<double> inner;
};

inline Gaps sorted_gaps(const FrontSet& front, Index j, const FrontExtremes& ext) {
  std::vector<double> v;
  v.reserve(front.size());
  for (const auto& p : front.points) v.push_back(p(j));
  std::sort(v.begin(), v.end());
  Gaps g;
  g.first = std::abs(v.front() - ext.lo(j));
  g.last = std::abs(ext.hi(j) - v.back());
  for (std::size_t i = 1; i < v.size(); ++i) g.inner.push_back(v[i] - v[i - 1]);
  return g;
}

inline void require_biobjective(const FrontSet& front, const FrontExtremes& ext) {
  for (const auto& p : front.points)
    require(p.size() == 2, "spread metrics support two objectives only");
  require(ext.lo.size() == 2 && ext.hi.size() == 2, "spread metrics: extremes must have two components");
}

}  // namespace detail

/// Gamma spread: the largest gap between consecutive points, boundary gaps to
/// the extremes included, maximized over objectives. nullopt for fewer than
/// two points.
inline std::optional<double> spread_gamma(const FrontSet& front, const FrontExtremes& ext) {
  detail::require_biobjective(front, ext);
  if (front.size() < 2) return std::nullopt;
  double gamma = 0.0;
  for (Index j = 0; j < 2; ++j) {
    const auto g = detail::sorted_gaps(front, j, ext);
    gamma = std::max({gamma, g.first, g.last, *std::max_element(g.inner.begin(), g.inner.end())});
  }
  return gamma;
}

/// Delta spread averaged over objectives:
///   (d_0 + d_N + sum_i |d_i - mean|) / (d_0 + d_N + (N - 1) mean)
/// with d_i the consecutive gaps of the N sorted values. nullopt for fewer
/// than two points or when all gaps vanish.
inline std::optional<double> spread_delta(const FrontSet& front, const FrontExtremes& ext) {
  detail::require_biobjective(front, ext);
  if (front.size() < 2) return std::nullopt;
  double total = 0.0;
  for (Index j = 0; j < 2; ++j) {
    const auto g = detail::sorted_gaps(front, j, ext);
    const double mean = std::accumulate(g.inner.begin(), g.inner.end(), 0.0) / static_cast<double>(g.inner.size());
    double dev = 0.0;
    for (const double d : g.inner) dev += std::abs(d - mean);
    const double denom = g.first + g.last + static_cast<double>(g.inner.size()) * mean;
    if (!(denom > 0.0)) return std::nullopt;
    total += (g.first + g.last + dev) / denom;
  }
  return total / 2.0;
}

inline std::optional<double> spread_gamma(const FrontSet& front) {
  if (front.empty()) return std::nullopt;
  return spread_gamma(front, front_extremes(front));
}

inline std::optional<double> spread_delta(const FrontSet& front) {
  if (front.empty()) return std::nullopt;
  return spread_delta(front, front_extremes(front));
}

/// Problems x solvers cost matrix; nullopt marks a failed run.
struct ProfileTable {
  std::string measure;
  std::vector<std::string> problems;
  std::vector<std::string> solvers;
  std::vector<std::vector<std::optional<double>>> cost;
};

/// Step functions rho_s(tau): rho[s][i] is the value on [taus[i], taus[i+1]).
struct PerformanceProfile {
  std::string measure;
  std::vector<std::string> solvers;
  std::vector<double> taus;
  std::vector<std::vector<double>> rho;

  /// rho_s(tau), right-continuous; 0 below the first breakpoint.
  [[nodiscard]] double at(std::size_t s, double tau) const {
    const auto it = std::upper_bound(taus.begin(), taus.end(), tau);
    if (it == taus.begin()) return 0.0;
    return rho[s][static_cast<std::size_t>(it - taus.begin() - 1)];
  }
};

/// Dolan-More profile. Ratios are cost over the best cost of the row; failures
/// and rows without any success never count as solved.
inline PerformanceProfile performance_profile(const ProfileTable& table) {
  const std::size_t S = table.solvers.size();
  const std::size_t P = table.cost.size();
  require(S > 0, "performance_profile: no solvers");
  require(P > 0, "performance_profile: no problems");
  std::vector<std::vector<double>> ratio(P, std::vector<double>(S, kInf));
  std::vector<double> breaks;
  for (std::size_t p = 0; p < P; ++p) {
    require(table.cost[p].size() == S, "performance_profile: ragged cost table");
    double best = kInf;
    for (const auto& c : table.cost[p]) {
      if (!c) continue;
      require(std::isfinite(*c) && *c > 0.0, "performance_profile: costs of successful runs must be positive");
      best = std::min(best, *c);
    }
    if (!std::isfinite(best)) continue;
    for (std::size_t s = 0; s < S; ++s) {
      if (!table.cost[p][s]) continue;
      ratio[p][s] = *table.cost[p][s] / best;
      breaks.push_back(ratio[p][s]);
    }
  }
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  PerformanceProfile out;
  out.measure = table.measure;
  out.solvers = table.solvers;
  out.taus = breaks;
  out.rho.assign(S, std::vector<double>(breaks.size(), 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> r;
    for (std::size_t p = 0; p < P; ++p) r.push_back(ratio[p][s]);
    std::sort(r.begin(), r.end());
    std::size_t solved = 0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      while (solved < r.size() && r[solved] <= breaks[i]) ++solved;
      out.rho[s][i] = static_cast<double>(solved) / static_cast<double>(P);
    }
  }
  return out;
}

}  // namespace moprox
