#include "helpers.hpp"
#include "moprox/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace moprox;
using namespace moprox::testing;

namespace {

// O(N^2) reference: keep i unless some other point is <= everywhere and < somewhere.
std::vector<Vector> brute_force_filter(const std::vector<Vector>& pts) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t k = 0; k < pts.size() && !dominated; ++k) {
      if (k == i) continue;
      bool le = true, lt = false;
      for (Index j = 0; j < pts[i].size(); ++j) {
        le = le && pts[k](j) <= pts[i](j);
        lt = lt || pts[k](j) < pts[i](j);
      }
      dominated = le && lt;
    }
    if (!dominated) out.push_back(pts[i]);
  }
  return out;
}

// Integer-valued coordinates to force ties and duplicates.
std::vector<Vector> random_points(Rng& rng, std::size_t N, Index m) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < N; ++i) {
    Vector p(m);
    for (Index j = 0; j < m; ++j) p(j) = std::floor(rng.uniform(0, 12));
    pts.push_back(p);
  }
  return pts;
}

ProfileTable table(std::vector<std::vector<std::optional<double>>> cost) {
  ProfileTable t;
  t.measure = "test";
  for (std::size_t p = 0; p < cost.size(); ++p) t.problems.push_back("p" + std::to_string(p + 1));
  for (std::size_t s = 0; s < cost.front().size(); ++s) t.solvers.push_back("s" + std::to_string(s + 1));
  t.cost = std::move(cost);
  return t;
}

FrontSet front(std::vector<Vector> pts) { return FrontSet{std::move(pts), "s", {}}; }

}  // namespace

TEST(Filter, Examples) {
  EXPECT_EQ(nondominated_filter({vec({1, 2}), vec({2, 1}), vec({2, 2})}).points,
            (std::vector<Vector>{vec({1, 2}), vec({2, 1})}));
  EXPECT_EQ(nondominated_filter({vec({3, 3})}).points.size(), 1u);
  EXPECT_EQ(nondominated_filter({vec({1, 1}), vec({1, 1}), vec({1, 1})}).points.size(), 3u);
  EXPECT_TRUE(nondominated_filter(std::vector<Vector>{}).empty());
}

TEST(Filter, KeepsRunIdsAligned) {
  const FrontSet in{{vec({2, 2}), vec({1, 3}), vec({3, 3})}, "mpg", {"a", "b", "c"}};
  const FrontSet out = nondominated_filter(in);
  EXPECT_EQ(out.run_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(out.solver, "mpg");
}

TEST(Filter, MatchesBruteForce) {
  Rng rng(31);
  for (const std::size_t N : {1u, 2u, 5u, 17u, 50u, 120u, 200u})
    for (const Index m : {2, 3, 4})
      for (int rep = 0; rep < 5; ++rep) {
        const auto pts = random_points(rng, N, m);
        EXPECT_EQ(nondominated_filter(pts).points, brute_force_filter(pts)) << "N=" << N << " m=" << m;
      }
}

TEST(Filter, OutputIsMutuallyNondominated) {
  Rng rng(2);
  const auto pts = random_points(rng, 150, 2);
  const auto out = nondominated_filter(pts).points;
  for (const auto& a : out)
    for (const auto& b : out) EXPECT_FALSE(pareto_dominates(a, b));
}

TEST(Purity, Examples) {
  const FrontSet ref = front({vec({0, 3}), vec({1, 2}), vec({2, 1}), vec({3, 0})});
  EXPECT_EQ(purity(ref, ref, 0.0), 1.0);
  EXPECT_EQ(purity(front({vec({5, 5}), vec({4, 4})}), ref, 1e-8), 0.0);
  EXPECT_EQ(purity(front({vec({0, 3}), vec({1, 2}), vec({2, 1}), vec({4, 4})}), ref, 1e-8), 0.75);
  EXPECT_FALSE(purity(front({}), ref).has_value());
  // Rounding noise is absorbed by the default tolerance.
  EXPECT_EQ(purity(front({vec({1 + 1e-12, 2})}), ref), 1.0);
  EXPECT_THROW(purity(ref, ref, -1.0), ContractViolation);
}

TEST(Purity, SelfPurityIsOne) {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const FrontSet X = nondominated_filter(random_points(rng, 40, 2));
    EXPECT_EQ(purity(X, X, 0.0), 1.0);
  }
}

TEST(Purity, ReferenceIsFilteredUnion) {
  const FrontSet a = front({vec({0, 2}), vec({2, 2})});
  const FrontSet b = front({vec({1, 1}), vec({3, 0})});
  const FrontSet ref = reference_front({a, b});
  EXPECT_EQ(ref.points, (std::vector<Vector>{vec({0, 2}), vec({1, 1}), vec({3, 0})}));
  EXPECT_EQ(purity(a, ref, 0.0), 0.5);
  EXPECT_EQ(purity(b, ref, 0.0), 1.0);
}

TEST(Spread, EquallySpacedFront) {
  std::vector<Vector> pts;
  for (int i = 0; i <= 10; ++i) pts.push_back(vec({static_cast<double>(i), 10.0 - i}));
  const FrontSet f = front(pts);
  EXPECT_LE(*spread_delta(f), 1e-12);
  EXPECT_EQ(*spread_gamma(f), 1.0);
}

TEST(Spread, TwoPointsAndBoundaryGaps) {
  const FrontSet f = front({vec({0, 4}), vec({1, 0})});
  EXPECT_EQ(*spread_gamma(f), 4.0);
  EXPECT_EQ(*spread_delta(f), 0.0);
  // Extremes beyond the front add boundary gaps.
  const FrontExtremes ext{vec({-2, 0}), vec({1, 4})};
  EXPECT_EQ(*spread_gamma(f, ext), 4.0);
  // Objective 1: gaps 2 | 1 | 0; objective 2: 0 | 4 | 0.
  EXPECT_DOUBLE_EQ(*spread_delta(f, ext), 0.5 * (2.0 / 3.0 + 0.0));
}

TEST(Spread, HandComputedUnevenFront) {
  const FrontSet f = front({vec({0, 6}), vec({1, 3}), vec({4, 0})});
  // Gaps: objective 1 {1, 3}, objective 2 {3, 3}; mean 2 and 3.
  EXPECT_DOUBLE_EQ(*spread_delta(f), 0.5 * (2.0 / 4.0 + 0.0));
  EXPECT_EQ(*spread_gamma(f), 3.0);
}

TEST(Spread, DegenerateFronts) {
  EXPECT_FALSE(spread_gamma(front({})).has_value());
  EXPECT_FALSE(spread_delta(front({vec({1, 1})})).has_value());
  EXPECT_FALSE(spread_gamma(front({vec({1, 1})})).has_value());
  EXPECT_FALSE(spread_delta(front({vec({1, 1}), vec({1, 1})})).has_value());
  EXPECT_THROW(spread_gamma(front({vec({1, 1, 1}), vec({0, 2, 1})})), ContractViolation);
  EXPECT_THROW(spread_delta(front({vec({1, 1, 1}), vec({0, 2, 1})})), ContractViolation);
}

TEST(Profile, TwoSolverExample) {
  const auto prof = performance_profile(table({{1.0, 2.0}, {2.0, 1.0}, {1.0, 1.0}}));
  EXPECT_EQ(prof.taus, (std::vector<double>{1.0, 2.0}));
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_DOUBLE_EQ(prof.at(s, 1.0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(prof.at(s, 1.999), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(prof.at(s, 2.0), 1.0);
    EXPECT_EQ(prof.at(s, 0.5), 0.0);
  }
}

TEST(Profile, SingleSolverIsIdenticallyOne) {
  const auto prof = performance_profile(table({{3.0}, {0.1}, {7.0}}));
  EXPECT_EQ(prof.taus, std::vector<double>{1.0});
  EXPECT_EQ(prof.at(0, 1.0), 1.0);
  EXPECT_EQ(prof.at(0, 100.0), 1.0);
}

TEST(Profile, ThreeSolverSyntheticTable) {
  const auto prof = performance_profile(
      table({{1.0, 2.0, 4.0}, {3.0, 3.0, std::nullopt}, {2.0, 1.0, 1.0}, {5.0, std::nullopt, 10.0}}));
  const double expect[3][3] = {{0.75, 1.0, 1.0}, {0.5, 0.75, 0.75}, {0.25, 0.5, 0.75}};
  const double taus[3] = {1.0, 2.0, 4.0};
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(prof.at(s, taus[i]), expect[s][i]) << s << " " << i;
  EXPECT_EQ(prof.taus, (std::vector<double>{1.0, 2.0, 4.0}));
}

TEST(Profile, InvariantsOnRandomTables) {
  Rng rng(10);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t P = 1 + static_cast<std::size_t>(rng.uniform() * 12);
    const std::size_t S = 1 + static_cast<std::size_t>(rng.uniform() * 4);
    std::vector<std::vector<std::optional<double>>> cost(P);
    std::size_t successes_s0 = 0;
    for (auto& row : cost)
      for (std::size_t s = 0; s < S; ++s) {
        if (rng.uniform() < 0.2) {
          row.push_back(std::nullopt);
        } else {
          row.push_back(rng.uniform(0.1, 50.0));
          if (s == 0) ++successes_s0;
        }
      }
    const ProfileTable t = table(cost);
    const auto prof = performance_profile(t);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t i = 0; i < prof.taus.size(); ++i) {
        EXPECT_GE(prof.rho[s][i], 0.0);
        EXPECT_LE(prof.rho[s][i], 1.0);
        if (i > 0) {
          EXPECT_GE(prof.rho[s][i], prof.rho[s][i - 1]);
        }
      }
    EXPECT_DOUBLE_EQ(prof.at(0, 1e300), static_cast<double>(successes_s0) / static_cast<double>(P));

    // Row scaling leaves every rho unchanged.
    ProfileTable scaled = t;
    for (auto& row : scaled.cost) {
      const double c = std::ldexp(1.0, static_cast<int>(rng.uniform() * 20) - 10);
      for (auto& v : row)
        if (v) *v *= c;
    }
    const auto prof2 = performance_profile(scaled);
    EXPECT_EQ(prof2.taus, prof.taus);
    EXPECT_EQ(prof2.rho, prof.rho);
  }
}

TEST(Profile, RejectsNonpositiveCosts) {
  EXPECT_THROW(performance_profile(table({{0.0, 1.0}})), ContractViolation);
  EXPECT_THROW(performance_profile(ProfileTable{}), ContractViolation);
}
