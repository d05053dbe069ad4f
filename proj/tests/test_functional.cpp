#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "torusdyn/functional.hpp"
#include "torusdyn/rng.hpp"

using namespace torusdyn;

namespace {

template <int D>
std::vector<TorusPoint<D>> cloud(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<TorusPoint<D>> pts(n);
    for (auto& p : pts) p = uniform_point<D>(rng);
    return pts;
}

// number of k-subsets with squared diameter <= radius^2, by nested loops
template <int D>
std::size_t brute_local_subsets(const std::vector<TorusPoint<D>>& pts, int k, double radius) {
    std::vector<int> idx(k);
    std::size_t count = 0;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (n < k) return 0;
    for (;;) {
        bool ok = true;
        for (int a = 0; a < k && ok; ++a)
            for (int b = a + 1; b < k && ok; ++b) ok = distance2(pts[idx[a]], pts[idx[b]]) <= radius * radius;
        count += ok;
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return count;
}

} // namespace

TEST(Isomorphism, RelabelledPathsMatch) {
    const auto p = GeometricPattern::path(4).adjacency;
    const auto q = GeometricPattern::from_edges(4, std::vector<std::pair<int, int>>{{2, 0}, {0, 3}, {3, 1}}).adjacency;
    EXPECT_TRUE(graph_isomorphic(p, q));
    EXPECT_FALSE(graph_isomorphic(p, GeometricPattern::cycle(4).adjacency));
    EXPECT_FALSE(graph_isomorphic(GeometricPattern::complete(3).adjacency, GeometricPattern::path(3).adjacency));
    // same degree sequence, not isomorphic: two triangles vs a 6-cycle
    const auto two_triangles =
        GeometricPattern::from_edges(6, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}).adjacency;
    EXPECT_FALSE(graph_isomorphic(two_triangles, GeometricPattern::cycle(6).adjacency));
}

TEST(Pattern, ConstructionErrors) {
    EXPECT_THROW(GeometricPattern::complete(9), UnsupportedSize);
    EXPECT_THROW(GeometricPattern::from_edges(3, std::vector<std::pair<int, int>>{{0, 0}}), std::invalid_argument);
    EXPECT_THROW(GeometricPattern::from_adjacency_lists({{1}, {}}), std::invalid_argument);
    EXPECT_EQ(GeometricPattern::from_adjacency_lists({{1, 2}, {0}, {0}}).adjacency.edge_count(), 2);
}

TEST(Pattern, Feasibility) {
    EXPECT_TRUE(pattern_feasible<2>(GeometricPattern::cycle(4)));
    EXPECT_TRUE(pattern_feasible<1>(GeometricPattern::path(3)));
    // a star with 3 leaves needs the leaves pairwise farther than the radius:
    // impossible in one dimension
    const auto star = GeometricPattern::from_edges(4, std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}});
    EXPECT_FALSE(pattern_feasible<1>(star, 7, 20000));
    EXPECT_TRUE(pattern_feasible<2>(star));
}

TEST(PairIndicator, ThresholdIsInclusive) {
    const auto f = make_pair_indicator<1>(0.25);
    std::vector<TorusPoint<1>> ys{TorusPoint<1>::from_coords({0.0}), TorusPoint<1>::from_coords({0.0125})};
    EXPECT_EQ(f(ys, 0.05), 1.0);
    ys[1] = TorusPoint<1>::from_coords({0.013});
    EXPECT_EQ(f(ys, 0.05), 0.0);
    std::vector<TorusPoint<1>> wrong_size{ys[0]};
    EXPECT_EQ(f(wrong_size, 0.05), 0.0);
}

TEST(SubgraphCount, UsesScaledConnectionRadius) {
    // path on 3 points with connection radius r delta / 3
    const double delta = 0.3, r = 1.0, c = r * delta / 3.0;
    const auto f = make_subgraph_count<1>(GeometricPattern::path(3), delta, false);
    std::vector<TorusPoint<1>> ys{TorusPoint<1>::from_coords({0.0}), TorusPoint<1>::from_coords({0.9 * c}),
                                  TorusPoint<1>::from_coords({1.8 * c})};
    EXPECT_EQ(f(ys, r), 1.0);
    ys[2] = TorusPoint<1>::from_coords({0.5 * c});  // triangle, not a path
    EXPECT_EQ(f(ys, r), 0.0);
    ys[2] = TorusPoint<1>::from_coords({2.5 * c});  // disconnected
    EXPECT_EQ(f(ys, r), 0.0);
}

TEST(SubgraphCount, VanishesBeyondLocality) {
    const auto f = make_subgraph_count<2>(GeometricPattern::complete(2), 0.2, false);
    std::vector<TorusPoint<2>> ys{TorusPoint<2>::from_coords({0.0, 0.0}), TorusPoint<2>::from_coords({0.0, 0.05})};
    EXPECT_EQ(f(ys, 0.5), 1.0);
    EXPECT_EQ(f(ys, 0.2), 0.0);
}

TEST(UserFunctional, PropertyChecks) {
    auto good = [](std::span<const TorusPoint<2>> ys, double r) {
        return 1.0 - diameter<2>(ys) / (0.25 * r + 1e-300);
    };
    EXPECT_NO_THROW(make_user_functional<2>(3, 0.25, 1.0, good));
    auto unbounded = [](std::span<const TorusPoint<2>>, double) { return 2.0; };
    EXPECT_THROW(make_user_functional<2>(2, 0.25, 1.0, unbounded), std::invalid_argument);
    auto asymmetric = [](std::span<const TorusPoint<2>> ys, double) { return ys[0][0] > ys[1][0] ? 1.0 : 0.0; };
    EXPECT_THROW(make_user_functional<2>(2, 0.25, 1.0, asymmetric), std::invalid_argument);
    auto absolute = [](std::span<const TorusPoint<2>> ys, double) { return ys[0][0] > 0.0 && ys[1][0] > 0.0 ? 1.0 : 0.0; };
    EXPECT_THROW(make_user_functional<2>(2, 0.25, 1.0, absolute), std::invalid_argument);
}

TEST(Enumeration, MatchesNestedLoops) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto p1 = cloud<1>(120, seed);
        const auto p2 = cloud<2>(150, seed);
        const auto p3 = cloud<3>(200, seed);
        const auto p4 = cloud<4>(150, seed);
        for (int k : {2, 3}) {
            std::size_t c = 0;
            enumerate_local_ktuples<1>(p1, k, 0.02, [&](auto) { ++c; });
            EXPECT_EQ(c, brute_local_subsets<1>(p1, k, 0.02));
            c = 0;
            enumerate_local_ktuples<2>(p2, k, 0.08, [&](auto) { ++c; });
            EXPECT_EQ(c, brute_local_subsets<2>(p2, k, 0.08));
            c = 0;
            enumerate_local_ktuples<3>(p3, k, 0.15, [&](auto) { ++c; });
            EXPECT_EQ(c, brute_local_subsets<3>(p3, k, 0.15));
        }
        std::size_t c = 0;
        enumerate_local_ktuples<4>(p4, 2, 0.3, [&](auto) { ++c; });
        EXPECT_EQ(c, brute_local_subsets<4>(p4, 2, 0.3));
    }
}

TEST(Enumeration, EachSubsetOnceInIncreasingOrder) {
    const auto pts = cloud<2>(300, 11);
    std::vector<std::vector<std::size_t>> seen;
    enumerate_local_ktuples<2>(pts, 3, 0.1, [&](std::span<const std::size_t> t) {
        EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
        seen.emplace_back(t.begin(), t.end());
    });
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
}

TEST(Enumeration, CoarseGridFallsBackToBruteForce) {
    const auto pts = cloud<2>(60, 3);
    std::size_t c = 0;
    enumerate_local_ktuples<2>(pts, 2, 0.4, [&](auto) { ++c; });
    EXPECT_EQ(c, brute_local_subsets<2>(pts, 2, 0.4));
}

TEST(Enumeration, PointsOnCellBoundaries) {
    // coordinates on multiples of the cell width, where rounding decides the cell
    std::vector<TorusPoint<2>> pts;
    for (int i = -10; i < 10; ++i)
        for (int j = -10; j < 10; ++j)
            pts.push_back(project<2>(std::array<double, 2>{i * 0.05, j * 0.05}));
    std::size_t c = 0;
    enumerate_local_ktuples<2>(pts, 2, 0.05, [&](auto) { ++c; });
    EXPECT_EQ(c, brute_local_subsets<2>(pts, 2, 0.05));
}

TEST(EvaluateF, GridAgreesWithBruteForce) {
    const auto tri = make_subgraph_count<2>(GeometricPattern::complete(3), 0.3, false);
    const auto path = make_subgraph_count<2>(GeometricPattern::path(3), 0.3, false);
    const auto pair = make_pair_indicator<3>(0.25);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p2 = cloud<2>(250, seed);
        EXPECT_EQ(evaluate_f<2>(p2, tri, 0.5), evaluate_f_brute_force<2>(p2, tri, 0.5));
        EXPECT_EQ(evaluate_f<2>(p2, path, 0.5), evaluate_f_brute_force<2>(p2, path, 0.5));
        const auto p3 = cloud<3>(300, seed);
        EXPECT_EQ(evaluate_f<3>(p3, pair, 0.4), evaluate_f_brute_force<3>(p3, pair, 0.4));
    }
}

TEST(EvaluateF, EmptyAndSparseInputs) {
    const auto f = make_pair_indicator<2>(0.25);
    std::vector<TorusPoint<2>> none;
    EXPECT_EQ(evaluate_f<2>(none, f, 0.1), 0.0);
    std::vector<TorusPoint<2>> one{TorusPoint<2>::from_coords({0.0, 0.0})};
    EXPECT_EQ(evaluate_f<2>(one, f, 0.1), 0.0);
}
