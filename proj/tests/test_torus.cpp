#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

using namespace torusdyn;

namespace {

// distance by brute force over the 3^D nearest lattice images
template <int D>
double image_distance_full(const TorusPoint<D>& x, const TorusPoint<D>& y) {
    double best = 1e9;
    std::array<int, D> m;
    m.fill(-1);
    for (;;) {
        double s = 0.0;
        for (int a = 0; a < D; ++a) {
            const double v = x[a] - y[a] + m[a];
            s += v * v;
        }
        best = std::min(best, std::sqrt(s));
        int a = 0;
        while (a < D && m[a] == 1) m[a++] = -1;
        if (a == D) break;
        ++m[a];
    }
    return best;
}

} // namespace

TEST(Project, WrapsIntoHalfOpenCube) {
    EXPECT_EQ(project<1>(std::array<double, 1>{0.5})[0], -0.5);
    EXPECT_EQ(project<1>(std::array<double, 1>{-0.5})[0], -0.5);
    EXPECT_DOUBLE_EQ(project<1>(std::array<double, 1>{1.25})[0], 0.25);
    EXPECT_DOUBLE_EQ(project<1>(std::array<double, 1>{-2.75})[0], 0.25);
    SplitMix64 rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double x = uniform(rng, -50.0, 50.0);
        const double p = project<1>(std::array<double, 1>{x})[0];
        EXPECT_GE(p, -0.5);
        EXPECT_LT(p, 0.5);
        EXPECT_NEAR(std::remainder(x - p, 1.0), 0.0, 1e-9);
    }
}

TEST(TorusPoint, FromCoordsIsChecked) {
    EXPECT_NO_THROW(TorusPoint<2>::from_coords({-0.5, 0.49}));
    EXPECT_THROW(TorusPoint<2>::from_coords({0.5, 0.0}), std::invalid_argument);
    EXPECT_THROW(TorusPoint<1>::from_coords({std::nan("")}), std::invalid_argument);
}

TEST(Distance, WrapsAround) {
    const auto a = TorusPoint<1>::from_coords({0.45});
    const auto b = TorusPoint<1>::from_coords({-0.45});
    EXPECT_NEAR(distance(a, b), 0.1, 1e-15);
    const auto c = TorusPoint<2>::from_coords({0.0, 0.0});
    const auto e = TorusPoint<2>::from_coords({-0.5, -0.5});
    EXPECT_NEAR(distance(c, e), std::sqrt(0.5), 1e-15);
}

TEST(Distance, MatchesNearestLatticeImage) {
    SplitMix64 rng(2);
    for (int i = 0; i < 2000; ++i) {
        const auto x = uniform_point<3>(rng);
        const auto y = uniform_point<3>(rng);
        EXPECT_NEAR(distance(x, y), image_distance_full<3>(x, y), 1e-14);
        EXPECT_EQ(distance(x, y), distance(y, x));
        EXPECT_LE(distance(x, y), std::sqrt(3.0) / 2.0 + 1e-15);
    }
}

TEST(Distance, TranslationInvariant) {
    SplitMix64 rng(3);
    for (int i = 0; i < 2000; ++i) {
        std::vector<TorusPoint<2>> ys{uniform_point<2>(rng), uniform_point<2>(rng)};
        const auto x = uniform_point<2>(rng);
        const auto moved = translate<2>(ys, x);
        EXPECT_NEAR(distance(moved[0], moved[1]), distance(ys[0], ys[1]), 1e-12);
    }
}

TEST(Scale, ScalesLocalConfigurations) {
    std::vector<TorusPoint<2>> ys{TorusPoint<2>::from_coords({0.0, 0.0}), TorusPoint<2>::from_coords({0.1, 0.0}),
                                  TorusPoint<2>::from_coords({0.0, -0.2})};
    const auto half = scale<2>(0.5, ys);
    EXPECT_NEAR(half[1][0], 0.05, 1e-15);
    EXPECT_NEAR(half[2][1], -0.1, 1e-15);
    EXPECT_NEAR(diameter<2>(half), 0.5 * diameter<2>(ys), 1e-15);
    EXPECT_THROW(scale<2>(0.0, ys), std::invalid_argument);
    EXPECT_THROW(scale<2>(1.5, ys), std::invalid_argument);
}

TEST(Diameter, MaxPairwiseDistance) {
    std::vector<TorusPoint<1>> none;
    EXPECT_THROW(diameter<1>(none), std::invalid_argument);
    std::vector<TorusPoint<1>> one{TorusPoint<1>::from_coords({0.3})};
    EXPECT_EQ(diameter<1>(one), 0.0);
    std::vector<TorusPoint<1>> three{TorusPoint<1>::from_coords({0.45}), TorusPoint<1>::from_coords({-0.45}),
                                     TorusPoint<1>::from_coords({0.4})};
    EXPECT_NEAR(diameter<1>(three), 0.15, 1e-15);
}

TEST(Sampling, UniformInBallStaysInBall) {
    SplitMix64 rng(4);
    double mean = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const auto v = uniform_in_ball<3>(rng, 0.2);
        EXPECT_LE(std::sqrt(v.norm2()), 0.2);
        mean += v[0];
    }
    EXPECT_NEAR(mean / 20000, 0.0, 0.005);
}

TEST(Sampling, GaussianDisplacementVariance) {
    SplitMix64 rng(5);
    double s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s2 += gaussian_displacement<2>(rng, 0.3).norm2();
    // E |Z|^2 = 2 * 0.09; sd of the mean about 0.18 * sqrt(2/2) / sqrt(n)
    EXPECT_NEAR(s2 / n, 0.18, 4.0 * 0.18 / std::sqrt(static_cast<double>(n)));
}

TEST(BallVolume, KnownValues) {
    EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
    EXPECT_NEAR(unit_ball_volume(2), M_PI, 1e-14);
    EXPECT_NEAR(unit_ball_volume(3), 4.0 * M_PI / 3.0, 1e-14);
    EXPECT_NEAR(unit_ball_volume(4), M_PI * M_PI / 2.0, 1e-14);
    EXPECT_NEAR(ball_volume(2, 0.5), M_PI / 4.0, 1e-15);
}

struct DimensionProbe {
    template <int D>
    int operator()() const {
        return D;
    }
};

TEST(Dispatch, RuntimeDimension) {
    using Probe = DimensionProbe;
    for (int d = 1; d <= 4; ++d) EXPECT_EQ(dispatch_dimension(d, Probe{}), d);
    EXPECT_THROW(dispatch_dimension(5, Probe{}), std::invalid_argument);
}

TEST(SeedDerivation, DistinctStreams) {
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}
