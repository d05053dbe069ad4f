#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "torusdyn/estimator.hpp"

using namespace torusdyn;

namespace {

// replicates of a stationary AR(1) on a grid of spacing h: corr(lag) = e^{-lag}
TrajectoryBatch ar1_batch(std::size_t reps, double horizon, double h, std::uint64_t seed) {
    TrajectoryBatch b;
    b.params = {10.0, horizon, 0.0, 1, 2, seed};
    b.grid = uniform_grid(horizon, h);
    b.replicates = reps;
    b.seeds.assign(reps, 0);
    b.values.resize(reps * b.grid.size());
    const double rho = std::exp(-h);
    SplitMix64 rng(seed);
    for (std::size_t r = 0; r < reps; ++r) {
        double x = standard_normal(rng);
        for (std::size_t g = 0; g < b.grid.size(); ++g) {
            if (g > 0) x = rho * x + std::sqrt(1.0 - rho * rho) * standard_normal(rng);
            b.values[r * b.grid.size() + g] = 3.0 + 2.0 * x;
        }
    }
    return b;
}

LimitConstants pair_constants_1d() {
    LimitConstants c;
    c.k = 2;
    c.d = 1;
    c.delta = 0.25;
    c.kappa_tilde = {{0.25, 0.0, 0}, {0.5, 0.0, 0}};
    c.alpha_unit = {0.5, 0.0, 0};
    return c;
}

} // namespace

TEST(Grid, UniformGrid) {
    const auto g = uniform_grid(1.0, 0.25);
    EXPECT_EQ(g, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
    EXPECT_EQ(uniform_grid(1.0, 0.1).size(), 11u);
    EXPECT_THROW(uniform_grid(1.0, 0.0), std::invalid_argument);
}

TEST(Batch, DeterministicAcrossThreads) {
    const auto f = make_pair_indicator<2>(0.25);
    const SimParams p{60.0, 1.0, 0.05, 2, 2, 17};
    const auto grid = uniform_grid(1.0, 0.25);
    const auto a = simulate_batch<2>(p, grid, f, 0.2, 40, Simulator::Marked, 1);
    const auto b = simulate_batch<2>(p, grid, f, 0.2, 40, Simulator::Marked, 3);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.seeds, b.seeds);
    EXPECT_EQ(a.seeds[5], replicate_seed(17, 5));
    EXPECT_NO_THROW(a.validate());
}

TEST(Batch, RejectsMismatchedOrder) {
    const auto f = make_pair_indicator<1>(0.25);
    const auto grid = uniform_grid(1.0, 0.5);
    EXPECT_THROW(simulate_batch<1>({10.0, 1.0, 0.0, 1, 3, 1}, grid, f, 0.1, 5), std::invalid_argument);
    const auto beyond = uniform_grid(2.0, 0.5);
    EXPECT_THROW(simulate_batch<1>({10.0, 1.0, 0.0, 1, 2, 1}, beyond, f, 0.1, 5), std::invalid_argument);
}

TEST(Covariance, RecoversAr1Correlation) {
    const auto b = ar1_batch(2000, 4.0, 0.25, 1);
    const std::vector<double> lags{0.0, 0.5, 1.0, 2.0};
    const auto curve = empirical_covariance(b, lags, Centering{3.0, 4.0});
    for (std::size_t i = 0; i < lags.size(); ++i)
        EXPECT_NEAR(curve.values[i], std::exp(-lags[i]), 4.0 * curve.std_error[i] + 1e-12) << "lag=" << lags[i];
    const auto emp = empirical_covariance(b, lags, Normalization::Empirical);
    EXPECT_NEAR(emp.values[0], 1.0, 0.02);
    for (std::size_t i = 0; i < lags.size(); ++i) EXPECT_NEAR(emp.values[i], curve.values[i], 0.03);
}

TEST(Covariance, StrideKeepsEstimate) {
    const auto b = ar1_batch(2000, 4.0, 0.25, 2);
    const std::vector<double> lags{0.5, 1.0};
    const auto s1 = empirical_covariance(b, lags, Centering{3.0, 4.0}, 1);
    const auto s2 = empirical_covariance(b, lags, Centering{3.0, 4.0}, 2);
    for (std::size_t i = 0; i < lags.size(); ++i)
        EXPECT_NEAR(s1.values[i], s2.values[i], 3.0 * std::hypot(s1.std_error[i], s2.std_error[i]));
    EXPECT_LE(s1.std_error[0], s2.std_error[0] * 1.05);
}

TEST(Covariance, Errors) {
    const auto few = ar1_batch(29, 1.0, 0.25, 3);
    const std::vector<double> lag0{0.0};
    EXPECT_THROW(empirical_covariance(few, lag0, Centering{}), std::invalid_argument);
    const auto b = ar1_batch(40, 1.0, 0.25, 3);
    const std::vector<double> off{0.3};
    EXPECT_THROW(empirical_covariance(b, off, Centering{}), std::invalid_argument);
    EXPECT_THROW(empirical_covariance(b, lag0, Centering{}, 0), std::invalid_argument);
    EXPECT_THROW(empirical_covariance(b, lag0, Normalization::Formula), std::invalid_argument);
}

TEST(Covariance, SlowRegimeSmallSystem) {
    // frozen positions, 1-d pair indicator: correlation sum_j lambda_j e^{-j t}
    const auto f = make_pair_indicator<1>(0.25);
    const auto c = pair_constants_1d();
    const double n = 200.0, r = 0.02;
    const SimParams p{n, 2.0, 0.0, 1, 2, 99};
    const auto grid = uniform_grid(2.0, 0.25);
    const auto b = simulate_batch<1>(p, grid, f, r, 3000);
    const std::vector<double> lags{0.0, 0.5, 1.0};
    const auto curve = empirical_covariance(b, lags, Normalization::Formula, Centering{mean_f(n, r, c), var_f(n, r, c)});
    const auto reg = RegimeSpec::slow(Gamma::finite(n * r));
    for (std::size_t i = 0; i < lags.size(); ++i)
        EXPECT_NEAR(curve.values[i], limit_cov(reg, lags[i], c), 4.0 * curve.std_error[i]) << "lag=" << lags[i];
}

TEST(Trapezoid, ExactForLinear) {
    const auto g = uniform_grid(1.0, 0.1);
    std::vector<double> y(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) y[i] = 2.0 * g[i] + 1.0;
    EXPECT_NEAR(trapezoid_to(g, y, 1.0), 2.0, 1e-12);
    EXPECT_NEAR(trapezoid_to(g, y, 0.55), 0.55 * 0.55 + 0.55, 1e-12);
    EXPECT_EQ(trapezoid_to(g, y, 0.0), 0.0);
}

TEST(IntegratedProcess, ConstantAndZero) {
    TrajectoryBatch b;
    b.params = {10.0, 1.0, 0.0, 1, 2, 0};
    b.grid = uniform_grid(1.0, 0.01);
    b.replicates = 3;
    b.seeds.assign(3, 0);
    b.values.assign(3 * b.grid.size(), 5.0);
    const Centering c{3.0, 4.0};
    const double mn = 0.5;  // scale 1 / sqrt(4 * 2 * 0.5) = 1/2
    const auto at0 = integrated_process(b, 0.0, c, mn);
    for (double v : at0) EXPECT_EQ(v, 0.0);
    const auto at = integrated_process(b, 0.6, c, mn);
    for (double v : at) EXPECT_NEAR(v, 0.6, 1e-12);
    EXPECT_THROW(integrated_process(b, 1.5, c, mn), std::out_of_range);
    EXPECT_THROW(integrated_process(b, 0.5, c, 0.0), std::invalid_argument);
    auto coarse = b;
    coarse.grid = uniform_grid(1.0, 0.02);
    coarse.values.assign(3 * coarse.grid.size(), 5.0);
    EXPECT_THROW(integrated_process(coarse, 0.5, c, mn), std::invalid_argument);
}

TEST(IntegratedProcess, CovarianceOfOrnsteinUhlenbeck) {
    // AR(1) with corr e^{-lag}: M = int_0^1 e^{-s} ds; for t >> 1 cov ~ t - 1 + e^{-t}
    const auto b = ar1_batch(3000, 3.0, 0.01, 4);
    const Centering c{3.0, 4.0};
    const auto mn = estimate_mn(b, c, 1.0, 0.01);
    EXPECT_NEAR(mn.value, 1.0 - std::exp(-1.0), 4.0 * mn.std_error + 1e-3);
    // exact: var int_0^t X = 2 (t - 1 + e^{-t})
    const double t = 2.0;
    const auto v = integrated_cov(b, t, t, c, 1.0);
    EXPECT_NEAR(v.value, (t - 1.0 + std::exp(-t)), 4.0 * v.std_error + 1e-3);
}

TEST(SampleCovariance, KnownValues) {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8};
    EXPECT_NEAR(sample_covariance(x, y).value, 2.0 * 5.0 / 3.0, 1e-12);
    const std::vector<double> one{1.0};
    EXPECT_THROW(sample_covariance(one, one), std::invalid_argument);
}

TEST(LinearCombination, Weights) {
    const auto b = ar1_batch(50, 1.0, 0.5, 5);
    const std::vector<std::size_t> idx{0, 2};
    const std::vector<double> w{1.0, -1.0};
    const auto out = linear_combination(b, idx, w, Centering{3.0, 4.0});
    for (std::size_t r = 0; r < 50; ++r) EXPECT_NEAR(out[r], (b.at(r, 0) - b.at(r, 2)) / 2.0, 1e-12);
}

TEST(KolmogorovSmirnov, StatisticExamples) {
    EXPECT_EQ(ks_two_sample_statistic({1, 2, 3}, {4, 5, 6}), 1.0);
    EXPECT_EQ(ks_two_sample_statistic({1, 2}, {1, 2}), 0.0);
    EXPECT_NEAR(ks_two_sample_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5, 1e-15);
    EXPECT_THROW(ks_two_sample_statistic({}, {1.0}), std::invalid_argument);
}

TEST(KolmogorovSmirnov, PermutationTest) {
    SplitMix64 rng(6);
    std::vector<double> a(300), b(300), shifted(300);
    for (auto& v : a) v = standard_normal(rng);
    for (auto& v : b) v = standard_normal(rng);
    for (auto& v : shifted) v = standard_normal(rng) + 0.5;
    EXPECT_GT(ks_permutation_test(a, b, 200, rng).p_value, 0.01);
    EXPECT_LT(ks_permutation_test(a, shifted, 200, rng).p_value, 0.01);
}

TEST(Gaussianity, NormalSamplePasses) {
    SplitMix64 rng(7);
    std::vector<double> xs(2000);
    for (auto& v : xs) v = 1.0 + 3.0 * standard_normal(rng);
    const auto rep = gaussianity_diagnostics(xs, rng);
    EXPECT_LT(std::abs(rep.skewness_z()), 4.0);
    EXPECT_LT(std::abs(rep.kurtosis_z()), 4.0);
    EXPECT_GT(rep.ecdf_p_value, 0.01);
    EXPECT_NEAR(rep.sd, 3.0, 0.2);
}

TEST(Gaussianity, PoissonSampleFails) {
    SplitMix64 rng(8);
    std::vector<double> xs(2000);
    for (auto& v : xs) v = static_cast<double>(poisson(rng, 2.0));
    const auto rep = gaussianity_diagnostics(xs, rng);
    EXPECT_GT(rep.skewness_z(), 4.0);
    EXPECT_LT(rep.ecdf_p_value, 0.01);
    std::vector<double> small(100, 0.0);
    EXPECT_THROW(gaussianity_diagnostics(small, rng), std::invalid_argument);
}

TEST(Mecke, SplitByPattern) {
    IntersectionPattern pat{2, {{1u, 1}, {2u, 1}, {3u, 1}}};
    std::vector<TorusPoint<1>> xs{TorusPoint<1>::from_coords({0.1}), TorusPoint<1>::from_coords({0.2}),
                                  TorusPoint<1>::from_coords({0.3})};
    const auto sets = split_by_pattern<1>(pat, xs);
    ASSERT_EQ(sets.size(), 2u);
    // masks in increasing order: {1} -> 0.1, {2} -> 0.2, {1,2} -> 0.3
    EXPECT_EQ(sets[0], (std::vector<TorusPoint<1>>{xs[0], xs[2]}));
    EXPECT_EQ(sets[1], (std::vector<TorusPoint<1>>{xs[1], xs[2]}));
    EXPECT_EQ(pat.subset_sizes(), (std::vector<int>{2, 2}));
    EXPECT_EQ(pat.total(), 3);
}

TEST(Mecke, FactorialMomentOfCount) {
    // sum over 2-subsets of 1 = N(N-1)/2, mean n^2/2
    const IntersectionPattern pat{1, {{1u, 2}}};
    const MeckeIntegrand<1> one = [](const SubsetTuple<1>&) { return 1.0; };
    SplitMix64 rng(9);
    const auto res = mecke_check<1>(one, pat, 4.0, 40000, 10, rng, 2);
    EXPECT_DOUBLE_EQ(res.rhs.value, 8.0);
    EXPECT_NEAR(res.lhs.value, 8.0, 4.0 * res.lhs.std_error);
}

TEST(Mecke, ZeroIntegrandAndErrors) {
    const IntersectionPattern pat{2, {{1u, 1}, {2u, 1}, {3u, 1}}};
    const MeckeIntegrand<2> zero = [](const SubsetTuple<2>&) { return 0.0; };
    SplitMix64 rng(10);
    const auto res = mecke_check<2>(zero, pat, 5.0, 100, 100, rng);
    EXPECT_EQ(res.lhs.value, 0.0);
    EXPECT_EQ(res.rhs.value, 0.0);
    EXPECT_THROW(mecke_check<2>(zero, pat, 25.0, 10, 10, rng), std::invalid_argument);
    EXPECT_THROW(mecke_check<2>(zero, pat, 5.0, 10, 10, rng, 3), std::invalid_argument);
    const IntersectionPattern big{1, {{1u, 7}}};
    EXPECT_THROW(mecke_check<2>(zero, big, 5.0, 10, 10, rng), std::invalid_argument);
    const IntersectionPattern bad_mask{1, {{2u, 1}}};
    EXPECT_THROW(mecke_check<2>(zero, bad_mask, 5.0, 10, 10, rng), std::invalid_argument);
}

TEST(Mecke, PairsSharingOnePoint) {
    // ordered pairs of 2-subsets sharing exactly one point, weighted by proximity
    const IntersectionPattern pat{2, {{1u, 1}, {2u, 1}, {3u, 1}}};
    const MeckeIntegrand<1> h = [](const SubsetTuple<1>& xs) {
        return distance(xs[0][0], xs[0][1]) < 0.2 && distance(xs[1][0], xs[1][1]) < 0.2 ? 1.0 : 0.0;
    };
    SplitMix64 rng(11);
    const auto res = mecke_check<1>(h, pat, 6.0, 20000, 200000, rng, 2);
    // exact rhs: n^3 * 0.4^2
    EXPECT_NEAR(res.rhs.value, 216.0 * 0.16, 4.0 * res.rhs.std_error);
    EXPECT_NEAR(res.lhs.value, res.rhs.value, 4.0 * std::hypot(res.lhs.std_error, res.rhs.std_error));
}
