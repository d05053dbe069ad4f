#pragma once

// Self-check suites shared by the command-line `verify` subcommand and the
// acceptance driver. Each check yields a named pass/fail line.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "torusdyn/estimator.hpp"
#include "torusdyn/functional.hpp"
#include "torusdyn/marked_process.hpp"
#include "torusdyn/moment_engine.hpp"
#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

using CheckList = std::vector<CheckResult>;

inline bool all_passed(const CheckList& checks) {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

inline std::string describe(double value, double target, double tol) {
    std::ostringstream os;
    os.precision(6);
    os << "value=" << value << " target=" << target << " tol=" << tol;
    return os.str();
}

/// |a - b| <= z * sqrt(se_a^2 + se_b^2)
inline bool within_joint(double a, double se_a, double b, double se_b, double z) {
    return std::abs(a - b) <= z * std::hypot(se_a, se_b);
}

// ---------------------------------------------------------------------------

inline CheckList verify_geometry(std::uint64_t seed = 1) {
    CheckList out;
    auto add = [&](std::string name, bool pass, std::string detail = {}) { out.push_back({std::move(name), pass, std::move(detail)}); };

    const auto a = TorusPoint<1>::from_coords({0.45});
    const auto b = TorusPoint<1>::from_coords({-0.45});
    add("wraparound distance", std::abs(distance(a, b) - 0.1) < 1e-15, describe(distance(a, b), 0.1, 1e-15));
    add("project(0.5) = -0.5", project<1>(std::array<double, 1>{0.5})[0] == -0.5);
    add("project(-0.5) = -0.5", project<1>(std::array<double, 1>{-0.5})[0] == -0.5);
    add("project(1.25) = 0.25", project<1>(std::array<double, 1>{1.25})[0] == 0.25);

    SplitMix64 rng(seed);
    bool translate_ok = true, scale_ok = true, diameter_ok = true, sym_ok = true;
    for (int t = 0; t < 1000; ++t) {
        std::vector<TorusPoint<3>> ys(4);
        const auto anchor = uniform_point<3>(rng);
        for (auto& y : ys) y = shift(anchor, uniform_in_ball<3>(rng, 0.1));
        const auto x = uniform_point<3>(rng);
        const auto moved = translate<3>(ys, x);
        for (std::size_t i = 0; i < ys.size(); ++i)
            for (std::size_t j = 0; j < ys.size(); ++j) {
                translate_ok &= std::abs(distance(moved[i], moved[j]) - distance(ys[i], ys[j])) < 1e-12;
                sym_ok &= distance(ys[i], ys[j]) == distance(ys[j], ys[i]);
            }
        const auto centred = translate<3>(ys, project<3>(-1.0 * anchor.lift()));
        const double alpha = 0.25 + 0.75 * uniform01(rng);
        const auto scaled = scale<3>(alpha, centred);
        scale_ok &= std::abs(diameter<3>(scaled) - alpha * diameter<3>(centred)) < 1e-12;
        double brute = 0.0;
        for (std::size_t i = 0; i < ys.size(); ++i)
            for (std::size_t j = 0; j < ys.size(); ++j) brute = std::max(brute, distance(ys[i], ys[j]));
        diameter_ok &= diameter<3>(ys) == brute;
    }
    add("translation invariance of rho", translate_ok);
    add("symmetry of rho", sym_ok);
    add("diameter scales linearly for local sets", scale_ok);
    add("diameter equals max pairwise distance", diameter_ok);
    return out;
}

// ---------------------------------------------------------------------------

inline CheckList verify_functional(std::uint64_t seed = 2) {
    CheckList out;
    SplitMix64 rng(seed);
    bool agree = true;
    const auto tri = make_subgraph_count<2>(GeometricPattern::complete(3), 0.3, false);
    const auto pair = make_pair_indicator<3>(0.25);
    for (int t = 0; t < 30; ++t) {
        std::vector<TorusPoint<2>> p2(200);
        for (auto& p : p2) p = uniform_point<2>(rng);
        agree &= evaluate_f<2>(p2, tri, 0.5) == evaluate_f_brute_force<2>(p2, tri, 0.5);
        std::vector<TorusPoint<3>> p3(300);
        for (auto& p : p3) p = uniform_point<3>(rng);
        agree &= evaluate_f<3>(p3, pair, 0.4) == evaluate_f_brute_force<3>(p3, pair, 0.4);
    }
    out.push_back({"cell-list enumeration equals brute force", agree, {}});

    const auto pair1 = make_pair_indicator<1>(0.25);
    const auto a = alpha<1>(0.1, pair1, 200000, rng, AlphaSampling::Naive);
    const bool alpha_ok = std::abs(a.value - 0.05) <= 4.0 * a.std_error;
    out.push_back({"alpha(0.1) = 2 delta r for the 1-d pair indicator", alpha_ok, describe(a.value, 0.05, 4.0 * a.std_error)});
    return out;
}

// ---------------------------------------------------------------------------

struct MeckeCase {
    std::string name;
    IntersectionPattern pattern;
    MeckeIntegrand<2> h;
    double n = 5.0;
    std::optional<double> exact;
};

inline std::vector<MeckeCase> mecke_battery() {
    auto diam_le = [](const std::vector<TorusPoint<2>>& xs, double r) { return diameter<2>(xs) <= r ? 1.0 : 0.0; };
    std::vector<MeckeCase> cases;
    {
        MeckeCase c{"single 2-subsets, h = 1", {1, {{1U, 2}}}, [](const SubsetTuple<2>&) { return 1.0; }, 5.0, 12.5};
        cases.push_back(c);
    }
    {
        MeckeCase c{"two disjoint 2-subsets, h = 1", {2, {{1U, 2}, {2U, 2}}}, [](const SubsetTuple<2>&) { return 1.0; }, 5.0,
                    std::pow(5.0, 4) / 4.0};
        cases.push_back(c);
    }
    {
        MeckeCase c{"2-subsets sharing one point, local pair indicators",
                    {2, {{1U, 1}, {2U, 1}, {3U, 1}}},
                    [=](const SubsetTuple<2>& x) { return diam_le(x[0], 0.3) * diam_le(x[1], 0.3); },
                    8.0,
                    std::nullopt};
        cases.push_back(c);
    }
    {
        MeckeCase c{"identical 3-subsets, triangle indicator", {2, {{3U, 3}}},
                    [=](const SubsetTuple<2>& x) { return diam_le(x[0], 0.35); }, 8.0, std::nullopt};
        cases.push_back(c);
    }
    {
        MeckeCase c{"three 2-subsets through a common point",
                    {3, {{1U, 1}, {2U, 1}, {4U, 1}, {7U, 1}}},
                    [=](const SubsetTuple<2>& x) { return diam_le(x[0], 0.3) * diam_le(x[1], 0.3) * diam_le(x[2], 0.3); },
                    6.0,
                    std::nullopt};
        cases.push_back(c);
    }
    return cases;
}

inline CheckList verify_mecke(std::uint64_t reps = 20000, std::uint64_t inner = 400000, std::uint64_t seed = 3) {
    CheckList out;
    int idx = 0;
    for (const auto& c : mecke_battery()) {
        SplitMix64 rng(derive_seed(seed, 500, idx++));
        const auto res = mecke_check<2>(c.h, c.pattern, c.n, reps, inner, rng);
        const bool pass = within_joint(res.lhs.value, res.lhs.std_error, res.rhs.value, res.rhs.std_error, 3.0) &&
                          (!c.exact || within_joint(res.lhs.value, res.lhs.std_error, *c.exact, 0.0, 3.0));
        std::ostringstream os;
        os.precision(6);
        os << "lhs=" << res.lhs.value << " +- " << res.lhs.std_error << " rhs=" << res.rhs.value << " +- " << res.rhs.std_error;
        if (c.exact) os << " exact=" << *c.exact;
        out.push_back({"mecke: " + c.name, pass, os.str()});
    }
    return out;
}

// ---------------------------------------------------------------------------

struct EquivalenceSetup {
    SimParams params{50.0, 1.0, 0.05, 2, 2, 11};
    double delta = 0.25;
    double r = 0.4;
    std::size_t replicates = 10000;
    int permutations = 200;
};

struct ColumnStats {
    MomentEstimate mean, variance, lag_cov;
};

inline ColumnStats column_stats(const TrajectoryBatch& b, std::size_t g0, std::size_t g1) {
    std::vector<double> x(b.replicates), y(b.replicates);
    for (std::size_t i = 0; i < b.replicates; ++i) {
        x[i] = b.at(i, g0);
        y[i] = b.at(i, g1);
    }
    ColumnStats s;
    RunningMoments m;
    for (double v : x) m.add(v);
    s.mean = m.estimate();
    s.variance = sample_covariance(x, x);
    s.lag_cov = sample_covariance(x, y);
    return s;
}

inline CheckList verify_equivalence(const EquivalenceSetup& setup, int threads) {
    const auto fnl = make_pair_indicator<2>(setup.delta);
    const std::vector<double> grid{0.0, 0.5, 1.0};
    SimParams pm = setup.params, pd = setup.params;
    pd.seed = derive_seed(setup.params.seed, 1);
    const auto marked = simulate_batch<2>(pm, grid, fnl, setup.r, setup.replicates, Simulator::Marked, threads);
    const auto direct = simulate_batch<2>(pd, grid, fnl, setup.r, setup.replicates, Simulator::Direct, threads);
    const auto sm = column_stats(marked, 0, 1);
    const auto sd = column_stats(direct, 0, 1);

    CheckList out;
    auto cmp = [&](const std::string& name, const MomentEstimate& a, const MomentEstimate& b) {
        std::ostringstream os;
        os.precision(6);
        os << "marked=" << a.value << " +- " << a.std_error << " direct=" << b.value << " +- " << b.std_error;
        out.push_back({name, within_joint(a.value, a.std_error, b.value, b.std_error, 3.0), os.str()});
    };
    cmp("equivalence: mean of f(0)", sm.mean, sd.mean);
    cmp("equivalence: variance of f(0)", sm.variance, sd.variance);
    cmp("equivalence: covariance of f(0), f(0.5)", sm.lag_cov, sd.lag_cov);

    std::vector<double> a(marked.replicates), b(direct.replicates);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = marked.at(i, 0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = direct.at(i, 0);
    SplitMix64 rng(derive_seed(setup.params.seed, 2));
    const auto ks = ks_permutation_test(std::span<const double>(a), std::span<const double>(b), setup.permutations, rng);
    std::ostringstream os;
    os << "D=" << ks.statistic << " p=" << ks.p_value;
    out.push_back({"equivalence: two-sample ECDF test on f(0) at 1%", ks.p_value > 0.01, os.str()});
    return out;
}

// ---------------------------------------------------------------------------

struct GaussianitySetup {
    double n = 500.0;
    double gamma = 1.0;  // n r^d
    double delta = 0.25;
    double sigma = 0.0;
    std::size_t replicates = 2000;
    std::uint64_t seed = 21;
};

inline CheckList verify_gaussianity(const GaussianitySetup& setup, int threads) {
    const auto fnl = make_pair_indicator<1>(setup.delta);
    const double r = setup.gamma / setup.n;
    const SimParams p{setup.n, 0.5, setup.sigma, 1, 2, setup.seed};
    const std::vector<double> grid{0.0, 0.5};
    const auto batch = simulate_batch<1>(p, grid, fnl, r, setup.replicates, Simulator::Marked, threads);
    const auto c = sample_centering(batch);

    CheckList out;
    auto probe = [&](const std::string& name, const std::vector<double>& xs, std::uint64_t stream) {
        SplitMix64 rng(derive_seed(setup.seed, 9, stream));
        const auto rep = gaussianity_diagnostics(std::span<const double>(xs), rng);
        std::ostringstream os;
        os.precision(4);
        os << "skew=" << rep.skewness << " (se " << rep.skewness_se << ") exkurt=" << rep.excess_kurtosis << " (se "
           << rep.kurtosis_se << ")";
        out.push_back({name + ": skewness within 4 se", std::abs(rep.skewness_z()) <= 4.0, os.str()});
        out.push_back({name + ": excess kurtosis within 4 se", std::abs(rep.kurtosis_z()) <= 4.0, os.str()});
    };
    const std::vector<std::size_t> at0{0}, both{0, 1};
    const std::vector<double> w1{1.0}, w2{1.0, 1.0};
    probe("f(0)", linear_combination(batch, at0, w1, c), 0);
    probe("f(0) + f(0.5)", linear_combination(batch, both, w2, c), 1);
    return out;
}

} // namespace torusdyn
