#pragma once

// Replicate-level statistics of simulated trajectories: time-pooled
// covariance curves, the integrated process, Gaussianity and two-sample
// diagnostics, and a brute-force check of the multivariate Mecke formula.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusdyn/functional.hpp"
#include "torusdyn/limit_covariance.hpp"
#include "torusdyn/marked_process.hpp"
#include "torusdyn/moment_engine.hpp"
#include "torusdyn/parallel.hpp"
#include "torusdyn/rng.hpp"

namespace torusdyn {

enum class Simulator { Marked, Direct };

inline const char* to_string(Simulator s) { return s == Simulator::Marked ? "marked" : "direct"; }

/// f sampled on a time grid, one row per replicate.
struct TrajectoryBatch {
    SimParams params;
    double r = 0.0;
    Simulator simulator = Simulator::Marked;
    std::vector<double> grid;
    std::size_t replicates = 0;
    std::vector<double> values;        // replicates x grid.size(), row-major
    std::vector<std::uint64_t> seeds;  // per-replicate seed ledger

    double at(std::size_t rep, std::size_t g) const { return values[rep * grid.size() + g]; }
    std::span<const double> row(std::size_t rep) const { return {values.data() + rep * grid.size(), grid.size()}; }

    void validate() const {
        if (grid.empty()) throw std::invalid_argument("TrajectoryBatch: empty grid");
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("TrajectoryBatch: grid must be increasing");
        if (values.size() != replicates * grid.size()) throw std::invalid_argument("TrajectoryBatch: matrix size mismatch");
        if (seeds.size() != replicates) throw std::invalid_argument("TrajectoryBatch: seed ledger size mismatch");
    }
};

inline std::uint64_t replicate_seed(std::uint64_t root, std::size_t replicate) { return derive_seed(root, 7, replicate); }

/// f along the grid for a single replicate.
template <int D>
std::vector<double> simulate_replicate(const SimParams& p, std::span<const double> grid, const InteractionFunctional<D>& fnl,
                                       double r, Simulator sim) {
    std::vector<double> out(grid.size());
    if (sim == Simulator::Marked) {
        validate_grid(grid, p.T);
        auto proc = sample_marked_process<D>(p, PathHistory::LastOnly);
        std::vector<TorusPoint<D>> pts;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            snapshot_into(proc, grid[g], pts);
            out[g] = evaluate_f<D>(pts, fnl, r);
        }
    } else {
        const auto frames = sample_direct_dynamic<D>(p, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) out[g] = evaluate_f<D>(frames[g], fnl, r);
    }
    return out;
}

/// Simulates `replicates` independent trajectories. Replicate i uses seed
/// replicate_seed(params.seed, i), so the batch is identical for any thread
/// count.
template <int D>
TrajectoryBatch simulate_batch(const SimParams& params, std::span<const double> grid, const InteractionFunctional<D>& fnl,
                               double r, std::size_t replicates, Simulator sim = Simulator::Marked, int threads = 1) {
    params.validate();
    if (params.k != fnl.k) throw std::invalid_argument("simulate_batch: functional order differs from params.k");
    validate_grid(grid, params.T);
    TrajectoryBatch b;
    b.params = params;
    b.r = r;
    b.simulator = sim;
    b.grid.assign(grid.begin(), grid.end());
    b.replicates = replicates;
    b.values.assign(replicates * grid.size(), 0.0);
    b.seeds.resize(replicates);
    for (std::size_t i = 0; i < replicates; ++i) b.seeds[i] = replicate_seed(params.seed, i);
    parallel_for(replicates, threads, [&](std::size_t i) {
        SimParams p = params;
        p.seed = b.seeds[i];
        const auto row = simulate_replicate<D>(p, grid, fnl, r, sim);
        std::copy(row.begin(), row.end(), b.values.begin() + static_cast<std::ptrdiff_t>(i * grid.size()));
    });
    return b;
}

/// Evenly spaced grid 0, h, 2h, ..., up to `horizon` (inclusive within 1e-9).
inline std::vector<double> uniform_grid(double horizon, double spacing) {
    if (!(spacing > 0.0) || !(horizon >= 0.0)) throw std::invalid_argument("uniform_grid: bad spacing or horizon");
    const auto steps = static_cast<std::size_t>(std::floor(horizon / spacing + 1e-9));
    std::vector<double> g(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) g[i] = static_cast<double>(i) * spacing;
    return g;
}

/// Mean and variance used to centre and scale f.
struct Centering {
    double mean = 0.0;
    double variance = 1.0;
};

enum class Normalization { Formula, Empirical };

inline Centering sample_centering(const TrajectoryBatch& b) {
    RunningMoments acc;
    for (double v : b.values) acc.add(v);
    return {acc.mean(), acc.variance()};
}

namespace detail {

/// Index pairs (a, b) with grid[b] - grid[a] == lag (to 1e-9), a on the stride.
inline std::vector<std::pair<std::size_t, std::size_t>> lag_pairs(std::span<const double> grid, double lag, std::size_t stride) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const double tol = 1e-9 * std::max(1.0, lag);
    for (std::size_t a = 0; a < grid.size(); a += stride) {
        const double target = grid[a] + lag;
        auto it = std::lower_bound(grid.begin(), grid.end(), target - tol);
        if (it != grid.end() && std::abs(*it - target) <= tol) pairs.emplace_back(a, static_cast<std::size_t>(it - grid.begin()));
    }
    return pairs;
}

} // namespace detail

inline constexpr std::size_t kMinReplicates = 30;

/// Time-pooled normalized covariance. For each lag, each replicate contributes
/// the average of (f(s) - m)(f(s + lag) - m) / v over all grid starts s on the
/// stride; the estimate is the replicate mean and the error the replicate
/// standard error.
inline CovarianceCurve empirical_covariance(const TrajectoryBatch& b, std::span<const double> lags, const Centering& c,
                                            std::size_t stride = 1) {
    b.validate();
    if (b.replicates < kMinReplicates) throw std::invalid_argument("empirical_covariance: need at least 30 replicates");
    if (stride == 0) throw std::invalid_argument("empirical_covariance: stride must be >= 1");
    CovarianceCurve curve;
    for (double lag : lags) {
        const auto pairs = detail::lag_pairs(b.grid, lag, stride);
        if (pairs.empty()) throw std::invalid_argument("empirical_covariance: lag " + std::to_string(lag) + " is not a grid difference");
        RunningMoments acc;
        for (std::size_t rep = 0; rep < b.replicates; ++rep) {
            double s = 0.0;
            for (auto [x, y] : pairs) s += (b.at(rep, x) - c.mean) * (b.at(rep, y) - c.mean);
            acc.add(s / (static_cast<double>(pairs.size()) * c.variance));
        }
        const auto e = acc.estimate();
        curve.lags.push_back(lag);
        curve.values.push_back(e.value);
        curve.std_error.push_back(e.std_error);
    }
    return curve;
}

inline CovarianceCurve empirical_covariance(const TrajectoryBatch& b, std::span<const double> lags, Normalization mode,
                                            const std::optional<Centering>& formula = std::nullopt, std::size_t stride = 1) {
    if (mode == Normalization::Formula) {
        if (!formula) throw std::invalid_argument("empirical_covariance: formula mode needs mean and variance");
        return empirical_covariance(b, lags, *formula, stride);
    }
    return empirical_covariance(b, lags, sample_centering(b), stride);
}

/// Integral of a grid-sampled function over [0, t] by the trapezoid rule,
/// with linear interpolation on the last partial interval.
inline double trapezoid_to(std::span<const double> grid, std::span<const double> y, double t) {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= t) {
            acc += 0.5 * (y[i] + y[i - 1]) * (grid[i] - grid[i - 1]);
        } else {
            if (t > grid[i - 1]) {
                const double w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
                const double yt = y[i - 1] + w * (y[i] - y[i - 1]);
                acc += 0.5 * (yt + y[i - 1]) * (t - grid[i - 1]);
            }
            break;
        }
    }
    return acc;
}

inline constexpr double kMaxIntegrationSpacing = 0.01;

/// Per-replicate integral over [0, t] of f~ = (f - m) / sqrt(v) / sqrt(2 M_n).
inline std::vector<double> integrated_process(const TrajectoryBatch& b, double t, const Centering& c, double mn) {
    b.validate();
    if (b.grid.front() != 0.0) throw std::invalid_argument("integrated_process: grid must start at 0");
    if (t < 0.0 || t > b.grid.back() + 1e-12) throw std::out_of_range("integrated_process: t beyond grid");
    for (std::size_t i = 1; i < b.grid.size(); ++i)
        if (b.grid[i] - b.grid[i - 1] > kMaxIntegrationSpacing + 1e-12)
            throw std::invalid_argument("integrated_process: grid spacing must be <= 0.01");
    if (!(mn > 0.0)) throw std::invalid_argument("integrated_process: M_n must be > 0");
    const double scale = 1.0 / std::sqrt(c.variance * 2.0 * mn);
    std::vector<double> out(b.replicates);
    std::vector<double> y(b.grid.size());
    for (std::size_t rep = 0; rep < b.replicates; ++rep) {
        const auto row = b.row(rep);
        for (std::size_t g = 0; g < y.size(); ++g) y[g] = (row[g] - c.mean) * scale;
        out[rep] = trapezoid_to(b.grid, y, t);
    }
    return out;
}

/// Sample covariance of two per-replicate quantities, with the standard error
/// of the mean of the centred products.
inline MomentEstimate sample_covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("sample_covariance: need matching samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    RunningMoments acc;
    for (std::size_t i = 0; i < x.size(); ++i) acc.add((x[i] - mx) * (y[i] - my));
    auto e = acc.estimate();
    e.value *= n / (n - 1.0);
    return e;
}

/// Covariance over replicates of the integrated process at t1 and t2; the
/// white-noise limit predicts min(t1, t2).
inline MomentEstimate integrated_cov(const TrajectoryBatch& b, double t1, double t2, const Centering& c, double mn) {
    const auto i1 = integrated_process(b, t1, c, mn);
    const auto i2 = integrated_process(b, t2, c, mn);
    return sample_covariance(i1, i2);
}

/// M_n = integral over [0, max_lag] of the normalized covariance, by the
/// trapezoid rule on lags 0, step, 2 step, ...; computed per replicate so the
/// standard error is replicate-level.
inline MomentEstimate estimate_mn(const TrajectoryBatch& b, const Centering& c, double max_lag = 1.0, double step = 0.01) {
    const auto lags = uniform_grid(max_lag, step);
    const auto curve = empirical_covariance(b, lags, c);
    // recompute per replicate for the error bar
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs;
    for (double lag : lags) pairs.push_back(detail::lag_pairs(b.grid, lag, 1));
    RunningMoments acc;
    std::vector<double> per_lag(lags.size());
    for (std::size_t rep = 0; rep < b.replicates; ++rep) {
        for (std::size_t l = 0; l < lags.size(); ++l) {
            double s = 0.0;
            for (auto [x, y] : pairs[l]) s += (b.at(rep, x) - c.mean) * (b.at(rep, y) - c.mean);
            per_lag[l] = s / (static_cast<double>(pairs[l].size()) * c.variance);
        }
        acc.add(trapezoid_to(lags, per_lag, max_lag));
    }
    auto e = acc.estimate();
    e.value = trapezoid_to(lags, curve.values, max_lag);
    return e;
}

/// sum_i w_i (f(t_i) - m) / sqrt(v) per replicate (Cramer-Wold probes).
inline std::vector<double> linear_combination(const TrajectoryBatch& b, std::span<const std::size_t> grid_index,
                                              std::span<const double> weights, const Centering& c) {
    if (grid_index.size() != weights.size()) throw std::invalid_argument("linear_combination: size mismatch");
    std::vector<double> out(b.replicates, 0.0);
    const double sd = std::sqrt(c.variance);
    for (std::size_t rep = 0; rep < b.replicates; ++rep)
        for (std::size_t i = 0; i < weights.size(); ++i) out[rep] += weights[i] * (b.at(rep, grid_index[i]) - c.mean) / sd;
    return out;
}

// ---------------------------------------------------------------------------
// Distribution diagnostics

/// Kolmogorov-Smirnov distance between two samples; ties handled by stepping
/// over equal values together.
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.size() || j < b.size()) {
        double v;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) v = a[i];
        else v = b[j];
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample KS test with a permutation p-value.
template <typename Rng>
TestResult ks_permutation_test(std::span<const double> a, std::span<const double> b, int permutations, Rng& rng) {
    TestResult res;
    res.statistic = ks_two_sample_statistic({a.begin(), a.end()}, {b.begin(), b.end()});
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    int at_least = 0;
    for (int p = 0; p < permutations; ++p) {
        // Fisher-Yates with the library's uniform draws
        for (std::size_t i = pooled.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
            std::swap(pooled[i], pooled[std::min(j, i)]);
        }
        const std::vector<double> x(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(a.size()));
        const std::vector<double> y(pooled.begin() + static_cast<std::ptrdiff_t>(a.size()), pooled.end());
        if (ks_two_sample_statistic(x, y) >= res.statistic - 1e-15) ++at_least;
    }
    res.p_value = (1.0 + at_least) / (1.0 + permutations);
    return res;
}

struct GaussianityReport {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double skewness_se = 0.0;
    double excess_kurtosis = 0.0;
    double kurtosis_se = 0.0;
    double ecdf_distance = 0.0;  // sup |F_n - Phi((x - mean)/sd)|
    double ecdf_p_value = 1.0;   // Monte Carlo calibrated (Lilliefors-type)

    double skewness_z() const { return skewness / skewness_se; }
    double kurtosis_z() const { return excess_kurtosis / kurtosis_se; }
};

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Sup distance between the ECDF and the normal fitted by mean and sd.
inline double fitted_normal_distance(std::vector<double> xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::sort(xs.begin(), xs.end());
    double best = 0.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        std::size_t j = i;
        while (j < xs.size() && xs[j] == xs[i]) ++j;
        const double f = sd > 0.0 ? normal_cdf((xs[i] - mean) / sd) : 0.5;
        best = std::max({best, std::abs(static_cast<double>(i) / n - f), std::abs(static_cast<double>(j) / n - f)});
        i = j;
    }
    return best;
}

} // namespace detail

/// Sample skewness g1 and excess kurtosis g2 with their standard errors
/// under normality, plus an ECDF distance to the fitted normal whose p-value
/// is calibrated by simulating normal samples of the same size.
template <typename Rng>
GaussianityReport gaussianity_diagnostics(std::span<const double> xs, Rng& rng, int calibration_draws = 200) {
    if (xs.size() < 500) throw std::invalid_argument("gaussianity_diagnostics: need at least 500 samples");
    GaussianityReport rep;
    const double n = static_cast<double>(xs.size());
    rep.n = xs.size();
    rep.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - rep.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    rep.sd = std::sqrt(m2 * n / (n - 1.0));
    rep.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    rep.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    rep.skewness_se = std::sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)));
    rep.kurtosis_se = 2.0 * rep.skewness_se * std::sqrt((n * n - 1.0) / ((n - 3.0) * (n + 5.0)));

    rep.ecdf_distance = detail::fitted_normal_distance({xs.begin(), xs.end()});
    int at_least = 0;
    std::vector<double> sim(xs.size());
    for (int c = 0; c < calibration_draws; ++c) {
        for (auto& v : sim) v = standard_normal(rng);
        if (detail::fitted_normal_distance(sim) >= rep.ecdf_distance) ++at_least;
    }
    rep.ecdf_p_value = (1.0 + at_least) / (1.0 + calibration_draws);
    return rep;
}

// ---------------------------------------------------------------------------
// Multivariate Mecke formula

/// Sizes I_J of the blocks of an intersection pattern of ell subsets, keyed
/// by the bitmask of J (bit i-1 set iff i in J).
struct IntersectionPattern {
    int ell = 1;
    std::map<unsigned, int> counts;

    int total() const {
        int s = 0;
        for (auto [mask, c] : counts) s += c;
        return s;
    }

    /// |X_i| = sum over J containing i of I_J.
    std::vector<int> subset_sizes() const {
        std::vector<int> sizes(ell, 0);
        for (auto [mask, c] : counts)
            for (int i = 0; i < ell; ++i)
                if (mask >> i & 1U) sizes[i] += c;
        return sizes;
    }

    void validate() const {
        if (ell < 1 || ell > 8) throw std::invalid_argument("IntersectionPattern: ell must be in 1..8");
        for (auto [mask, c] : counts) {
            if (mask == 0 || mask >= (1U << ell)) throw std::invalid_argument("IntersectionPattern: block mask out of range");
            if (c < 0) throw std::invalid_argument("IntersectionPattern: negative block size");
        }
    }
};

template <int D>
using SubsetTuple = std::vector<std::vector<TorusPoint<D>>>;

template <int D>
using MeckeIntegrand = std::function<double(const SubsetTuple<D>&)>;

/// Psi_I: fills the blocks, in increasing mask order, with consecutive points
/// of the tuple and returns X_1..X_ell.
template <int D>
SubsetTuple<D> split_by_pattern(const IntersectionPattern& pat, std::span<const TorusPoint<D>> xs) {
    SubsetTuple<D> out(pat.ell);
    std::size_t next = 0;
    for (auto [mask, c] : pat.counts)
        for (int m = 0; m < c; ++m, ++next)
            for (int i = 0; i < pat.ell; ++i)
                if (mask >> i & 1U) out[i].push_back(xs[next]);
    return out;
}

namespace detail {

/// Sum of h over every ordered tuple of subsets of `pts` obeying the pattern:
/// blocks are assigned disjoint point sets in increasing mask order.
template <int D>
double sum_over_pattern(std::span<const TorusPoint<D>> pts, const IntersectionPattern& pat, const MeckeIntegrand<D>& h) {
    std::vector<std::pair<unsigned, int>> blocks(pat.counts.begin(), pat.counts.end());
    std::vector<char> used(pts.size(), 0);
    std::vector<std::vector<std::size_t>> chosen(blocks.size());
    double total = 0.0;

    std::function<void(std::size_t, std::size_t)> fill = [&](std::size_t block, std::size_t from) {
        if (block == blocks.size()) {
            SubsetTuple<D> xs(pat.ell);
            for (std::size_t b = 0; b < blocks.size(); ++b)
                for (auto idx : chosen[b])
                    for (int i = 0; i < pat.ell; ++i)
                        if (blocks[b].first >> i & 1U) xs[i].push_back(pts[idx]);
            total += h(xs);
            return;
        }
        if (static_cast<int>(chosen[block].size()) == blocks[block].second) {
            fill(block + 1, 0);
            return;
        }
        for (std::size_t p = from; p < pts.size(); ++p) {
            if (used[p]) continue;
            used[p] = 1;
            chosen[block].push_back(p);
            fill(block, p + 1);
            chosen[block].pop_back();
            used[p] = 0;
        }
    };
    fill(0, 0);
    return total;
}

} // namespace detail

struct MeckeResult {
    MomentEstimate lhs;  // brute force over simulated Poisson processes
    MomentEstimate rhs;  // n^{|I|} E[h(Psi_I(X))] / prod I_J!
};

inline constexpr int kMeckeMaxPoints = 6;
inline constexpr double kMeckeMaxIntensity = 20.0;

/// Both sides of the multivariate Mecke identity for a Poisson process of
/// intensity n times the uniform law on the torus. `subset_size`, when set,
/// requires every X_i to have that many points.
template <int D, typename Rng>
MeckeResult mecke_check(const MeckeIntegrand<D>& h, const IntersectionPattern& pat, double n, std::uint64_t reps,
                        std::uint64_t inner_samples, Rng& rng, std::optional<int> subset_size = std::nullopt) {
    pat.validate();
    if (pat.total() > kMeckeMaxPoints) throw std::invalid_argument("mecke_check: |I| must be <= 6");
    if (!(n > 0.0 && n <= kMeckeMaxIntensity)) throw std::invalid_argument("mecke_check: n must lie in (0, 20]");
    if (subset_size) {
        for (int s : pat.subset_sizes())
            if (s != *subset_size) throw std::invalid_argument("mecke_check: pattern infeasible for the subset size");
    }
    MeckeResult res;
    RunningMoments lhs;
    std::vector<TorusPoint<D>> pts;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        pts.resize(poisson(rng, n));
        for (auto& p : pts) p = uniform_point<D>(rng);
        lhs.add(detail::sum_over_pattern<D>(pts, pat, h));
    }
    res.lhs = lhs.estimate();

    double factor = std::pow(n, pat.total());
    for (auto [mask, c] : pat.counts) factor /= factorial(c);
    RunningMoments inner;
    std::vector<TorusPoint<D>> xs(pat.total());
    for (std::uint64_t s = 0; s < inner_samples; ++s) {
        for (auto& x : xs) x = uniform_point<D>(rng);
        inner.add(h(split_by_pattern<D>(pat, xs)));
    }
    const auto e = inner.estimate();
    res.rhs = {factor * e.value, factor * e.std_error, e.samples};
    return res;
}

} // namespace torusdyn
