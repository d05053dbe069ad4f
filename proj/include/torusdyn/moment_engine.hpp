#pragma once

// Exact finite-n first and second moments of f, expressed through unit-scale
// overlap integrals of xi_1 that are estimated by Monte Carlo.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "torusdyn/functional.hpp"
#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(samples)
    std::uint64_t samples = 0;
};

/// Welford accumulator for weighted MC draws.
class RunningMoments {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    MomentEstimate estimate() const {
        return {mean_, n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0, n_};
    }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline double factorial(int m) { return std::tgamma(m + 1.0); }

/// j! ((k-j)!)^2, the pair-overlap combinatorial weight.
inline double overlap_weight(int j, int k) { return factorial(j) * factorial(k - j) * factorial(k - j); }

enum class AlphaSampling { Naive, Importance };

/// alpha(r) = E[ xi_r(X) ] for X a k-tuple of iid uniform points in Q.
/// Importance mode anchors X_1 uniformly and draws the others uniformly in
/// the ball of radius delta r around it, reweighting by the ball volumes.
template <int D, typename Rng>
MomentEstimate alpha(double r, const InteractionFunctional<D>& fnl, std::uint64_t budget, Rng& rng,
                     AlphaSampling mode = AlphaSampling::Importance) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("alpha: r must lie in (0, 1]");
    const int k = fnl.k;
    std::vector<TorusPoint<D>> xs(k);
    RunningMoments acc;
    const double rad = fnl.delta * r;
    const double weight = std::pow(ball_volume(D, rad), k - 1);
    for (std::uint64_t s = 0; s < budget; ++s) {
        if (mode == AlphaSampling::Naive) {
            for (auto& x : xs) x = uniform_point<D>(rng);
            acc.add(fnl(xs, r));
        } else {
            xs[0] = uniform_point<D>(rng);
            for (int m = 1; m < k; ++m) xs[m] = shift(xs[0], uniform_in_ball<D>(rng, rad));
            acc.add(weight * fnl(xs, r));
        }
    }
    return acc.estimate();
}

/// Unit-scale overlap integral over B_delta^{2k-j-1}:
///   int xi_1(0, y_2..y_k) xi_1(0, y_2..y_j, y_{k+1}..y_{2k-j}) dy.
template <int D, typename Rng>
MomentEstimate kappa_tilde(int j, const InteractionFunctional<D>& fnl, std::uint64_t budget, Rng& rng) {
    const int k = fnl.k;
    if (j < 1 || j > k) throw std::out_of_range("kappa_tilde: j must lie in 1..k");
    const int free_points = 2 * k - j - 1;
    const double volume = std::pow(ball_volume(D, fnl.delta), free_points);
    std::vector<TorusPoint<D>> a(k), b(k);
    RunningMoments acc;
    for (std::uint64_t s = 0; s < budget; ++s) {
        a[0] = b[0] = TorusPoint<D>{};
        for (int m = 1; m < j; ++m) a[m] = b[m] = project(uniform_in_ball<D>(rng, fnl.delta));
        for (int m = j; m < k; ++m) a[m] = project(uniform_in_ball<D>(rng, fnl.delta));
        for (int m = j; m < k; ++m) b[m] = project(uniform_in_ball<D>(rng, fnl.delta));
        const double va = fnl.evaluate_unit(a);
        acc.add(va == 0.0 ? 0.0 : volume * va * fnl.evaluate_unit(b));
    }
    return acc.estimate();
}

/// Runs `estimate(budget)` with doubling budgets until the relative standard
/// error drops below `rel_tol` or `max_budget` is reached.
template <typename Estimate>
MomentEstimate adaptive_budget(Estimate&& estimate, std::uint64_t start, std::uint64_t max_budget, double rel_tol) {
    MomentEstimate pooled{};
    double sum = 0.0, sum_sq_err = 0.0;
    std::uint64_t budget = start, total = 0;
    for (;;) {
        const auto e = estimate(budget);
        // combine batches weighted by size
        const double w = static_cast<double>(e.samples);
        sum += e.value * w;
        sum_sq_err += e.std_error * e.std_error * w * w;
        total += e.samples;
        pooled.value = sum / static_cast<double>(total);
        pooled.std_error = std::sqrt(sum_sq_err) / static_cast<double>(total);
        pooled.samples = total;
        if (pooled.std_error <= rel_tol * std::abs(pooled.value) || total >= max_budget) return pooled;
        budget = std::min(total, max_budget - total);
    }
}

/// Symbolic-or-finite limit of n r^d.
struct Gamma {
    enum class Kind { Zero, Finite, Infinity };
    Kind kind = Kind::Finite;
    double value = 1.0;

    static Gamma zero() { return {Kind::Zero, 0.0}; }
    static Gamma infinity() { return {Kind::Infinity, std::numeric_limits<double>::infinity()}; }
    static Gamma finite(double g) {
        if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("Gamma: finite gamma must be > 0");
        return {Kind::Finite, g};
    }
};

struct LimitConstants {
    int k = 2;
    int d = 1;
    double delta = 0.25;
    std::vector<MomentEstimate> kappa_tilde;  // index j-1
    MomentEstimate alpha_unit;                // int_{B_delta^{k-1}} xi_1(0, y) dy

    double kappa_tilde_at(int j) const {
        if (j < 1 || j > k) throw std::out_of_range("LimitConstants: j must lie in 1..k");
        return kappa_tilde[j - 1].value;
    }

    /// kappa_j = kappa~_j / (j! ((k-j)!)^2)
    double kappa(int j) const { return kappa_tilde_at(j) / overlap_weight(j, k); }

    std::vector<double> kappas() const {
        std::vector<double> out(k);
        for (int j = 1; j <= k; ++j) out[j - 1] = kappa(j);
        return out;
    }

    /// lambda_j = kappa_j gamma^{-j} / sum_l kappa_l gamma^{-l}. The limits
    /// gamma -> 0 and gamma -> infinity select the dominant power.
    std::vector<double> lambda(const Gamma& g) const {
        std::vector<double> out(k, 0.0);
        if (g.kind == Gamma::Kind::Zero) {
            out[k - 1] = 1.0;
            return out;
        }
        if (g.kind == Gamma::Kind::Infinity) {
            out[0] = 1.0;
            return out;
        }
        // log-sum-exp over log kappa_j - j log gamma
        std::vector<double> logs(k);
        double top = -std::numeric_limits<double>::infinity();
        for (int j = 1; j <= k; ++j) {
            const double kj = kappa(j);
            logs[j - 1] = kj > 0.0 ? std::log(kj) - j * std::log(g.value) : -std::numeric_limits<double>::infinity();
            top = std::max(top, logs[j - 1]);
        }
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += (out[j] = std::exp(logs[j] - top));
        for (auto& v : out) v /= sum;
        return out;
    }

    std::vector<double> lambda(double gamma) const {
        if (!(gamma > 0.0)) throw std::invalid_argument("lambda: gamma must be > 0");
        if (std::isinf(gamma)) return lambda(Gamma::infinity());
        return lambda(Gamma::finite(gamma));
    }
};

/// kappa~_1..kappa~_k and the unit-scale mean integral. `budget` draws each,
/// doubling up to 8x budget until the relative error is below rel_tol.
template <int D>
LimitConstants estimate_constants(const InteractionFunctional<D>& fnl, std::uint64_t budget, std::uint64_t seed,
                                  double rel_tol = 0.01) {
    LimitConstants c;
    c.k = fnl.k;
    c.d = D;
    c.delta = fnl.delta;
    for (int j = 1; j <= fnl.k; ++j) {
        std::uint64_t batch = 0;
        c.kappa_tilde.push_back(adaptive_budget(
            [&](std::uint64_t b) {
                SplitMix64 rng(derive_seed(seed, 100 + j, batch++));
                return kappa_tilde<D>(j, fnl, b, rng);
            },
            budget, 8 * budget, rel_tol));
    }
    // alpha(1) with the importance sampler is exactly the unit-scale integral
    std::uint64_t batch = 0;
    c.alpha_unit = adaptive_budget(
        [&](std::uint64_t b) {
            SplitMix64 rng(derive_seed(seed, 99, batch++));
            auto e = alpha<D>(1.0, fnl, b, rng, AlphaSampling::Importance);
            return e;
        },
        budget, 8 * budget, rel_tol);
    return c;
}

inline void check_scaling(double r, double delta) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("r must lie in (0, 1]");
    if (!(r * delta < 0.5)) throw std::invalid_argument("scale identity needs r < 1/(2 delta)");
}

/// alpha_j(r) = r^{d(2k-j-1)} kappa~_j.
inline double alpha_j(int j, double r, const LimitConstants& c) {
    check_scaling(r, c.delta);
    return std::pow(r, c.d * (2 * c.k - j - 1)) * c.kappa_tilde_at(j);
}

/// alpha(r) = r^{d(k-1)} times the unit-scale integral.
inline double alpha_of(double r, const LimitConstants& c) {
    check_scaling(r, c.delta);
    return std::pow(r, c.d * (c.k - 1)) * c.alpha_unit.value;
}

/// E f = n^k alpha(r) / k!.
inline double mean_f(double n, double r, const LimitConstants& c) {
    return std::pow(n, c.k) * alpha_of(r, c) / factorial(c.k);
}

/// var f = sum_{j=1}^k n^{2k-j} alpha_j(r) / (j! ((k-j)!)^2).
inline double var_f(double n, double r, const LimitConstants& c) {
    double s = 0.0;
    for (int j = 1; j <= c.k; ++j) s += std::pow(n, 2 * c.k - j) * alpha_j(j, r, c) / overlap_weight(j, c.k);
    return s;
}

/// theta_j(r) = E[ xi_r(X) xi_r(X' + Z) ] where X, X' are k-tuples sharing j
/// points and Z displaces every point of X' by an independent N(0, sigma^2
/// Delta I). Sampled with the same ball-anchored importance scheme as alpha:
/// the shared anchor is uniform, the rest of X lives in its delta r ball, and
/// the unshared points of X' live in the delta r ball around the displaced
/// anchor.
template <int D, typename Rng>
MomentEstimate theta_j_mc(int j, double r, double sigma, double lag, const InteractionFunctional<D>& fnl,
                          std::uint64_t budget, Rng& rng) {
    const int k = fnl.k;
    if (j < 1 || j > k) throw std::out_of_range("theta_j_mc: j must lie in 1..k");
    if (!(sigma >= 0.0) || !(lag >= 0.0)) throw std::invalid_argument("theta_j_mc: sigma and lag must be >= 0");
    check_scaling(r, fnl.delta);
    const double rad = fnl.delta * r;
    const double sd = sigma * std::sqrt(lag);
    const double weight = std::pow(ball_volume(D, rad), 2 * k - j - 1);
    std::vector<TorusPoint<D>> a(k), b(k);
    RunningMoments acc;
    for (std::uint64_t s = 0; s < budget; ++s) {
        a[0] = uniform_point<D>(rng);
        for (int m = 1; m < k; ++m) a[m] = shift(a[0], uniform_in_ball<D>(rng, rad));
        const double va = fnl(a, r);
        for (int m = 0; m < j; ++m) b[m] = sd > 0.0 ? shift(a[m], gaussian_displacement<D>(rng, sd)) : a[m];
        for (int m = j; m < k; ++m) b[m] = shift(b[0], uniform_in_ball<D>(rng, rad));
        acc.add(va == 0.0 ? 0.0 : weight * va * fnl(b, r));
    }
    return acc.estimate();
}

} // namespace torusdyn
