#pragma once

// Limiting covariance structures of the normalized statistic in the slow,
// moderate and fast motion regimes, the motion damping factors zeta_j, and
// classification of power-law parameter scalings into regimes.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "torusdyn/functional.hpp"
#include "torusdyn/moment_engine.hpp"
#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

enum class RegimeKind { Slow, Moderate, Fast };

inline const char* to_string(RegimeKind k) {
    switch (k) {
    case RegimeKind::Slow: return "slow";
    case RegimeKind::Moderate: return "moderate";
    case RegimeKind::Fast: return "fast";
    }
    return "?";
}

struct RegimeSpec {
    RegimeKind kind = RegimeKind::Slow;
    double beta = 0.0;  // moderate only: lim (sigma / r)^2
    Gamma gamma;        // lim n r^d

    static RegimeSpec slow(Gamma g) { return {RegimeKind::Slow, 0.0, g}; }
    static RegimeSpec moderate(double beta, Gamma g) {
        if (!(beta > 0.0)) throw std::invalid_argument("moderate regime requires beta > 0");
        return {RegimeKind::Moderate, beta, g};
    }
    static RegimeSpec fast(Gamma g = Gamma::zero()) { return {RegimeKind::Fast, 0.0, g}; }
};

struct CovarianceCurve {
    std::vector<double> lags;
    std::vector<double> values;
    std::vector<double> std_error;  // empty for theoretical curves
};

/// Small dense row-major matrix.
struct Matrix {
    int n = 0;
    std::vector<double> a;

    Matrix() = default;
    explicit Matrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// M^{j,beta} = (j I - J) / (j beta), of size (j-1) x (j-1).
inline Matrix matrix_M(int j, double beta) {
    if (j < 2) throw std::invalid_argument("matrix_M: j must be >= 2");
    if (!(beta > 0.0)) throw std::invalid_argument("matrix_M: beta must be > 0");
    Matrix m(j - 1);
    for (int a = 0; a < j - 1; ++a)
        for (int b = 0; b < j - 1; ++b) m(a, b) = ((a == b ? j : 0) - 1.0) / (j * beta);
    return m;
}

/// det M^{j,beta} = 1 / (beta^{j-1} j).
inline double det_M(int j, double beta) {
    if (j < 2) throw std::invalid_argument("det_M: j must be >= 2");
    if (!(beta > 0.0)) throw std::invalid_argument("det_M: beta must be > 0");
    return 1.0 / (std::pow(beta, j - 1) * j);
}

/// Gaussian smoothing weight of the moderate regime, written with the sum of
/// squares and the squared mean of the j-1 displacement differences
/// diffs[l] = z'_l - z_l:
///   (2 pi beta)^{-d(j-1)/2} j^{-d/2} exp(-(sum |diff|^2 - j |sum diff / j|^2) / (2 beta)).
template <int D>
double zeta_kernel(std::span<const Displacement<D>> diffs, int j, double beta) {
    double ss = 0.0;
    Displacement<D> total{};
    for (const auto& v : diffs) {
        ss += v.norm2();
        total += v;
    }
    const double mean2 = total.norm2() / (static_cast<double>(j) * j);
    const double norm = std::pow(2.0 * M_PI * beta, -0.5 * D * (j - 1)) * std::pow(static_cast<double>(j), -0.5 * D);
    return norm * std::exp(-(ss - j * mean2) / (2.0 * beta));
}

/// The same weight through M^{j,beta}, one coordinate at a time.
template <int D>
double zeta_kernel_matrix_form(std::span<const Displacement<D>> diffs, int j, double beta) {
    const Matrix m = matrix_M(j, beta);
    const double per_coord = 1.0 / (std::pow(2.0 * M_PI, 0.5 * (j - 1)) * std::sqrt(std::pow(beta, j - 1) * j));
    double result = 1.0;
    for (int i = 0; i < D; ++i) {
        double q = 0.0;
        for (int l = 0; l < j - 1; ++l)
            for (int h = 0; h < j - 1; ++h) q += diffs[l][i] * m(l, h) * diffs[h][i];
        result *= per_coord * std::exp(-0.5 * q);
    }
    return result;
}

/// zeta~_j(beta): the Gaussian-smoothed self-overlap integral over
/// B_delta^{2k-2} at unit scale. For j = 1 this is kappa~_1.
template <int D, typename Rng>
MomentEstimate zeta_tilde(int j, double beta, const InteractionFunctional<D>& fnl, std::uint64_t budget, Rng& rng) {
    const int k = fnl.k;
    if (j < 1 || j > k) throw std::out_of_range("zeta_tilde: j must lie in 1..k");
    if (!(beta > 0.0)) throw std::invalid_argument("zeta_tilde: beta must be > 0");
    if (j == 1) return kappa_tilde<D>(1, fnl, budget, rng);
    const double volume = std::pow(ball_volume(D, fnl.delta), 2 * k - 2);
    std::vector<TorusPoint<D>> a(k), b(k);
    std::vector<Displacement<D>> za(j - 1), zb(j - 1), diffs(j - 1);
    RunningMoments acc;
    for (std::uint64_t s = 0; s < budget; ++s) {
        a[0] = b[0] = TorusPoint<D>{};
        for (int m = 0; m < j - 1; ++m) {
            za[m] = uniform_in_ball<D>(rng, fnl.delta);
            a[m + 1] = project(za[m]);
        }
        for (int m = j; m < k; ++m) a[m] = project(uniform_in_ball<D>(rng, fnl.delta));
        for (int m = 0; m < j - 1; ++m) {
            zb[m] = uniform_in_ball<D>(rng, fnl.delta);
            b[m + 1] = project(zb[m]);
        }
        for (int m = j; m < k; ++m) b[m] = project(uniform_in_ball<D>(rng, fnl.delta));
        const double va = fnl.evaluate_unit(a);
        if (va == 0.0) {
            acc.add(0.0);
            continue;
        }
        for (int m = 0; m < j - 1; ++m) diffs[m] = zb[m] + (-1.0) * za[m];
        acc.add(volume * va * fnl.evaluate_unit(b) * zeta_kernel<D>(diffs, j, beta));
    }
    return acc.estimate();
}

/// zeta_j(beta) = zeta~_j(beta) / kappa~_j with delta-method error. zeta_1 = 1
/// and zeta_j(0) = 1.
template <int D, typename Rng>
MomentEstimate zeta(int j, double beta, const InteractionFunctional<D>& fnl, const LimitConstants& c, std::uint64_t budget,
                    Rng& rng) {
    if (j < 1 || j > c.k) throw std::out_of_range("zeta: j must lie in 1..k");
    if (j == 1 || beta == 0.0) return {1.0, 0.0, 0};
    const auto num = zeta_tilde<D>(j, beta, fnl, budget, rng);
    const auto& den = c.kappa_tilde[j - 1];
    const double ratio = num.value / den.value;
    const double rel = std::hypot(num.std_error / std::max(num.value, 1e-300), den.std_error / den.value);
    return {ratio, std::abs(ratio) * rel, num.samples};
}

/// zeta_j as a function of (j, beta), used to build moderate-regime curves.
using ZetaFunction = std::function<double(int j, double beta)>;

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

/// Closed form of zeta~_2(beta) for the pair indicator in one dimension:
///   (4 pi beta)^{-1/2} int int_{[-delta, delta]^2} exp(-(z' - z)^2 / (4 beta)),
/// obtained by integrating the normal CDF (s = sqrt(2 beta), a = 2 delta / s):
///   s (a erf(a / sqrt 2) + 2 phi(a) - 2 phi(0)).
inline double pair_zeta_tilde_1d(double beta, double delta) {
    if (beta == 0.0) return 2.0 * delta;
    if (!(beta > 0.0)) throw std::invalid_argument("pair_zeta_tilde_1d: beta must be >= 0");
    const double s = std::sqrt(2.0 * beta);
    const double a = 2.0 * delta / s;
    return s * (a * std::erf(a / std::sqrt(2.0)) + 2.0 * normal_pdf(a) - 2.0 * normal_pdf(0.0));
}

inline ZetaFunction pair_zeta_1d(double delta) {
    return [delta](int j, double beta) {
        if (j <= 1 || beta == 0.0) return 1.0;
        return pair_zeta_tilde_1d(beta, delta) / (2.0 * delta);
    };
}

/// MC-backed zeta_j with memoisation. Each (j, beta) gets its own stream so
/// results do not depend on evaluation order.
template <int D>
ZetaFunction mc_zeta(const InteractionFunctional<D>& fnl, const LimitConstants& c, std::uint64_t budget, std::uint64_t seed) {
    auto cache = std::make_shared<std::map<std::pair<int, double>, double>>();
    return [fnl, c, budget, seed, cache](int j, double beta) {
        if (j <= 1 || beta == 0.0) return 1.0;
        const auto key = std::make_pair(j, beta);
        if (auto it = cache->find(key); it != cache->end()) return it->second;
        std::uint64_t bits = 0;
        std::memcpy(&bits, &beta, sizeof bits);
        SplitMix64 rng(derive_seed(seed, 300 + j, bits));
        const double v = zeta<D>(j, beta, fnl, c, budget, rng).value;
        cache->emplace(key, v);
        return v;
    };
}

/// Finite (n, r, sigma) inputs for the pre-limit fast-regime expression.
struct ModelPoint {
    double n = 0.0;
    double r = 0.0;
    double sigma = 0.0;
};

class SingularLag : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Fast-regime approximation of the normalized covariance at lag t:
///   sum_j e^{-jt} kappa~_1/(j!((k-j)!)^2) (2 pi t)^{-d(j-1)/2} j^{-d/2} (n sigma^d)^{-j} (sigma/r)^d
///   / sum_j kappa_j (n r^d)^{-j}.
/// kappa~_1 appears in every numerator term.
inline double fast_regime_cov(double t, const LimitConstants& c, const ModelPoint& m) {
    if (!(t > 0.0)) throw SingularLag("fast regime covariance is singular at lag 0");
    const int k = c.k, d = c.d;
    const double nsd = m.n * std::pow(m.sigma, d);
    const double nrd = m.n * std::pow(m.r, d);
    const double ratio_d = std::pow(m.sigma / m.r, d);
    double num = 0.0, den = 0.0;
    for (int j = 1; j <= k; ++j) {
        num += std::exp(-j * t) * c.kappa_tilde_at(1) / overlap_weight(j, k) * std::pow(2.0 * M_PI * t, -0.5 * d * (j - 1)) *
               std::pow(static_cast<double>(j), -0.5 * d) * std::pow(nsd, -j) * ratio_d;
        den += c.kappa(j) * std::pow(nrd, -j);
    }
    return num / den;
}

/// Limiting normalized covariance at lag t.
///   slow:     sum_j lambda_j e^{-jt}
///   moderate: lambda_1 e^{-t} + sum_{j>=2} lambda_j e^{-jt} zeta_j(beta t)
///   fast:     fast_regime_cov at the supplied (n, r, sigma)
inline double limit_cov(const RegimeSpec& regime, double t, const LimitConstants& c, const ZetaFunction& zeta_fn = {},
                        const std::optional<ModelPoint>& model = std::nullopt) {
    if (!(t >= 0.0)) throw std::invalid_argument("limit_cov: lag must be >= 0");
    switch (regime.kind) {
    case RegimeKind::Slow: {
        const auto lam = c.lambda(regime.gamma);
        double s = 0.0;
        for (int j = 1; j <= c.k; ++j) s += lam[j - 1] * std::exp(-j * t);
        return s;
    }
    case RegimeKind::Moderate: {
        if (!zeta_fn) throw std::invalid_argument("limit_cov: moderate regime needs zeta_j");
        const auto lam = c.lambda(regime.gamma);
        double s = lam[0] * std::exp(-t);
        for (int j = 2; j <= c.k; ++j) s += lam[j - 1] * std::exp(-j * t) * zeta_fn(j, regime.beta * t);
        return s;
    }
    case RegimeKind::Fast:
        if (!model) throw std::invalid_argument("limit_cov: fast regime needs (n, r, sigma)");
        return fast_regime_cov(t, c, *model);
    }
    return 0.0;
}

inline CovarianceCurve theoretical_curve(const RegimeSpec& regime, std::span<const double> lags, const LimitConstants& c,
                                         const ZetaFunction& zeta_fn = {}, const std::optional<ModelPoint>& model = std::nullopt) {
    CovarianceCurve curve;
    for (double t : lags) {
        curve.lags.push_back(t);
        curve.values.push_back(limit_cov(regime, t, c, zeta_fn, model));
    }
    return curve;
}

/// Exact finite-n normalized covariance of f at lag t, with the overlap
/// expectations theta_j estimated by MC and the variance from the constants:
///   sum_j e^{-jt} n^{-j} theta_j / w_j  /  sum_j n^{-j} alpha_j(r) / w_j.
template <int D>
MomentEstimate finite_n_cov(double t, const ModelPoint& m, const InteractionFunctional<D>& fnl, const LimitConstants& c,
                            std::uint64_t budget, std::uint64_t seed) {
    const int k = fnl.k;
    double num = 0.0, num_var = 0.0, den = 0.0;
    for (int j = 1; j <= k; ++j) {
        SplitMix64 rng(derive_seed(seed, 400 + j));
        const auto th = theta_j_mc<D>(j, m.r, m.sigma, t, fnl, budget, rng);
        const double w = std::exp(-j * t) * std::pow(m.n, -j) / overlap_weight(j, k);
        num += w * th.value;
        num_var += w * w * th.std_error * th.std_error;
        den += std::pow(m.n, -j) * alpha_j(j, m.r, c) / overlap_weight(j, k);
    }
    return {num / den, std::sqrt(num_var) / den, budget};
}

/// Order-of-magnitude bounds (r/sigma)^{2+eps} and (r/sigma)^{2 - 4/(d(k-1)+2)}
/// on the integral of the normalized covariance over [0, 1] in the fast
/// regime, with unit order constants.
struct MnBounds {
    double lower = 0.0;
    double upper = 0.0;
    double upper_exponent = 0.0;
};

inline MnBounds mn_bounds(double r, double sigma, double epsilon, int d, int k) {
    if (!(r > 0.0 && sigma > 0.0 && epsilon > 0.0)) throw std::invalid_argument("mn_bounds: r, sigma, epsilon must be > 0");
    const double ratio = r / sigma;
    MnBounds b;
    b.upper_exponent = 2.0 - 4.0 / (d * (k - 1) + 2.0);
    b.lower = std::pow(ratio, 2.0 + epsilon);
    b.upper = std::pow(ratio, b.upper_exponent);
    return b;
}

/// r = a n^{-p}, sigma = b n^{-q}.
struct Scaling {
    double a = 1.0;
    double p = 0.5;
    double b = 1.0;
    double q = 0.5;
};

struct Condition {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RegimeReport {
    RegimeSpec regime;
    std::vector<Condition> conditions;

    bool admissible() const {
        for (const auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
};

/// Classifies a power-law scaling. Compares exponents only; prefactors enter
/// through beta = (b/a)^2 and a finite limit gamma = a^d of n r^d. b = 0
/// (no motion) is slow.
inline RegimeReport classify_regime(const Scaling& s, int k, int d) {
    if (k < 2 || d < 1) throw std::invalid_argument("classify_regime: need k >= 2 and d >= 1");
    if (!(s.a > 0.0 && s.b >= 0.0)) throw std::invalid_argument("classify_regime: need a > 0 and b >= 0");
    constexpr double tol = 1e-12;
    RegimeReport rep;
    auto add = [&](std::string name, bool pass, std::string detail) {
        rep.conditions.push_back({std::move(name), pass, std::move(detail)});
    };
    auto fmt = [](double x) {
        std::ostringstream os;
        os << x;
        return os.str();
    };

    // exponent of n in n r^d and n^k r^{d(k-1)}
    const double e_nrd = 1.0 - s.p * d;
    const double e_static = k - s.p * d * (k - 1);
    Gamma gamma;
    if (e_nrd > tol) gamma = Gamma::infinity();
    else if (e_nrd < -tol) gamma = Gamma::zero();
    else gamma = Gamma::finite(std::pow(s.a, d));

    add("r -> 0", s.p > tol, "p = " + fmt(s.p));
    const bool frozen = s.b == 0.0;  // sigma identically zero
    add("sigma -> 0", frozen || s.q > tol, frozen ? "sigma = 0" : "q = " + fmt(s.q));
    add("n^k r^{d(k-1)} -> infinity", e_static > tol, "exponent " + fmt(e_static));

    if (frozen || s.q > s.p + tol) {
        rep.regime = RegimeSpec::slow(gamma);
    } else if (std::abs(s.q - s.p) <= tol) {
        rep.regime = RegimeSpec::moderate((s.b / s.a) * (s.b / s.a), gamma);
    } else {
        rep.regime = RegimeSpec::fast(gamma);
        add("n r^d -> 0", e_nrd < -tol, "exponent " + fmt(e_nrd));
        const double e_nsd = 1.0 - s.q * d;
        add("n sigma^d bounded", e_nsd <= tol, "exponent " + fmt(e_nsd));
        add("d(k-1) >= 3", d * (k - 1) >= 3, "d(k-1) = " + std::to_string(d * (k - 1)));
        // sigma/r = n^{p-q} must be o((n^k r^{d(k-1)})^{1/4 - eps}) for some eps in (0, 1/4)
        const double growth = s.p - s.q;
        const double ceiling = e_static / 4.0;
        const double eps_max = e_static > tol ? 0.25 - growth / e_static : 0.0;
        add("sigma/r << (n^k r^{d(k-1)})^{1/4-eps}", growth < ceiling - tol,
            "exponent " + fmt(growth) + " vs " + fmt(ceiling) + ", admissible eps < " + fmt(eps_max));
    }
    return rep;
}

} // namespace torusdyn
