#pragma once

// Geometry of the flat torus R^d / Z^d, represented by the half-open cube
// [-1/2, 1/2)^d with the wraparound metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "torusdyn/rng.hpp"

namespace torusdyn {

inline constexpr int kMaxDim = 4;

/// Unbounded Euclidean vector in R^D (Brownian increments, raw coordinates).
template <int D>
struct Displacement {
    static_assert(D >= 1 && D <= kMaxDim);
    std::array<double, D> v{};

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    Displacement& operator+=(const Displacement& o) {
        for (int i = 0; i < D; ++i) v[i] += o.v[i];
        return *this;
    }
    friend Displacement operator+(Displacement a, const Displacement& b) { return a += b; }
    friend Displacement operator*(double s, Displacement a) {
        for (auto& c : a.v) c *= s;
        return a;
    }
    friend bool operator==(const Displacement&, const Displacement&) = default;

    double norm2() const {
        double s = 0.0;
        for (double c : v) s += c * c;
        return s;
    }
};

/// Wraps a single real coordinate into [-1/2, 1/2).
inline double wrap_coordinate(double x) {
    double c = x - std::floor(x + 0.5);
    if (c >= 0.5) c -= 1.0;
    if (c < -0.5) c += 1.0;
    return c;
}

/// A point of the flat torus. Every coordinate lies in [-1/2, 1/2); the only
/// ways to build one are project() and the checked from_coords().
template <int D>
class TorusPoint {
public:
    static_assert(D >= 1 && D <= kMaxDim);
    static constexpr int dim = D;

    constexpr TorusPoint() = default;

    static TorusPoint from_coords(const std::array<double, D>& c) {
        for (double x : c) {
            if (!(x >= -0.5 && x < 0.5)) throw std::invalid_argument("TorusPoint: coordinate outside [-1/2, 1/2)");
        }
        TorusPoint p;
        p.c_ = c;
        return p;
    }

    double operator[](std::size_t i) const { return c_[i]; }
    const std::array<double, D>& coords() const { return c_; }

    /// pi^{-1}: the representative in Q as a Euclidean vector.
    Displacement<D> lift() const { return Displacement<D>{c_}; }

    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

private:
    template <int E>
    friend TorusPoint<E> project(const Displacement<E>& v);

    std::array<double, D> c_{};
};

/// The quotient map pi : R^D -> T^D.
template <int D>
TorusPoint<D> project(const Displacement<D>& v) {
    TorusPoint<D> p;
    for (int i = 0; i < D; ++i) {
        if (!std::isfinite(v[i])) throw std::invalid_argument("project: non-finite coordinate");
        p.c_[i] = wrap_coordinate(v[i]);
    }
    return p;
}

template <int D>
TorusPoint<D> project(const std::array<double, D>& v) {
    return project(Displacement<D>{v});
}

/// x + v, wrapped back onto the torus.
template <int D>
TorusPoint<D> shift(const TorusPoint<D>& x, const Displacement<D>& v) {
    return project(x.lift() + v);
}

/// Minimal-image difference y - x, each coordinate in [-1/2, 1/2].
template <int D>
Displacement<D> min_image(const TorusPoint<D>& x, const TorusPoint<D>& y) {
    Displacement<D> d;
    for (int i = 0; i < D; ++i) {
        double t = y[i] - x[i];
        if (t >= 0.5) t -= 1.0;
        else if (t < -0.5) t += 1.0;
        d[i] = t;
    }
    return d;
}

/// Squared torus distance. Because the Euclidean norm is a sum over
/// coordinates, minimising over nu in {-1,0,1}^D decouples per coordinate.
template <int D>
double distance2(const TorusPoint<D>& x, const TorusPoint<D>& y) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
        double t = std::abs(x[i] - y[i]);
        t = std::min(t, 1.0 - t);
        s += t * t;
    }
    return s;
}

template <int D>
double distance(const TorusPoint<D>& x, const TorusPoint<D>& y) {
    return std::sqrt(distance2(x, y));
}

/// Y (+) x = { pi(pi^{-1}(y) + pi^{-1}(x)) }.
template <int D>
std::vector<TorusPoint<D>> translate(std::span<const TorusPoint<D>> ys, const TorusPoint<D>& x) {
    std::vector<TorusPoint<D>> out;
    out.reserve(ys.size());
    for (const auto& y : ys) out.push_back(project(y.lift() + x.lift()));
    return out;
}

/// alpha (.) Y = { pi(alpha pi^{-1}(y)) }, 0 < alpha <= 1.
template <int D>
std::vector<TorusPoint<D>> scale(double alpha, std::span<const TorusPoint<D>> ys) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("scale: alpha must lie in (0, 1]");
    std::vector<TorusPoint<D>> out;
    out.reserve(ys.size());
    for (const auto& y : ys) out.push_back(project(alpha * y.lift()));
    return out;
}

template <int D>
double diameter(std::span<const TorusPoint<D>> ys) {
    if (ys.empty()) throw std::invalid_argument("diameter: empty set");
    double best = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = i + 1; j < ys.size(); ++j) best = std::max(best, distance2(ys[i], ys[j]));
    return std::sqrt(best);
}

template <int D, typename Rng>
TorusPoint<D> uniform_point(Rng& rng) {
    Displacement<D> v;
    for (int i = 0; i < D; ++i) v[i] = uniform01(rng) - 0.5;
    return project(v);
}

template <int D, typename Rng>
Displacement<D> gaussian_displacement(Rng& rng, double sd) {
    Displacement<D> v;
    for (int i = 0; i < D; ++i) v[i] = sd * standard_normal(rng);
    return v;
}

/// Uniform sample from the closed Euclidean ball of the given radius.
template <int D, typename Rng>
Displacement<D> uniform_in_ball(Rng& rng, double radius) {
    if constexpr (D == 1) {
        return Displacement<D>{{uniform(rng, -radius, radius)}};
    } else {
        // rejection from the cube is cheap for D <= 4 (acceptance >= 0.3)
        for (;;) {
            Displacement<D> v;
            for (int i = 0; i < D; ++i) v[i] = uniform(rng, -1.0, 1.0);
            if (v.norm2() <= 1.0) return radius * v;
        }
    }
}

inline double unit_ball_volume(int d) {
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline double ball_volume(int d, double radius) { return unit_ball_volume(d) * std::pow(radius, d); }

/// Calls f.template operator()<D>() for the runtime dimension d.
template <typename F>
decltype(auto) dispatch_dimension(int d, F&& f) {
    switch (d) {
    case 1: return f.template operator()<1>();
    case 2: return f.template operator()<2>();
    case 3: return f.template operator()<3>();
    case 4: return f.template operator()<4>();
    default: throw std::invalid_argument("dimension must be between 1 and 4");
    }
}

} // namespace torusdyn
