#pragma once

// Local interaction functionals xi_r on k-point subsets of the torus and the
// additive statistic f(Y) = sum over k-subsets of xi_r. Evaluation only
// visits k-subsets of diameter <= delta r, found with a periodic cell list;
// locality makes this exact.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

inline constexpr int kMaxPatternSize = 8;

/// Simple undirected graph on at most 8 vertices, one bitmask row per vertex.
struct Adjacency {
    int k = 0;
    std::array<std::uint8_t, kMaxPatternSize> rows{};

    bool edge(int i, int j) const { return (rows[i] >> j) & 1U; }
    void connect(int i, int j) {
        rows[i] |= static_cast<std::uint8_t>(1U << j);
        rows[j] |= static_cast<std::uint8_t>(1U << i);
    }
    int degree(int i) const { return std::popcount(static_cast<unsigned>(rows[i])); }
    int edge_count() const {
        int s = 0;
        for (int i = 0; i < k; ++i) s += degree(i);
        return s / 2;
    }
    friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

class UnsupportedSize : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Brute-force isomorphism test over all vertex permutations, after a
/// degree-sequence prefilter.
inline bool graph_isomorphic(const Adjacency& a, const Adjacency& b) {
    if (a.k != b.k) return false;
    const int k = a.k;
    if (k > kMaxPatternSize) throw UnsupportedSize("graph_isomorphic: k > 8 is not supported");
    if (a.edge_count() != b.edge_count()) return false;
    std::array<int, kMaxPatternSize> da{}, db{};
    for (int i = 0; i < k; ++i) {
        da[i] = a.degree(i);
        db[i] = b.degree(i);
    }
    std::sort(da.begin(), da.begin() + k);
    std::sort(db.begin(), db.begin() + k);
    if (!std::equal(da.begin(), da.begin() + k, db.begin())) return false;

    std::array<int, kMaxPatternSize> perm{};
    std::iota(perm.begin(), perm.begin() + k, 0);
    do {
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            if (a.degree(i) != b.degree(perm[i])) {
                ok = false;
                break;
            }
            for (int j = i + 1; j < k; ++j) {
                if (a.edge(i, j) != b.edge(perm[i], perm[j])) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.begin() + k));
    return false;
}

/// The target graph G of a subgraph-count functional.
struct GeometricPattern {
    Adjacency adjacency;

    int k() const { return adjacency.k; }

    static GeometricPattern from_edges(int k, std::span<const std::pair<int, int>> edges) {
        if (k < 2 || k > kMaxPatternSize) throw UnsupportedSize("pattern size must be in 2..8");
        GeometricPattern g;
        g.adjacency.k = k;
        for (auto [i, j] : edges) {
            if (i < 0 || j < 0 || i >= k || j >= k) throw std::invalid_argument("pattern edge out of range");
            if (i == j) throw std::invalid_argument("pattern has a self-loop");
            g.adjacency.connect(i, j);
        }
        return g;
    }

    /// lists[i] = neighbours of vertex i; must be symmetric.
    static GeometricPattern from_adjacency_lists(const std::vector<std::vector<int>>& lists) {
        const int k = static_cast<int>(lists.size());
        if (k < 2 || k > kMaxPatternSize) throw UnsupportedSize("pattern size must be in 2..8");
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < k; ++i)
            for (int j : lists[i]) {
                if (j < 0 || j >= k) throw std::invalid_argument("pattern neighbour out of range");
                if (std::find(lists[j].begin(), lists[j].end(), i) == lists[j].end())
                    throw std::invalid_argument("pattern adjacency lists are not symmetric");
                if (i < j) edges.emplace_back(i, j);
                if (i == j) throw std::invalid_argument("pattern has a self-loop");
            }
        return from_edges(k, edges);
    }

    static GeometricPattern edge() { return complete(2); }
    static GeometricPattern complete(int k) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) e.emplace_back(i, j);
        return from_edges(k, e);
    }
    static GeometricPattern path(int k) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i + 1 < k; ++i) e.emplace_back(i, i + 1);
        return from_edges(k, e);
    }
    static GeometricPattern cycle(int k) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i < k; ++i) e.emplace_back(i, (i + 1) % k);
        return from_edges(k, e);
    }
};

/// Geometric graph on the given points with connection radius `radius`
/// (edge iff distance <= radius).
template <int D>
Adjacency geometric_graph(std::span<const TorusPoint<D>> pts, double radius) {
    if (pts.size() > kMaxPatternSize) throw UnsupportedSize("geometric_graph: more than 8 points");
    Adjacency a;
    a.k = static_cast<int>(pts.size());
    const double r2 = radius * radius;
    for (int i = 0; i < a.k; ++i)
        for (int j = i + 1; j < a.k; ++j)
            if (distance2(pts[i], pts[j]) <= r2) a.connect(i, j);
    return a;
}

/// Randomised search for a unit-scale realisation of the pattern in R^D.
template <int D>
bool pattern_feasible(const GeometricPattern& g, std::uint64_t seed = 7, int attempts = 200000) {
    SplitMix64 rng(seed);
    std::vector<TorusPoint<D>> pts(g.k());
    for (int a = 0; a < attempts; ++a) {
        // spread between 0.5 and 3 unit radii, kept well inside Q so no wrap
        const double spread = 0.5 + 2.5 * uniform01(rng);
        for (auto& p : pts) p = project(0.1 * uniform_in_ball<D>(rng, spread));
        if (graph_isomorphic(geometric_graph<D>(pts, 0.1), g.adjacency)) return true;
    }
    return false;
}

enum class FunctionalKind { PairIndicator, SubgraphCount, User };

/// xi_r. `rule` computes xi_r on exactly k points whose diameter is at most
/// delta r; the call operator supplies the order and locality cut-offs.
template <int D>
struct InteractionFunctional {
    using Rule = std::function<double(std::span<const TorusPoint<D>>, double r)>;

    int k = 2;
    double delta = 0.25;
    double bound = 1.0;  // sup |xi|
    FunctionalKind kind = FunctionalKind::PairIndicator;
    std::optional<GeometricPattern> pattern;
    Rule rule;

    double operator()(std::span<const TorusPoint<D>> ys, double r) const {
        if (static_cast<int>(ys.size()) != k) return 0.0;
        if (diameter(ys) > delta * r) return 0.0;
        return rule(ys, r);
    }

    /// xi_1, i.e. the unit-scale rule.
    double evaluate_unit(std::span<const TorusPoint<D>> ys) const { return (*this)(ys, 1.0); }
};

inline void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 1/2)");
}

/// xi_r(x, y) = 1{ rho(x, y) <= delta r }.
template <int D>
InteractionFunctional<D> make_pair_indicator(double delta) {
    check_delta(delta);
    InteractionFunctional<D> f;
    f.k = 2;
    f.delta = delta;
    f.kind = FunctionalKind::PairIndicator;
    f.rule = [delta](std::span<const TorusPoint<D>> ys, double r) {
        return distance(ys[0], ys[1]) <= delta * r ? 1.0 : 0.0;
    };
    return f;
}

/// xi_r(Y) = 1{ G(Y, r delta / k) is isomorphic to the pattern }.
/// The connection radius is r delta / k, not r delta.
template <int D>
InteractionFunctional<D> make_subgraph_count(const GeometricPattern& pattern, double delta, bool warn = true) {
    check_delta(delta);
    if (warn && !pattern_feasible<D>(pattern))
        std::cerr << "warning: no unit-scale realisation of the pattern was found; f may vanish identically\n";
    InteractionFunctional<D> f;
    f.k = pattern.k();
    f.delta = delta;
    f.kind = FunctionalKind::SubgraphCount;
    f.pattern = pattern;
    const Adjacency target = pattern.adjacency;
    const int k = f.k;
    f.rule = [target, delta, k](std::span<const TorusPoint<D>> ys, double r) {
        return graph_isomorphic(geometric_graph<D>(ys, r * delta / k), target) ? 1.0 : 0.0;
    };
    return f;
}

/// Registers a user rule after property-checking boundedness, permutation
/// symmetry and translation invariance on random local configurations.
template <int D>
InteractionFunctional<D> make_user_functional(int k, double delta, double bound, typename InteractionFunctional<D>::Rule rule,
                                              std::uint64_t seed = 11, int trials = 2000) {
    check_delta(delta);
    if (k < 2 || k > kMaxPatternSize) throw std::invalid_argument("user functional: k must be in 2..8");
    if (!(bound > 0.0 && std::isfinite(bound))) throw std::invalid_argument("user functional: bound must be finite and > 0");
    InteractionFunctional<D> f;
    f.k = k;
    f.delta = delta;
    f.bound = bound;
    f.kind = FunctionalKind::User;
    f.rule = std::move(rule);

    SplitMix64 rng(seed);
    std::vector<TorusPoint<D>> ys(k), perm(k);
    for (int t = 0; t < trials; ++t) {
        const double r = 0.05 + 0.95 * uniform01(rng);
        const auto anchor = uniform_point<D>(rng);
        for (auto& y : ys) y = shift(anchor, uniform_in_ball<D>(rng, 0.5 * delta * r));
        const double v = f(ys, r);
        if (!(v >= 0.0 && v <= bound)) throw std::invalid_argument("user functional: value outside [0, bound]");
        perm = ys;
        std::reverse(perm.begin(), perm.end());
        std::rotate(perm.begin(), perm.begin() + 1, perm.end());
        if (f(perm, r) != v) throw std::invalid_argument("user functional: not permutation-symmetric");
        const auto x = uniform_point<D>(rng);
        const auto moved = translate<D>(ys, x);
        if (std::abs(f(moved, r) - v) > 1e-12 * std::max(1.0, bound))
            throw std::invalid_argument("user functional: not translation-invariant");
    }
    return f;
}

/// Periodic cell list. Cells are wider than `radius` so a radius-ball
/// around a point only touches the 3^D block around its cell; the cell count
/// is capped near the number of points so sparse inputs stay O(N).
template <int D>
class SpatialGrid {
public:
    SpatialGrid(std::span<const TorusPoint<D>> pts, double radius) : pts_(pts), radius_(radius) {
        if (!(radius > 0.0 && radius < 0.5)) throw std::invalid_argument("SpatialGrid: radius must lie in (0, 1/2)");
        const int by_radius = static_cast<int>(std::floor(1.0 / (radius + 2.0 * kSlack)));
        const double target = std::max(1.0, std::pow(static_cast<double>(pts.size()), 1.0 / D));
        cells_per_dim_ = std::min<long>(by_radius, std::max<long>(3, static_cast<long>(std::ceil(target))));
        if (cells_per_dim_ < 3) {
            cells_per_dim_ = 0;  // too coarse for a neighbourhood scan; callers fall back to brute force
            return;
        }
        width_ = 1.0 / static_cast<double>(cells_per_dim_);
        std::size_t total = 1;
        for (int i = 0; i < D; ++i) total *= static_cast<std::size_t>(cells_per_dim_);
        start_.assign(total + 1, 0);
        cell_of_.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            cell_of_[i] = linear(cell_coords(pts[i]));
            ++start_[cell_of_[i] + 1];
        }
        std::partial_sum(start_.begin(), start_.end(), start_.begin());
        order_.resize(pts.size());
        std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell_of_[i]]++] = static_cast<std::uint32_t>(i);
    }

    bool usable() const { return cells_per_dim_ >= 3; }
    long cells_per_dim() const { return cells_per_dim_; }
    double cell_width() const { return width_; }

    /// Calls visit(j) for every point index j != i with rho(i, j) <= radius.
    template <typename Visit>
    void for_each_neighbor(std::size_t i, Visit&& visit) const {
        const auto& p = pts_[i];
        const auto home = cell_coords(p);
        // per axis, which of the offsets -1, 0, +1 the ball around p can reach
        std::array<std::array<int, 3>, D> offsets{};
        std::array<int, D> counts{};
        for (int a = 0; a < D; ++a) {
            const double local = (p[a] + 0.5) - home[a] * width_;
            int c = 0;
            offsets[a][c++] = 0;
            if (local < radius_ + kSlack) offsets[a][c++] = -1;
            if (width_ - local <= radius_ + kSlack) offsets[a][c++] = +1;
            counts[a] = c;
        }
        const double r2 = radius_ * radius_;
        std::array<int, D> idx{};
        for (;;) {
            std::array<long, D> cell{};
            for (int a = 0; a < D; ++a) {
                long c = home[a] + offsets[a][idx[a]];
                if (c < 0) c += cells_per_dim_;
                if (c >= cells_per_dim_) c -= cells_per_dim_;
                cell[a] = c;
            }
            const auto lin = linear(cell);
            for (auto s = start_[lin]; s < start_[lin + 1]; ++s) {
                const auto j = order_[s];
                if (j != i && distance2(p, pts_[j]) <= r2) visit(static_cast<std::size_t>(j));
            }
            int a = 0;
            while (a < D && ++idx[a] == counts[a]) idx[a++] = 0;
            if (a == D) break;
        }
    }

private:
    static constexpr double kSlack = 1e-9;

    std::array<long, D> cell_coords(const TorusPoint<D>& p) const {
        std::array<long, D> c{};
        for (int a = 0; a < D; ++a) {
            long v = static_cast<long>(std::floor((p[a] + 0.5) / width_));
            c[a] = std::clamp(v, 0L, cells_per_dim_ - 1);
        }
        return c;
    }
    std::size_t linear(const std::array<long, D>& c) const {
        std::size_t lin = 0;
        for (int a = D - 1; a >= 0; --a) lin = lin * static_cast<std::size_t>(cells_per_dim_) + static_cast<std::size_t>(c[a]);
        return lin;
    }

    std::span<const TorusPoint<D>> pts_;
    double radius_;
    long cells_per_dim_ = 0;
    double width_ = 1.0;
    std::vector<std::uint32_t> start_;
    std::vector<std::size_t> cell_of_;
    std::vector<std::uint32_t> order_;
};

namespace detail {

/// Extends `chosen` by candidates (increasing index) pairwise within radius.
template <int D, typename Emit>
void extend_clique(std::span<const TorusPoint<D>> pts, std::span<const std::size_t> candidates, std::size_t from, double r2,
                   int k, std::vector<std::size_t>& chosen, Emit& emit) {
    if (static_cast<int>(chosen.size()) == k) {
        emit(std::span<const std::size_t>(chosen));
        return;
    }
    for (std::size_t c = from; c < candidates.size(); ++c) {
        const auto j = candidates[c];
        bool ok = true;
        for (std::size_t m = 1; m < chosen.size() && ok; ++m) ok = distance2(pts[chosen[m]], pts[j]) <= r2;
        if (!ok) continue;
        chosen.push_back(j);
        extend_clique<D>(pts, candidates, c + 1, r2, k, chosen, emit);
        chosen.pop_back();
    }
}

} // namespace detail

/// Visits every k-subset of `pts` with diameter <= radius exactly once, as
/// an increasing index list whose first entry is the smallest index.
template <int D, typename Emit>
void enumerate_local_ktuples(std::span<const TorusPoint<D>> pts, int k, double radius, Emit&& emit) {
    if (k < 1) throw std::invalid_argument("enumerate_local_ktuples: k must be >= 1");
    if (!(radius >= 0.0 && radius < 0.5)) throw std::invalid_argument("enumerate_local_ktuples: radius must lie in [0, 1/2)");
    if (pts.size() < static_cast<std::size_t>(k)) return;
    const double r2 = radius * radius;
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> candidates;
    chosen.reserve(k);

    std::optional<SpatialGrid<D>> grid;
    if (radius > 0.0) grid.emplace(pts, radius);
    const bool use_grid = grid && grid->usable();

    for (std::size_t i = 0; i < pts.size(); ++i) {
        candidates.clear();
        if (use_grid) {
            grid->for_each_neighbor(i, [&](std::size_t j) {
                if (j > i) candidates.push_back(j);
            });
            std::sort(candidates.begin(), candidates.end());
        } else {
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (distance2(pts[i], pts[j]) <= r2) candidates.push_back(j);
        }
        if (static_cast<int>(candidates.size()) < k - 1) continue;
        chosen.assign(1, i);
        detail::extend_clique<D>(pts, candidates, 0, r2, k, chosen, emit);
    }
}

/// f = sum over k-subsets Y of xi_r(Y).
template <int D>
double evaluate_f(std::span<const TorusPoint<D>> pts, const InteractionFunctional<D>& fnl, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("evaluate_f: r must lie in (0, 1]");
    if (!(r * fnl.delta < 0.5)) throw std::invalid_argument("evaluate_f: r delta must be < 1/2");
    double total = 0.0;
    std::array<TorusPoint<D>, kMaxPatternSize> buf{};
    const int k = fnl.k;
    enumerate_local_ktuples<D>(pts, k, fnl.delta * r, [&](std::span<const std::size_t> idx) {
        for (int m = 0; m < k; ++m) buf[m] = pts[idx[m]];
        total += fnl.rule(std::span<const TorusPoint<D>>(buf.data(), k), r);
    });
    return total;
}

/// Reference evaluation over all k-subsets, for testing.
template <int D>
double evaluate_f_brute_force(std::span<const TorusPoint<D>> pts, const InteractionFunctional<D>& fnl, double r) {
    const int k = fnl.k;
    const int n = static_cast<int>(pts.size());
    if (n < k) return 0.0;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<TorusPoint<D>> buf(k);
    double total = 0.0;
    for (;;) {
        for (int m = 0; m < k; ++m) buf[m] = pts[idx[m]];
        total += fnl(buf, r);
        int m = k - 1;
        while (m >= 0 && idx[m] == n - k + m) --m;
        if (m < 0) break;
        ++idx[m];
        for (int q = m + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
    }
    return total;
}

} // namespace torusdyn
