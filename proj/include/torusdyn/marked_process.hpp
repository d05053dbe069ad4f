#pragma once

// Birth-death-Brownian particles on the torus, two ways:
//  * the marked Poisson representation: a static Poisson(n(1+T)) cloud whose
//    points carry (birth, lifetime, Brownian path) marks, with paths sampled
//    lazily forward in time;
//  * an event-driven simulation of the dynamics itself (births as a rate-n
//    Poisson stream, Exp(1) lifetimes, Brownian motion while alive).
// The two agree in finite-dimensional distribution, which the estimator
// module checks empirically.

#include <cstdint>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusdyn/rng.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

struct SimParams {
    double n = 1.0;      // spatial intensity
    double T = 1.0;      // time horizon
    double sigma = 0.0;  // Brownian scale per unit time, per coordinate
    int d = 1;
    int k = 2;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(n > 0.0)) throw std::invalid_argument("SimParams: n must be > 0");
        if (!(T > 0.0)) throw std::invalid_argument("SimParams: T must be > 0");
        if (!(sigma >= 0.0)) throw std::invalid_argument("SimParams: sigma must be >= 0");
        if (d < 1 || d > kMaxDim) throw std::invalid_argument("SimParams: d must be in 1.." + std::to_string(kMaxDim));
        if (k < 2) throw std::invalid_argument("SimParams: k must be >= 2");
    }
};

class OutOfOrderQuery : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

template <int D>
struct PathSample {
    double time = 0.0;
    Displacement<D> z{};  // Z(time) - Z(birth)
};

enum class PathHistory { Full, LastOnly };

/// A point of the marked process. `path` holds every sampled (time, Z(t)-Z(B))
/// pair when the history policy is Full; otherwise only `last` is kept.
template <int D>
struct MarkedPoint {
    TorusPoint<D> x0;
    double birth = 0.0;
    double lifetime = 1.0;
    SplitMix64 stream;  // private Brownian stream
    PathSample<D> last;
    std::vector<PathSample<D>> path;
    bool keep_history = true;

    double death() const { return birth + lifetime; }
};

/// tau_t: B <= t < B + L.
template <int D>
bool alive(const MarkedPoint<D>& p, double t, double horizon) {
    if (!(t >= 0.0 && t <= horizon)) throw std::out_of_range("alive: t outside [0, T]");
    return p.birth <= t && t < p.birth + p.lifetime;
}

/// Location x + Z(t) - Z(B) at time t. Extends the lazily sampled path, so
/// queries on one point must be nondecreasing in t.
template <int D>
TorusPoint<D> position(MarkedPoint<D>& p, double t, double sigma) {
    if (t < p.birth) throw OutOfOrderQuery("position: query before birth");
    if (t < p.last.time) throw OutOfOrderQuery("position: query earlier than last sampled time");
    if (t > p.last.time) {
        const double sd = sigma * std::sqrt(t - p.last.time);
        if (sd > 0.0) p.last.z += gaussian_displacement<D>(p.stream, sd);
        p.last.time = t;
        if (p.keep_history) p.path.push_back(p.last);
    }
    if (sigma == 0.0) return p.x0;
    return shift(p.x0, p.last.z);
}

template <int D>
struct MarkedProcess {
    SimParams params;
    std::vector<MarkedPoint<D>> points;
};

/// Draws the marked Poisson cloud. Deterministic in params.seed: the cloud
/// uses one stream and point i's Brownian path uses derive_seed(seed, 1, i).
template <int D>
MarkedProcess<D> sample_marked_process(const SimParams& params, PathHistory history = PathHistory::Full) {
    params.validate();
    if (params.d != D) throw std::invalid_argument("sample_marked_process: dimension mismatch");
    SplitMix64 rng(derive_seed(params.seed, 0));
    MarkedProcess<D> proc;
    proc.params = params;
    const auto count = poisson(rng, params.n * (1.0 + params.T));
    proc.points.resize(count);
    const double p_initial = 1.0 / (1.0 + params.T);
    for (std::size_t i = 0; i < count; ++i) {
        auto& p = proc.points[i];
        p.x0 = uniform_point<D>(rng);
        // B = Y U with P[Y = 0] = 1/(1+T), U ~ Uniform[0, T]
        const bool initial = uniform01(rng) < p_initial;
        const double u = uniform(rng, 0.0, params.T);
        p.birth = initial ? 0.0 : u;
        p.lifetime = exponential(rng);
        if (!(p.lifetime > 0.0)) p.lifetime = std::numeric_limits<double>::min();
        p.stream = SplitMix64(derive_seed(params.seed, 1, i));
        p.last = PathSample<D>{p.birth, {}};
        p.keep_history = history == PathHistory::Full;
        if (p.keep_history) p.path.push_back(p.last);
    }
    return proc;
}

/// Positions of all points alive at t. Appends into `out` (cleared first).
template <int D>
void snapshot_into(MarkedProcess<D>& proc, double t, std::vector<TorusPoint<D>>& out) {
    if (!(t >= 0.0 && t <= proc.params.T)) throw std::out_of_range("snapshot: t outside [0, T]");
    out.clear();
    const double sigma = proc.params.sigma;
    for (auto& p : proc.points) {
        if (p.birth <= t && t < p.birth + p.lifetime) out.push_back(position(p, t, sigma));
    }
}

template <int D>
std::vector<TorusPoint<D>> snapshot(MarkedProcess<D>& proc, double t) {
    std::vector<TorusPoint<D>> out;
    snapshot_into(proc, t, out);
    return out;
}

inline void validate_grid(std::span<const double> grid, double horizon) {
    if (grid.empty()) throw std::invalid_argument("time grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= horizon)) throw std::invalid_argument("time grid outside [0, T]");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    }
}

namespace detail {

enum class EventKind : int { Birth = 0, Death = 1, Observe = 2 };

struct Event {
    double time;
    EventKind kind;
    std::size_t index;  // particle id or grid index

    // min-heap on (time, kind): births and deaths at t precede an observation at t
    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
        return index > o.index;
    }
};

template <int D>
struct Particle {
    Displacement<D> raw;  // unwrapped coordinates in R^D
    double clock = 0.0;   // time of the last Brownian update
    bool alive = false;
};

} // namespace detail

/// Event-driven simulation of the dynamics, sampled at the grid times.
/// Independent of the marked construction: one sequential stream, births
/// generated by exponential inter-arrival times, motion kept unwrapped in R^D
/// and projected only when observed.
template <int D>
std::vector<std::vector<TorusPoint<D>>> sample_direct_dynamic(const SimParams& params, std::span<const double> grid) {
    params.validate();
    if (params.d != D) throw std::invalid_argument("sample_direct_dynamic: dimension mismatch");
    validate_grid(grid, params.T);

    SplitMix64 rng(derive_seed(params.seed, 2));
    std::vector<detail::Particle<D>> particles;
    std::vector<std::size_t> alive_ids;  // unordered; swap-removed
    std::vector<std::size_t> slot;       // particle -> position in alive_ids
    std::priority_queue<detail::Event, std::vector<detail::Event>, std::greater<>> events;

    auto spawn = [&](double t) {
        detail::Particle<D> p;
        p.raw = uniform_point<D>(rng).lift();
        p.clock = t;
        p.alive = true;
        const std::size_t id = particles.size();
        particles.push_back(p);
        slot.push_back(alive_ids.size());
        alive_ids.push_back(id);
        events.push({t + exponential(rng), detail::EventKind::Death, id});
    };

    const auto initial = poisson(rng, params.n);
    for (std::uint64_t i = 0; i < initial; ++i) spawn(0.0);
    events.push({exponential(rng, params.n), detail::EventKind::Birth, 0});
    for (std::size_t g = 0; g < grid.size(); ++g) events.push({grid[g], detail::EventKind::Observe, g});

    std::vector<std::vector<TorusPoint<D>>> frames(grid.size());
    std::size_t observed = 0;
    while (observed < grid.size()) {
        const auto ev = events.top();
        events.pop();
        switch (ev.kind) {
        case detail::EventKind::Birth:
            if (ev.time <= params.T) {
                spawn(ev.time);
                events.push({ev.time + exponential(rng, params.n), detail::EventKind::Birth, 0});
            }
            break;
        case detail::EventKind::Death: {
            auto& p = particles[ev.index];
            p.alive = false;
            const std::size_t s = slot[ev.index];
            const std::size_t moved = alive_ids.back();
            alive_ids[s] = moved;
            slot[moved] = s;
            alive_ids.pop_back();
            break;
        }
        case detail::EventKind::Observe: {
            // visit in id order so the stream consumption is canonical
            std::vector<std::size_t> ids(alive_ids);
            std::sort(ids.begin(), ids.end());
            auto& frame = frames[ev.index];
            frame.reserve(ids.size());
            for (auto id : ids) {
                auto& p = particles[id];
                const double dt = ev.time - p.clock;
                if (params.sigma > 0.0 && dt > 0.0)
                    p.raw += gaussian_displacement<D>(rng, params.sigma * std::sqrt(dt));
                p.clock = ev.time;
                frame.push_back(project(p.raw));
            }
            ++observed;
            break;
        }
        }
    }
    return frames;
}

} // namespace torusdyn
