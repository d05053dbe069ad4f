#pragma once

// JSON experiment configuration: schema validation with strict key checking.
//
// {
//   "model": { "n": 1000 | "n_grid": [...], "T": 1, "d": 1, "k": 2, "delta": 0.25,
//              "pattern": [[0,1], ...],            (optional, default complete graph)
//              "r": {"a": 1, "p": 1}, "sigma": {"b": 0, "q": 0} },
//   "run":   { "replicates": 100, "grid_spacing": 0.25, "lags": [0, 0.25],
//              "seed": 1, "mc_budget": 1000000, "simulator": "marked",
//              "normalization": "formula", "stride": 1, "zeta_budget": 200000 },
//   "output": { "directory": "out", "formats": ["csv", "json"] }
// }

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "torusdyn/estimator.hpp"
#include "torusdyn/functional.hpp"
#include "torusdyn/torus.hpp"

namespace torusdyn {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ModelConfig {
    std::vector<double> n_values;
    double T = 1.0;
    int d = 1;
    int k = 2;
    double delta = 0.25;
    std::optional<std::vector<std::pair<int, int>>> pattern;
    double r_a = 1.0, r_p = 0.0;
    double sigma_b = 0.0, sigma_q = 0.0;

    double r_at(double n) const { return r_a * std::pow(n, -r_p); }
    double sigma_at(double n) const { return sigma_b * std::pow(n, -sigma_q); }
    Scaling scaling() const { return {r_a, r_p, sigma_b, sigma_q}; }
};

struct RunConfig {
    std::uint64_t replicates = 100;
    double grid_spacing = 0.25;
    std::vector<double> lags{0.0};
    std::uint64_t seed = 1;
    std::uint64_t mc_budget = 1000000;
    std::uint64_t zeta_budget = 200000;
    Simulator simulator = Simulator::Marked;
    Normalization normalization = Normalization::Formula;
    std::size_t stride = 1;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
};

struct ExperimentConfig {
    ModelConfig model;
    RunConfig run;
    OutputConfig output;
    Json source;  // normalized document used for hashing

    SimParams sim_params(double n) const { return {n, model.T, model.sigma_at(n), model.d, model.k, run.seed}; }
    std::vector<double> grid() const { return uniform_grid(model.T, run.grid_spacing); }
};

namespace detail {

inline void reject_unknown(const Json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(prefix, "must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
}

inline const Json& require(const Json& obj, const std::string& prefix, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(prefix + "." + key, "missing required key");
    return obj.at(key);
}

inline double number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
    return x;
}

inline std::uint64_t unsigned_integer(const Json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline void check(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, message);
}

} // namespace detail

inline ExperimentConfig parse_config(const Json& doc) {
    using namespace detail;
    ExperimentConfig cfg;
    reject_unknown(doc, "", {"model", "run", "output"});

    const Json& m = require(doc, "", "model");
    reject_unknown(m, "model", {"n", "n_grid", "T", "d", "k", "delta", "pattern", "r", "sigma"});
    auto& model = cfg.model;
    if (m.contains("n") == m.contains("n_grid")) throw ConfigError("model.n", "exactly one of 'n' and 'n_grid' is required");
    if (m.contains("n")) {
        model.n_values = {number(m.at("n"), "model.n")};
    } else {
        check(m.at("n_grid").is_array() && !m.at("n_grid").empty(), "model.n_grid", "must be a non-empty array");
        for (const auto& v : m.at("n_grid")) model.n_values.push_back(number(v, "model.n_grid"));
    }
    for (double n : model.n_values) check(n > 0.0, m.contains("n") ? "model.n" : "model.n_grid", "must be > 0");
    model.T = number(require(m, "model", "T"), "model.T");
    check(model.T > 0.0, "model.T", "must be > 0");
    model.d = static_cast<int>(unsigned_integer(require(m, "model", "d"), "model.d"));
    check(model.d >= 1 && model.d <= kMaxDim, "model.d", "must lie in 1..4");
    model.k = static_cast<int>(unsigned_integer(require(m, "model", "k"), "model.k"));
    check(model.k >= 2 && model.k <= kMaxPatternSize, "model.k", "must lie in 2..8");
    model.delta = number(require(m, "model", "delta"), "model.delta");
    check(model.delta > 0.0 && model.delta < 0.5, "model.delta", "must lie in (0, 1/2)");
    if (m.contains("pattern")) {
        const Json& p = m.at("pattern");
        check(p.is_array(), "model.pattern", "must be an array of [i, j] edges");
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : p) {
            check(e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number_integer(), "model.pattern",
                  "each edge must be [i, j]");
            const int a = e[0].get<int>(), b = e[1].get<int>();
            check(a >= 0 && b >= 0 && a < model.k && b < model.k && a != b, "model.pattern", "edge endpoints must be distinct in 0..k-1");
            edges.emplace_back(a, b);
        }
        model.pattern = edges;
    }
    const Json& r = require(m, "model", "r");
    reject_unknown(r, "model.r", {"a", "p"});
    model.r_a = number(require(r, "model.r", "a"), "model.r.a");
    model.r_p = number(require(r, "model.r", "p"), "model.r.p");
    check(model.r_a > 0.0, "model.r.a", "must be > 0");
    check(model.r_p >= 0.0, "model.r.p", "must be >= 0");
    for (double n : model.n_values) {
        const double rv = model.r_at(n);
        check(rv > 0.0 && rv <= 1.0 && rv * model.delta < 0.5, "model.r", "r = a n^-p must lie in (0, 1] with r delta < 1/2");
    }
    if (m.contains("sigma")) {
        const Json& s = m.at("sigma");
        reject_unknown(s, "model.sigma", {"b", "q"});
        model.sigma_b = number(require(s, "model.sigma", "b"), "model.sigma.b");
        model.sigma_q = number(require(s, "model.sigma", "q"), "model.sigma.q");
        check(model.sigma_b >= 0.0, "model.sigma.b", "must be >= 0");
    } else {
        throw ConfigError("model.sigma", "missing required key");
    }

    auto& run = cfg.run;
    if (doc.contains("run")) {
        const Json& rj = doc.at("run");
        reject_unknown(rj, "run",
                       {"replicates", "grid_spacing", "lags", "seed", "mc_budget", "zeta_budget", "simulator", "normalization", "stride"});
        if (rj.contains("replicates")) run.replicates = unsigned_integer(rj.at("replicates"), "run.replicates");
        check(run.replicates >= 1, "run.replicates", "must be >= 1");
        if (rj.contains("grid_spacing")) run.grid_spacing = number(rj.at("grid_spacing"), "run.grid_spacing");
        check(run.grid_spacing > 0.0 && run.grid_spacing <= model.T, "run.grid_spacing", "must lie in (0, T]");
        if (rj.contains("lags")) {
            check(rj.at("lags").is_array() && !rj.at("lags").empty(), "run.lags", "must be a non-empty array");
            run.lags.clear();
            for (const auto& v : rj.at("lags")) {
                const double lag = number(v, "run.lags");
                check(lag >= 0.0 && lag <= model.T, "run.lags", "each lag must lie in [0, T]");
                run.lags.push_back(lag);
            }
            for (std::size_t i = 1; i < run.lags.size(); ++i) check(run.lags[i] > run.lags[i - 1], "run.lags", "must be increasing");
        }
        if (rj.contains("seed")) run.seed = unsigned_integer(rj.at("seed"), "run.seed");
        if (rj.contains("mc_budget")) run.mc_budget = unsigned_integer(rj.at("mc_budget"), "run.mc_budget");
        check(run.mc_budget >= 1000, "run.mc_budget", "must be >= 1000");
        if (rj.contains("zeta_budget")) run.zeta_budget = unsigned_integer(rj.at("zeta_budget"), "run.zeta_budget");
        check(run.zeta_budget >= 1000, "run.zeta_budget", "must be >= 1000");
        if (rj.contains("simulator")) {
            const auto s = rj.at("simulator").is_string() ? rj.at("simulator").get<std::string>() : "";
            check(s == "marked" || s == "direct", "run.simulator", "must be \"marked\" or \"direct\"");
            run.simulator = s == "marked" ? Simulator::Marked : Simulator::Direct;
        }
        if (rj.contains("normalization")) {
            const auto s = rj.at("normalization").is_string() ? rj.at("normalization").get<std::string>() : "";
            check(s == "formula" || s == "empirical", "run.normalization", "must be \"formula\" or \"empirical\"");
            run.normalization = s == "formula" ? Normalization::Formula : Normalization::Empirical;
        }
        if (rj.contains("stride")) run.stride = unsigned_integer(rj.at("stride"), "run.stride");
        check(run.stride >= 1, "run.stride", "must be >= 1");
    }

    if (doc.contains("output")) {
        const Json& o = doc.at("output");
        reject_unknown(o, "output", {"directory", "formats"});
        if (o.contains("directory")) {
            check(o.at("directory").is_string() && !o.at("directory").get<std::string>().empty(), "output.directory",
                  "must be a non-empty string");
            cfg.output.directory = o.at("directory").get<std::string>();
        }
        if (o.contains("formats")) {
            check(o.at("formats").is_array(), "output.formats", "must be an array");
            cfg.output.formats.clear();
            for (const auto& f : o.at("formats")) {
                check(f.is_string() && (f == "csv" || f == "json"), "output.formats", "entries must be \"csv\" or \"json\"");
                cfg.output.formats.push_back(f.get<std::string>());
            }
        }
    }
    cfg.source = doc;
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

/// Pattern graph for the configured functional: the explicit edge list, or
/// the complete graph on k vertices.
inline GeometricPattern config_pattern(const ModelConfig& m) {
    if (m.pattern) return GeometricPattern::from_edges(m.k, *m.pattern);
    return GeometricPattern::complete(m.k);
}

/// Pair indicator for a single edge on two vertices, subgraph count otherwise.
template <int D>
InteractionFunctional<D> config_functional(const ModelConfig& m) {
    const auto pattern = config_pattern(m);
    if (m.k == 2 && pattern.adjacency.edge_count() == 1) return make_pair_indicator<D>(m.delta);
    return make_subgraph_count<D>(pattern, m.delta);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the canonical (key-sorted, compact) config document with the
/// effective seed substituted.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    Json doc = cfg.source;
    doc["run"]["seed"] = cfg.run.seed;
    return fnv1a(doc.dump());
}

} // namespace torusdyn
