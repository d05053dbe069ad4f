#pragma once

// Artifact emission: trajectory CSV + JSON sidecar, covariance curve CSV,
// constants JSON. Every file starts with (CSV: a comment line; JSON: fields)
// the config hash and the seed. Doubles are written with 17 significant
// digits so they read back exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "torusdyn/estimator.hpp"
#include "torusdyn/limit_covariance.hpp"
#include "torusdyn/moment_engine.hpp"

namespace torusdyn {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Provenance {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;

    std::string csv_comment() const { return "# config_hash=" + hex64(config_hash) + " seed=" + std::to_string(seed) + "\n"; }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Columns replicate,t,f; one row per (replicate, grid time).
inline std::string batch_csv(const TrajectoryBatch& b, const Provenance& prov) {
    std::string s = prov.csv_comment();
    s += "replicate,t,f\n";
    for (std::size_t rep = 0; rep < b.replicates; ++rep)
        for (std::size_t g = 0; g < b.grid.size(); ++g) {
            s += std::to_string(rep);
            s += ',';
            s += format_double(b.grid[g]);
            s += ',';
            s += format_double(b.at(rep, g));
            s += '\n';
        }
    return s;
}

inline nlohmann::json batch_sidecar(const TrajectoryBatch& b, const Provenance& prov) {
    nlohmann::json j;
    j["config_hash"] = hex64(prov.config_hash);
    j["seed"] = prov.seed;
    j["params"] = {{"n", b.params.n}, {"T", b.params.T}, {"sigma", b.params.sigma}, {"d", b.params.d},
                   {"k", b.params.k},  {"r", b.r},       {"simulator", to_string(b.simulator)}};
    j["replicates"] = b.replicates;
    j["grid_size"] = b.grid.size();
    j["replicate_seeds"] = b.seeds;
    return j;
}

/// Reads the values of a trajectory CSV produced by batch_csv back into a
/// batch shell (grid, replicates, values). Params and seeds come from the
/// sidecar and are not restored here.
inline TrajectoryBatch read_batch_csv(std::istream& in) {
    TrajectoryBatch b;
    std::string line;
    std::vector<std::size_t> reps;
    std::vector<double> ts;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("replicate,", 0) == 0) continue;
        std::istringstream row(line);
        std::string a, t, f;
        if (!std::getline(row, a, ',') || !std::getline(row, t, ',') || !std::getline(row, f))
            throw std::runtime_error("malformed trajectory row: " + line);
        reps.push_back(std::stoull(a));
        ts.push_back(std::stod(t));
        b.values.push_back(std::stod(f));
    }
    if (reps.empty()) throw std::runtime_error("empty trajectory file");
    b.replicates = reps.back() + 1;
    const std::size_t g = reps.size() / b.replicates;
    if (g * b.replicates != reps.size()) throw std::runtime_error("trajectory rows do not form a full matrix");
    b.grid.assign(ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(g));
    b.seeds.assign(b.replicates, 0);
    return b;
}

/// Columns lag,theoretical,empirical,stderr,regime.
inline std::string covariance_csv(const std::vector<double>& lags, const std::vector<double>& theoretical,
                                  const CovarianceCurve& empirical, RegimeKind regime, const Provenance& prov) {
    if (theoretical.size() != lags.size() || empirical.values.size() != lags.size())
        throw std::invalid_argument("covariance_csv: column lengths differ");
    std::string s = prov.csv_comment();
    s += "lag,theoretical,empirical,stderr,regime\n";
    for (std::size_t i = 0; i < lags.size(); ++i) {
        s += format_double(lags[i]) + ',' + format_double(theoretical[i]) + ',' + format_double(empirical.values[i]) + ',' +
             format_double(empirical.std_error[i]) + ',' + to_string(regime) + '\n';
    }
    return s;
}

inline nlohmann::json estimate_json(const MomentEstimate& e) {
    return {{"value", e.value}, {"stderr", e.std_error}, {"samples", e.samples}};
}

/// First-order error of lambda_j from independent errors in each kappa~_l,
/// by one-sided differences of size one standard error.
inline std::vector<double> lambda_stderr(const LimitConstants& c, const Gamma& gamma) {
    const auto base = c.lambda(gamma);
    std::vector<double> var(base.size(), 0.0);
    for (int l = 0; l < c.k; ++l) {
        if (c.kappa_tilde[l].std_error == 0.0) continue;
        LimitConstants moved = c;
        moved.kappa_tilde[l].value += c.kappa_tilde[l].std_error;
        const auto lam = moved.lambda(gamma);
        for (std::size_t j = 0; j < var.size(); ++j) var[j] += (lam[j] - base[j]) * (lam[j] - base[j]);
    }
    for (auto& v : var) v = std::sqrt(v);
    return var;
}

/// {k, d, delta, kappa_tilde[], kappa[], lambda} with stderr on every MC value.
inline nlohmann::json constants_json(const LimitConstants& c, const Gamma& gamma, const Provenance& prov) {
    nlohmann::json j;
    j["config_hash"] = hex64(prov.config_hash);
    j["seed"] = prov.seed;
    j["k"] = c.k;
    j["d"] = c.d;
    j["delta"] = c.delta;
    j["alpha_unit"] = estimate_json(c.alpha_unit);
    j["kappa_tilde"] = nlohmann::json::array();
    j["kappa"] = nlohmann::json::array();
    for (int jj = 1; jj <= c.k; ++jj) {
        j["kappa_tilde"].push_back(estimate_json(c.kappa_tilde[jj - 1]));
        const double w = overlap_weight(jj, c.k);
        j["kappa"].push_back({{"value", c.kappa(jj)}, {"stderr", c.kappa_tilde[jj - 1].std_error / w}});
    }
    const auto lam = c.lambda(gamma);
    double sum = 0.0;
    for (double v : lam) sum += v;
    std::string g = gamma.kind == Gamma::Kind::Zero ? "0" : gamma.kind == Gamma::Kind::Infinity ? "inf" : format_double(gamma.value);
    j["lambda"] = {{"gamma", g}, {"values", lam}, {"stderr", lambda_stderr(c, gamma)}, {"sum", sum}};
    return j;
}

} // namespace torusdyn
