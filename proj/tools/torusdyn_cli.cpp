// torusdyn: experiment runner.
//
//   torusdyn simulate   --config cfg.json [--seed S] [--out DIR] [--threads N]
//   torusdyn constants  --config cfg.json
//   torusdyn covariance --config cfg.json
//   torusdyn verify     <geometry|functional|mecke|equivalence|gaussianity|all>
//   torusdyn regime     --a A --p P --b B --q Q --k K --d D  (or --config)
//
// Exit codes: 0 success, 1 failed verification, 2 invalid configuration or
// arguments, 3 refused regime, 4 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusdyn/config.hpp"
#include "torusdyn/estimator.hpp"
#include "torusdyn/io.hpp"
#include "torusdyn/limit_covariance.hpp"
#include "torusdyn/moment_engine.hpp"
#include "torusdyn/parallel.hpp"
#include "torusdyn/verify.hpp"

namespace fs = std::filesystem;
using namespace torusdyn;

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kBadConfig = 2, kRefused = 3, kRuntime = 4 };

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int threads = default_threads();
};

ExperimentConfig load(const Overrides& o) {
    std::ifstream in(o.config_path, std::ios::binary);
    if (!in) throw ConfigError("--config", "cannot read " + o.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto cfg = parse_config_text(ss.str());
    if (o.seed) cfg.run.seed = *o.seed;
    if (o.out) cfg.output.directory = *o.out;
    return cfg;
}

bool wants(const ExperimentConfig& cfg, const std::string& fmt) {
    for (const auto& f : cfg.output.formats)
        if (f == fmt) return true;
    return false;
}

std::string suffix(const ExperimentConfig& cfg, std::size_t i) {
    return cfg.model.n_values.size() > 1 ? "_n" + std::to_string(i) : "";
}

Provenance provenance(const ExperimentConfig& cfg) { return {config_hash(cfg), cfg.run.seed}; }

void print_report(const RegimeReport& rep, std::ostream& os) {
    os << "regime: " << to_string(rep.regime.kind);
    if (rep.regime.kind == RegimeKind::Moderate) os << " (beta = " << rep.regime.beta << ")";
    os << "\n";
    const auto& g = rep.regime.gamma;
    os << "gamma = lim n r^d: "
       << (g.kind == Gamma::Kind::Zero ? std::string("0")
                                       : g.kind == Gamma::Kind::Infinity ? std::string("inf") : format_double(g.value))
       << "\n";
    for (const auto& c : rep.conditions) os << (c.pass ? "  [pass] " : "  [FAIL] ") << c.name << "  (" << c.detail << ")\n";
}

nlohmann::json report_json(const RegimeReport& rep) {
    nlohmann::json j;
    j["regime"] = to_string(rep.regime.kind);
    if (rep.regime.kind == RegimeKind::Moderate) j["beta"] = rep.regime.beta;
    const auto& g = rep.regime.gamma;
    j["gamma"] = g.kind == Gamma::Kind::Zero ? "0" : g.kind == Gamma::Kind::Infinity ? "inf" : format_double(g.value);
    j["admissible"] = rep.admissible();
    j["conditions"] = nlohmann::json::array();
    for (const auto& c : rep.conditions) j["conditions"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    return j;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Overrides& o) {
    const auto cfg = load(o);
    const auto prov = provenance(cfg);
    const fs::path dir = cfg.output.directory;
    for (std::size_t i = 0; i < cfg.model.n_values.size(); ++i) {
        const double n = cfg.model.n_values[i];
        const auto params = cfg.sim_params(n);
        const auto grid = cfg.grid();
        const auto batch = dispatch_dimension(cfg.model.d, [&]<int D>() {
            const auto fnl = config_functional<D>(cfg.model);
            return simulate_batch<D>(params, grid, fnl, cfg.model.r_at(n), cfg.run.replicates, cfg.run.simulator, o.threads);
        });
        const std::string stem = "trajectories" + suffix(cfg, i);
        if (wants(cfg, "csv")) write_text(dir / (stem + ".csv"), batch_csv(batch, prov));
        if (wants(cfg, "json")) write_text(dir / (stem + ".json"), batch_sidecar(batch, prov).dump(2) + "\n");
        std::cout << "wrote " << (dir / stem).string() << " (" << batch.replicates << " replicates x " << batch.grid.size()
                  << " times)\n";
    }
    return kOk;
}

template <int D>
LimitConstants constants_for(const ExperimentConfig& cfg, const InteractionFunctional<D>& fnl) {
    return estimate_constants<D>(fnl, cfg.run.mc_budget, derive_seed(cfg.run.seed, 1000));
}

int cmd_constants(const Overrides& o) {
    const auto cfg = load(o);
    const auto prov = provenance(cfg);
    const auto rep = classify_regime(cfg.model.scaling(), cfg.model.k, cfg.model.d);
    nlohmann::json doc = dispatch_dimension(cfg.model.d, [&]<int D>() {
        const auto fnl = config_functional<D>(cfg.model);
        const auto c = constants_for<D>(cfg, fnl);
        auto j = constants_json(c, rep.regime.gamma, prov);
        j["lambda_at_n"] = nlohmann::json::array();
        for (double n : cfg.model.n_values) {
            const double g = n * std::pow(cfg.model.r_at(n), cfg.model.d);
            j["lambda_at_n"].push_back({{"n", n}, {"gamma", g}, {"values", c.lambda(g)}});
        }
        return j;
    });
    const fs::path path = fs::path(cfg.output.directory) / "constants.json";
    write_text(path, doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return kOk;
}

int cmd_covariance(const Overrides& o) {
    const auto cfg = load(o);
    const auto prov = provenance(cfg);
    const auto rep = classify_regime(cfg.model.scaling(), cfg.model.k, cfg.model.d);
    if (rep.regime.kind == RegimeKind::Fast && !rep.admissible()) {
        std::cerr << "refusing fast-regime covariance: side conditions fail\n";
        print_report(rep, std::cerr);
        return kRefused;
    }
    for (std::size_t i = 0; i < cfg.model.n_values.size(); ++i) {
        const double n = cfg.model.n_values[i];
        const double r = cfg.model.r_at(n);
        const double sigma = cfg.model.sigma_at(n);
        const auto params = cfg.sim_params(n);
        const auto grid = cfg.grid();
        std::string csv = dispatch_dimension(cfg.model.d, [&]<int D>() {
            const auto fnl = config_functional<D>(cfg.model);
            const auto c = constants_for<D>(cfg, fnl);
            // theoretical curve evaluated at the finite-n gamma and beta
            const auto gamma = Gamma::finite(n * std::pow(r, D));
            std::vector<double> theory;
            ZetaFunction zeta_fn;
            if (rep.regime.kind == RegimeKind::Moderate) {
                zeta_fn = (D == 1 && fnl.kind == FunctionalKind::PairIndicator)
                              ? pair_zeta_1d(fnl.delta)
                              : mc_zeta<D>(fnl, c, cfg.run.zeta_budget, derive_seed(cfg.run.seed, 1001));
            }
            for (double lag : cfg.run.lags) {
                switch (rep.regime.kind) {
                case RegimeKind::Slow: theory.push_back(limit_cov(RegimeSpec::slow(gamma), lag, c)); break;
                case RegimeKind::Moderate:
                    theory.push_back(limit_cov(RegimeSpec::moderate((sigma / r) * (sigma / r), gamma), lag, c, zeta_fn));
                    break;
                case RegimeKind::Fast:
                    theory.push_back(lag == 0.0 ? 1.0 : fast_regime_cov(lag, c, ModelPoint{n, r, sigma}));
                    break;
                }
            }
            const auto batch = simulate_batch<D>(params, grid, fnl, r, cfg.run.replicates, cfg.run.simulator, o.threads);
            const Centering formula{mean_f(n, r, c), var_f(n, r, c)};
            const auto curve = empirical_covariance(batch, cfg.run.lags, cfg.run.normalization, formula, cfg.run.stride);
            return covariance_csv(cfg.run.lags, theory, curve, rep.regime.kind, prov);
        });
        const fs::path path = fs::path(cfg.output.directory) / ("covariance" + suffix(cfg, i) + ".csv");
        write_text(path, csv);
        std::cout << csv;
    }
    return kOk;
}

int cmd_verify(const std::string& suite, const Overrides& o) {
    const std::vector<std::string> all{"geometry", "functional", "mecke", "equivalence", "gaussianity"};
    std::vector<std::string> run;
    if (suite == "all") run = all;
    else if (std::find(all.begin(), all.end(), suite) != all.end()) run = {suite};
    else {
        std::cerr << "unknown suite '" << suite << "'\n";
        return kBadConfig;
    }
    const std::uint64_t seed = o.seed.value_or(1);
    CheckList checks;
    for (const auto& s : run) {
        CheckList part;
        if (s == "geometry") part = verify_geometry(seed);
        if (s == "functional") part = verify_functional(seed);
        if (s == "mecke") part = verify_mecke(20000, 400000, seed);
        if (s == "equivalence") {
            EquivalenceSetup e;
            e.params.seed = seed;
            e.replicates = 4000;
            part = verify_equivalence(e, o.threads);
        }
        if (s == "gaussianity") {
            GaussianitySetup g;
            g.seed = seed;
            g.replicates = 1000;
            part = verify_gaussianity(g, o.threads);
        }
        checks.insert(checks.end(), part.begin(), part.end());
    }
    for (const auto& c : checks)
        std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << (c.detail.empty() ? "" : "  [" + c.detail + "]") << "\n";
    const bool ok = all_passed(checks);
    std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
    return ok ? kOk : kFailed;
}

int cmd_regime(const Scaling& s, int k, int d, const Overrides& o) {
    Scaling scaling = s;
    if (!o.config_path.empty()) {
        const auto cfg = load(o);
        scaling = cfg.model.scaling();
        k = cfg.model.k;
        d = cfg.model.d;
    }
    if (!(scaling.a > 0.0 && scaling.b >= 0.0)) throw ConfigError("--a/--b", "need a > 0 and b >= 0");
    if (k < 2 || d < 1 || d > kMaxDim) throw ConfigError("--k/--d", "need k >= 2 and 1 <= d <= 4");
    const auto rep = classify_regime(scaling, k, d);
    print_report(rep, std::cout);
    if (o.out) write_text(fs::path(*o.out) / "regime.json", report_json(rep).dump(2) + "\n");
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Birth-death-Brownian point process functionals on the flat torus"};
    app.require_subcommand(1);
    Overrides o;
    std::uint64_t seed = 0;
    std::string out;

    auto common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", o.config_path, "experiment configuration (JSON)");
        if (config_required) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override run.seed");
        sub->add_option("--out", out, "override output.directory");
        sub->add_option("--threads", o.threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
    };
    auto* simulate = app.add_subcommand("simulate", "simulate trajectories of f");
    common(simulate, true);
    auto* constants = app.add_subcommand("constants", "estimate kappa~, kappa and lambda");
    common(constants, true);
    auto* covariance = app.add_subcommand("covariance", "theoretical and empirical covariance curves");
    common(covariance, true);
    auto* verify = app.add_subcommand("verify", "run a self-check suite");
    std::string suite = "all";
    verify->add_option("suite", suite, "geometry|functional|mecke|equivalence|gaussianity|all");
    common(verify, false);
    auto* regime = app.add_subcommand("regime", "classify a scaling r = a n^-p, sigma = b n^-q");
    Scaling scaling;
    int k = 2, d = 1;
    regime->add_option("--a", scaling.a, "r prefactor");
    regime->add_option("--p", scaling.p, "r exponent");
    regime->add_option("--b", scaling.b, "sigma prefactor");
    regime->add_option("--q", scaling.q, "sigma exponent");
    regime->add_option("--k", k, "order of the functional");
    regime->add_option("--d", d, "dimension");
    common(regime, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadConfig;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed")) o.seed = seed;
        if (sub->count("--out")) o.out = out;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*constants) return cmd_constants(o);
        if (*covariance) return cmd_covariance(o);
        if (*verify) return cmd_verify(suite, o);
        if (*regime) return cmd_regime(scaling, k, d, o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}
