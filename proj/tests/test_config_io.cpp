#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>

#include "torusdyn/config.hpp"
#include "torusdyn/io.hpp"

using namespace torusdyn;

namespace {

const char* kValid = R"({
  "model": {"n": 1000, "T": 4, "d": 1, "k": 2, "delta": 0.25,
            "r": {"a": 1, "p": 1}, "sigma": {"b": 0, "q": 0}},
  "run": {"replicates": 50, "grid_spacing": 0.25, "lags": [0, 0.5], "seed": 3}
})";

std::string config_error_key(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

std::string with_model(const std::string& model) {
    return R"({"model": {)" + model + "}}";
}

} // namespace

TEST(Config, ParsesValidDocument) {
    const auto cfg = parse_config_text(kValid);
    EXPECT_EQ(cfg.model.n_values, std::vector<double>{1000.0});
    EXPECT_EQ(cfg.model.d, 1);
    EXPECT_DOUBLE_EQ(cfg.model.r_at(1000.0), 1e-3);
    EXPECT_EQ(cfg.model.sigma_at(1000.0), 0.0);
    EXPECT_EQ(cfg.run.replicates, 50u);
    EXPECT_EQ(cfg.run.lags, (std::vector<double>{0.0, 0.5}));
    EXPECT_EQ(cfg.grid().size(), 17u);
    EXPECT_EQ(cfg.output.directory, "out");
    const auto p = cfg.sim_params(1000.0);
    EXPECT_EQ(p.seed, 3u);
    EXPECT_EQ(p.T, 4.0);
}

TEST(Config, MissingKeysAreNamed) {
    const std::string base = R"("n": 10, "T": 1, "d": 1, "k": 2, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})";
    EXPECT_EQ(config_error_key(with_model(base)), "model.delta");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "T": 1, "d": 1, "k": 2, "delta": 0.2, "sigma": {"b": 0, "q": 0})")),
              "model.r");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "T": 1, "d": 1, "k": 2, "delta": 0.2, "r": {"a": 0.1})")), "model.r.p");
    EXPECT_EQ(config_error_key("{}"), ".model");
    EXPECT_EQ(config_error_key("not json"), "<document>");
}

TEST(Config, RejectsUnknownKeysAndBadRanges) {
    const std::string ok = R"("n": 10, "T": 1, "d": 1, "k": 2, "delta": 0.2, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})";
    EXPECT_EQ(config_error_key(with_model(ok + R"(, "extra": 1)")), "model.extra");
    EXPECT_EQ(config_error_key(R"({"model": {)" + ok + R"(}, "runn": {}})"), "runn");
    EXPECT_EQ(config_error_key(R"({"model": {)" + ok + R"(}, "run": {"seeds": 1}})"), "run.seeds");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "T": 1, "d": 5, "k": 2, "delta": 0.2, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})")),
              "model.d");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "T": 1, "d": 1, "k": 2, "delta": 0.6, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})")),
              "model.delta");
    EXPECT_EQ(config_error_key(with_model(R"("n": -1, "T": 1, "d": 1, "k": 2, "delta": 0.2, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})")),
              "model.n");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "n_grid": [10], "T": 1, "d": 1, "k": 2, "delta": 0.2, "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})")),
              "model.n");
    EXPECT_EQ(config_error_key(R"({"model": {)" + ok + R"(}, "run": {"lags": [0.5, 0.25]}})"), "run.lags");
    EXPECT_EQ(config_error_key(R"({"model": {)" + ok + R"(}, "run": {"simulator": "exact"}})"), "run.simulator");
    EXPECT_EQ(config_error_key(with_model(R"("n": 10, "T": 1, "d": 1, "k": 3, "delta": 0.2, "pattern": [[0, 3]], "r": {"a": 0.1, "p": 0}, "sigma": {"b": 0, "q": 0})")),
              "model.pattern");
}

TEST(Config, FunctionalSelection) {
    auto cfg = parse_config_text(kValid);
    EXPECT_EQ(config_functional<1>(cfg.model).kind, FunctionalKind::PairIndicator);
    cfg.model.k = 3;
    EXPECT_EQ(config_functional<1>(cfg.model).kind, FunctionalKind::SubgraphCount);
    cfg.model.pattern = std::vector<std::pair<int, int>>{{0, 1}, {1, 2}};
    EXPECT_EQ(config_pattern(cfg.model).adjacency.edge_count(), 2);
}

TEST(Hash, Fnv1aVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hash, DependsOnSeedAndContent) {
    auto cfg = parse_config_text(kValid);
    const auto h = config_hash(cfg);
    EXPECT_EQ(h, config_hash(parse_config_text(kValid)));
    cfg.run.seed = 4;
    EXPECT_NE(config_hash(cfg), h);
    // key order and whitespace do not matter
    const auto reordered = parse_config_text(R"({"run": {"seed": 3, "lags": [0, 0.5], "grid_spacing": 0.25, "replicates": 50},
      "model": {"sigma": {"q": 0, "b": 0}, "r": {"p": 1, "a": 1}, "delta": 0.25, "k": 2, "d": 1, "T": 4, "n": 1000}})");
    EXPECT_EQ(config_hash(reordered), h);
}

TEST(Io, FormatDoubleRoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e17, std::numeric_limits<double>::denorm_min()})
        EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, BatchCsvRoundTrip) {
    TrajectoryBatch b;
    b.params = {10.0, 1.0, 0.0, 1, 2, 5};
    b.grid = {0.0, 0.5, 1.0};
    b.replicates = 2;
    b.seeds = {11, 12};
    b.values = {1.0, 0.1, 1.0 / 3.0, 4.0, 5.5, 1e-17};
    const Provenance prov{0x1234, 5};
    const auto text = batch_csv(b, prov);
    EXPECT_EQ(text.rfind("# config_hash=0000000000001234 seed=5\nreplicate,t,f\n", 0), 0u);
    std::istringstream in(text);
    const auto back = read_batch_csv(in);
    EXPECT_EQ(back.grid, b.grid);
    EXPECT_EQ(back.replicates, b.replicates);
    EXPECT_EQ(back.values, b.values);
    const auto side = batch_sidecar(b, prov);
    EXPECT_EQ(side["config_hash"], "0000000000001234");
    EXPECT_EQ(side["replicate_seeds"].size(), 2u);
}

TEST(Io, CovarianceCsvColumns) {
    CovarianceCurve emp{{0.0, 1.0}, {1.0, 0.3}, {0.01, 0.02}};
    const auto text = covariance_csv({0.0, 1.0}, {1.0, 0.25}, emp, RegimeKind::Slow, Provenance{1, 2});
    EXPECT_NE(text.find("lag,theoretical,empirical,stderr,regime\n"), std::string::npos);
    EXPECT_NE(text.find("\n1,0.25,0.29999999999999999,0.02,slow\n"), std::string::npos);
    EXPECT_THROW(covariance_csv({0.0}, {1.0, 0.25}, emp, RegimeKind::Slow, Provenance{}), std::invalid_argument);
}

TEST(Io, ConstantsJsonSchema) {
    LimitConstants c;
    c.k = 2;
    c.d = 1;
    c.kappa_tilde = {{0.25, 0.01, 100}, {0.5, 0.0, 100}};
    c.alpha_unit = {0.5, 0.0, 100};
    const auto j = constants_json(c, Gamma::finite(1.0), Provenance{7, 8});
    EXPECT_EQ(j["kappa_tilde"].size(), 2u);
    EXPECT_EQ(j["kappa"].size(), 2u);
    EXPECT_NEAR(j["lambda"]["sum"].get<double>(), 1.0, 1e-12);
    EXPECT_GT(j["lambda"]["stderr"][0].get<double>(), 0.0);
    EXPECT_EQ(j["lambda"]["gamma"], "1");
    EXPECT_EQ(constants_json(c, Gamma::infinity(), Provenance{})["lambda"]["gamma"], "inf");
}
