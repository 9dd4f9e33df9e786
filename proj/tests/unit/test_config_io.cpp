#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bubblelab/config.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/io.hpp"
#include "bubblelab/runner.hpp"

using namespace bubblelab;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "exp.yaml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

constexpr const char* kSmall = R"(model:
  preset: inverse_bes3
payoffs:
  - {type: call, K: 1, T: 0.5}
  - {type: put, K: 1, T: 0.5}
  - {type: barrier, barrier: UO, level: 2, K: 1, T: 0.5}
sim:
  dt: 0.01
  n_paths: 500
  seed: 5
methods: [direct_p, survival_q, decomposition_q, closed_form]
)";

}  // namespace

TEST(Config, ParsesDefaultsAndPayoffs) {
    const ExperimentConfig c = parse_config(kSmall, "small.yaml");
    EXPECT_EQ(c.model.preset, "inverse_bes3");
    ASSERT_EQ(c.payoffs.size(), 3u);
    EXPECT_EQ(c.payoffs[0].line, 4);
    EXPECT_EQ(c.payoffs[2].barrier, Barrier::UO);
    EXPECT_EQ(c.sim.seed, 5u);
    EXPECT_EQ(c.sim.workers, 1u);
    EXPECT_EQ(c.methods.size(), 4u);
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& entry : std::filesystem::directory_iterator(BUBBLELAB_CONFIG_DIR)) {
        if (entry.path().extension() != ".yaml") continue;
        EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    }
}

TEST(Config, UnknownKeyReportsLineAndColumn) {
    const std::string msg = error_of("model:\n  preset: inverse_bes3\n  sigma: 2\nsim:\n  seed: 1\n");
    EXPECT_EQ(msg.rfind("exp.yaml:3:3:", 0), 0u) << msg;
    EXPECT_NE(msg.find("sigma"), std::string::npos);
}

TEST(Config, SeedIsRequired) {
    const std::string msg = error_of("model:\n  preset: inverse_bes3\nsim:\n  dt: 0.01\n");
    EXPECT_NE(msg.find("sim.seed is required"), std::string::npos) << msg;
    EXPECT_EQ(msg.rfind("exp.yaml:4:", 0), 0u) << msg;
}

TEST(Config, DatesMustLieOnTheGrid) {
    const std::string msg = error_of(
        "model: {preset: inverse_bes3}\npayoffs:\n  - {type: call, K: 1, T: 0.0015}\n"
        "sim: {seed: 1, dt: 0.001}\n");
    EXPECT_EQ(msg.rfind("exp.yaml:3:", 0), 0u) << msg;
    EXPECT_NE(msg.find("multiple of sim.dt"), std::string::npos) << msg;
}

TEST(Config, RejectsMalformedInput) {
    EXPECT_NE(error_of("model: [1, 2\n"), "");
    EXPECT_NE(error_of("model: {preset: heston}\nsim: {seed: 1}\n").find("unknown model preset"),
              std::string::npos);
    EXPECT_NE(error_of("model: {preset: inverse_bes3}\npayoffs:\n  - {type: exchange, K: 1}\n"
                       "sim: {seed: 1}\n")
                  .find("two_asset"),
              std::string::npos);
    EXPECT_NE(error_of("model: {preset: inverse_bes3}\npayoffs:\n  - {type: chooser, S: 2, T: 1}\n"
                       "sim: {seed: 1}\n")
                  .find("0 < S < T"),
              std::string::npos);
    EXPECT_NE(error_of("model: {preset: inverse_bes3}\nsim: {seed: 1}\nmethods: [direct_p, direct_p]\n")
                  .find("listed twice"),
              std::string::npos);
    EXPECT_NE(error_of("model: {preset: inverse_bes3}\nsim: {seed: 1, n_paths: -4}\n"), "");
}

TEST(Io, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
        const std::string s = format_number(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
}

TEST(Io, Sha256KnownDigest) {
    EXPECT_EQ(sha256_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, CsvHeaderAndEmptyFields) {
    PriceRow r;
    r.pricer = "call";
    r.model = "m";
    r.K = 1.0;
    r.T = 1.0;
    r.style = "european";
    r.method = "direct_p";
    r.error = "boom";
    std::ostringstream os;
    write_price_csv(os, {r});
    EXPECT_EQ(os.str(),
              "pricer,model,K,T,style,method,value,std_err,main_term,default_term,consistent,error\n"
              "call,m,1,1,european,direct_p,,,,,,boom\n");
}

TEST(Runner, EmptyPayoffListGivesHeaderOnly) {
    const ExperimentConfig c =
        parse_config("model: {preset: inverse_bes3}\npayoffs: []\nsim: {seed: 1}\n");
    const RunReport r = run_experiment(c);
    EXPECT_TRUE(r.rows.empty());
    const std::string csv = write_outputs(c, r);
    EXPECT_EQ(csv, "pricer,model,K,T,style,method,value,std_err,main_term,default_term,consistent,error\n");
}

TEST(Runner, OutputIsByteIdenticalAndWorkerInvariant) {
    ExperimentConfig c = parse_config(kSmall, "small.yaml");
    const RunReport a = run_experiment(c);
    const RunReport b = run_experiment(c);
    c.sim.workers = 3;
    const RunReport w = run_experiment(c);
    c.sim.workers = 1;
    const std::string csv = write_outputs(c, a);
    EXPECT_EQ(csv, write_outputs(c, b));
    EXPECT_EQ(csv, write_outputs(c, w));
    EXPECT_EQ(a.rows.size(), 12u);

    nlohmann::json ma = a.manifest(c), mb = b.manifest(c);
    EXPECT_EQ(ma["schema"], kManifestSchema);
    EXPECT_EQ(ma["config"]["sha256"], sha256_hex(c.text));
    ma.erase("timing_seconds");
    mb.erase("timing_seconds");
    for (auto* m : {&ma, &mb})
        for (auto& cell : (*m)["cells"]) cell.erase("timing_seconds");
    EXPECT_EQ(ma.dump(), mb.dump());
}

TEST(Runner, UnsupportedCellsBecomeErrorRows) {
    const ExperimentConfig c = parse_config(
        "model: {preset: cev, alpha: 1.5}\npayoffs:\n  - {type: call, K: 1, T: 0.5}\n"
        "sim: {seed: 1, dt: 0.01, n_paths: 200}\nmethods: [survival_q, closed_form]\n");
    const RunReport r = run_experiment(c);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_TRUE(r.rows[0].error.empty());
    EXPECT_TRUE(r.rows[0].value.has_value());
    EXPECT_FALSE(r.rows[1].error.empty());
    EXPECT_FALSE(r.rows[1].value.has_value());
}

TEST(Runner, VerifyPassesOnASmallRun) {
    const ExperimentConfig c = parse_config(kSmall, "small.yaml");
    for (const VerifyLine& l : verify_experiment(c)) EXPECT_TRUE(l.pass) << l.name << ": " << l.detail;
}
