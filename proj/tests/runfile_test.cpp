#include <gtest/gtest.h>

#include "blaschke/runfile.hpp"

using namespace blaschke;

namespace {

const char* kJson = R"({
  "harmonic": {"name": "exp_cos", "params": []},
  "curvature_sign": -1,
  "lambda": 0,
  "chart": {"x": [-0.2, 0.2], "y": [-0.2, 0.2], "nx": 32, "ny": 33, "epsilon": 1},
  "thresholds": {"check": 1e-3}
})";

const char* kToml = R"(
harmonic = { name = "exp_cos", params = [] }
curvature_sign = -1
lambda = 0

[chart]
x = [-0.2, 0.2]
y = [-0.2, 0.2]
nx = 32
ny = 33
epsilon = 1

[thresholds]
check = 1e-3
)";

}  // namespace

TEST(RunFile, JsonAndTomlAgree) {
  const auto a = parse_run(parse_run_text(kJson, RunFormat::json));
  const auto b = parse_run(parse_run_text(kToml, RunFormat::toml));
  ASSERT_TRUE(a.factory && b.factory);
  EXPECT_EQ(a.factory->harmonic, "exp_cos");
  EXPECT_EQ(b.factory->harmonic, "exp_cos");
  EXPECT_EQ(a.factory->curvature_sign, b.factory->curvature_sign);
  EXPECT_TRUE(*a.chart == *b.chart);
  EXPECT_EQ(a.chart->ny(), 33);
  EXPECT_EQ(a.thresholds, b.thresholds);
  EXPECT_EQ(b.thresholds.at("check"), 1e-3);
  EXPECT_EQ(*a.lambda, 0.0);
  EXPECT_EQ(*b.lambda, 0.0);
}

TEST(RunFile, HarmonicShorthandAndDefaults) {
  const auto r = parse_run(nlohmann::json::parse(R"({"harmonic": "saddle"})"));
  EXPECT_EQ(r.factory->harmonic, "saddle");
  EXPECT_EQ(r.factory->curvature_sign, -1);
  EXPECT_TRUE(r.factory->params.empty());
  EXPECT_FALSE(r.chart);
  const auto c = chart_from_json(nlohmann::json::parse(R"({"x": [0, 1], "y": [0, 2]})"));
  EXPECT_EQ(c.nx(), 64);
  EXPECT_EQ(c.epsilon(), 1);
}

TEST(RunFile, ConstructionKeys) {
  const auto r = parse_run(nlohmann::json::parse(
      R"({"phi": "0", "lambda": -1, "beta": 0.5, "F0": 0.25, "sign": -1, "description": "x"})"));
  EXPECT_EQ(*r.phi, "0");
  EXPECT_EQ(*r.beta, 0.5);
  EXPECT_EQ(*r.F0, 0.25);
  EXPECT_EQ(*r.sign, -1);
}

TEST(RunFile, SchemaErrors) {
  auto bad = [](const char* text) { return parse_run(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"lamda": 0})"), ConfigError);
  EXPECT_THROW(bad(R"({"phi": "0", "psi": "x*y"})"), ConfigError);
  EXPECT_THROW(bad(R"({"lambda": "zero"})"), ConfigError);
  EXPECT_THROW(bad(R"({"chart": {"x": [0], "y": [0, 1]}})"), ConfigError);
  EXPECT_THROW(bad(R"({"chart": 3})"), ConfigError);
  EXPECT_THROW(bad(R"({"thresholds": [1]})"), ConfigError);
  EXPECT_THROW(bad(R"([1, 2])"), ConfigError);
  EXPECT_THROW(bad(R"({"chart": {"x": [0, 1], "y": [0, 1], "n": 3}})"), DomainError);
}

TEST(RunFile, ParseErrors) {
  EXPECT_THROW(parse_run_text("{\"phi\": ", RunFormat::json), ConfigError);
  try {
    parse_run_text("phi = \n", RunFormat::toml, "bad.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.toml"), std::string::npos);
  }
  EXPECT_THROW(load_run_file("/nonexistent/run.json"), IoError);
}

TEST(RunFile, ShippedRunsLoad) {
  const auto h0 = parse_run(load_run_file(BLASCHKE_SOURCE_DIR "/runs/factory_h0.json"));
  EXPECT_EQ(h0.factory->harmonic, "constant");
  EXPECT_EQ(h0.chart->nx(), 128);
  const auto ec = parse_run(load_run_file(BLASCHKE_SOURCE_DIR "/runs/factory_exp_cos.toml"));
  EXPECT_EQ(ec.factory->harmonic, "exp_cos");
  const auto flat = parse_run(load_run_file(BLASCHKE_SOURCE_DIR "/runs/flat.json"));
  EXPECT_EQ(*flat.lambda, -1.0);
}
