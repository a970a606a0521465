#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "peakspec/config.hpp"

using namespace peakspec;
using namespace peakspec::config;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Toml, ScalarsArraysAndComments) {
  const auto t = parse_toml(R"(name = "a # b"  # trailing
[x]
i = 1_000
f = -2.5e-3
g = inf
b = true
s = "tab\there \"q\""
a = [1, 2.5, -3,]
e = []
)");
  EXPECT_EQ(t[""]["name"], "a # b");
  EXPECT_EQ(t["x"]["i"], 1000);
  EXPECT_TRUE(t["x"]["i"].is_number_integer());
  EXPECT_DOUBLE_EQ(t["x"]["f"].get<double>(), -2.5e-3);
  EXPECT_TRUE(std::isinf(t["x"]["g"].get<double>()));
  EXPECT_EQ(t["x"]["b"], true);
  EXPECT_EQ(t["x"]["s"], "tab\there \"q\"");
  EXPECT_EQ(t["x"]["a"].size(), 3u);
  EXPECT_TRUE(t["x"]["e"].empty());
}

TEST(Toml, ErrorsCarryLineNumbers) {
  auto msg = [](const std::string& text) {
    try {
      parse_toml(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(msg("[a]\nx = 1\nx = 2\n").find("line 3"), std::string::npos);
  EXPECT_NE(msg("[a]\n[a]\n").find("defined twice"), std::string::npos);
  EXPECT_NE(msg("[a.b]\n").find("nested"), std::string::npos);
  EXPECT_NE(msg("x\n").find("expected key = value"), std::string::npos);
  EXPECT_NE(msg("x = \"open\n").find("line 1"), std::string::npos);
  EXPECT_NE(msg("x = [1, 2\n").find("line 1"), std::string::npos);
  EXPECT_NE(msg("x = nope\n").find("line 1"), std::string::npos);
}

TEST(Config, DefaultsAndTables) {
  const Config c = parse(R"(
name = "demo"
[profile]
kind = "superexp"
params = [1.0]
[domain]
R = 1.0
L = 6.0
[bc]
upper = "N"
lower = "N"
[sweep]
study = "embedding"
variable = "rho"
values = [2, 3, 4]
)");
  EXPECT_EQ(c.name, "demo");
  EXPECT_EQ(c.profile_spec(), "superexp:1:0");
  EXPECT_EQ(c.values, (std::vector<double>{2, 3, 4}));
  EXPECT_EQ(c.nz, 8);
  EXPECT_EQ(c.formats.size(), 3u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, PowerProfileDefaultsToStartAtOne) {
  const Config c = parse("[profile]\nkind = \"power\"\nparams = [2.0]\n");
  EXPECT_DOUBLE_EQ(c.r_start, 1.0);
  EXPECT_DOUBLE_EQ(c.R, 1.0);
  EXPECT_EQ(c.profile_spec(), "power:2:1:1");
  EXPECT_NO_THROW(c.validate());
  EXPECT_NEAR(std::exp(log_value(c.make_profile(), 2.0)), 0.25, 1e-14);
}

TEST(Config, UnknownKeysAndTypes) {
  EXPECT_EQ(error_of("[mesh]\nfoo = 1\n"), "unknown key 'foo' in [mesh]");
  EXPECT_EQ(error_of("[meshes]\nny = 1\n"), "unknown table [meshes]");
  EXPECT_EQ(error_of("colour = 1\n"), "unknown key 'colour'");
  EXPECT_EQ(error_of("[domain]\nL = \"six\"\n"), "domain.L must be a number");
  EXPECT_EQ(error_of("[mesh]\nnz = 4.5\n"), "mesh.nz must be an integer");
  EXPECT_EQ(error_of("[sweep]\nvalues = 3\n"), "sweep.values must be an array of numbers");
}

TEST(Config, Validation) {
  EXPECT_EQ(error_of("[mesh]\nnz = 2\n"), "mesh.nz must be at least 4");
  EXPECT_EQ(error_of("[sweep]\nvalues = [3, 2]\n"), "sweep.values must be strictly ascending");
  EXPECT_EQ(error_of("[sweep]\nstudy = \"other\"\n"), "sweep.study must be truncation, embedding or mn");
  EXPECT_EQ(error_of("[bc]\nupper = \"X\"\n"), "bc.upper must be one of D, M, N");
  EXPECT_EQ(error_of("[output]\nformats = [\"pdf\"]\n"), "unknown output format 'pdf'");
  EXPECT_EQ(error_of("[tolerances]\ngap = 0\n"), "tolerances must be positive");
  EXPECT_EQ(error_of("[domain]\nL = -1\n").substr(0, 7), "domain:");
  EXPECT_EQ(error_of("name = \"a/b\"\n"), "name must be non-empty and contain no path separators");
  EXPECT_THROW(load("/nonexistent/peakspec.toml"), ConfigError);
}

TEST(Config, DumpRoundTrip) {
  Config c;
  EXPECT_EQ(parse(dump(c)), c);
  c.name = "round \"trip\"";
  c.profile_kind = "flat";
  c.profile_params = {0.5, 0.0, 64.0};
  c.nu = 0.25;
  c.upper = "M";
  c.lower = "N";
  c.right_edge = "Hinged";
  c.ny = 12;
  c.grading = 0.9;
  c.degenerate_ratio = 1e-30;
  c.values = {1.0, 2.5, 1e3};
  c.k = 2;
  c.expect = "discrete";
  c.residual = 1e-10;
  c.formats = {"json"};
  const Config back = parse(dump(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(dump(back), dump(c));
}

TEST(Config, PlanConversion) {
  Config c;
  c.name = "p";
  c.values = {4, 6};
  c.k = 3;
  c.stabilization = 1e-3;
  c.upper = "N";
  c.lower = "M";
  const auto p = c.plan();
  EXPECT_EQ(p.name, "p");
  EXPECT_EQ(p.profile, "exp:1:0");
  EXPECT_EQ(p.domain.side_bc.str(), "N-M");
  EXPECT_EQ(p.k, 3);
  EXPECT_DOUBLE_EQ(p.thresholds.stabilization, 1e-3);
  EXPECT_EQ(p.variable, lab::SweepVariable::L);
  EXPECT_NO_THROW(p.validate());
}

TEST(Config, LoadsShippedConfigs) {
  const std::filesystem::path dir = PEAKSPEC_CONFIG_DIR;
  int n = 0;
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".toml") continue;
    const Config c = load(f.path().string());
    EXPECT_NO_THROW(c.validate()) << f.path();
    EXPECT_EQ(parse(dump(c)), c) << f.path();
    ++n;
  }
  EXPECT_GE(n, 4);
}
