#include <cmath>
#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "peakspec/lab.hpp"

using namespace peakspec;
using namespace peakspec::lab;
using criteria::BcKind;
using criteria::BcPair;

namespace {

ExperimentPlan plan(const std::string& name, const std::string& profile, BcPair sides, double R,
                    std::vector<double> values) {
  ExperimentPlan p;
  p.name = name;
  p.profile = profile;
  p.domain.R = R;
  p.domain.L = values.front();
  p.domain.side_bc = sides;
  p.values = std::move(values);
  p.per_unit_y = 4.0;
  p.nz = 4;
  p.k = 3;
  return p;
}

std::filesystem::path scratch(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("peakspec_lab_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(Truncation, SuperExponentialFreeSidesStabilize) {
  auto p = plan("nn_superexp", "superexp:1", {BcKind::N, BcKind::N}, 0.0, {3.0, 4.5, 6.0});
  p.degenerate_ratio = 1e-20;
  p.expect = Expectation::Discrete;
  const auto r = truncation_sweep(p);
  ASSERT_EQ(r.stabilization.size(), 2u);
  EXPECT_LT(r.stabilization.back()[0], 1e-2);
  EXPECT_TRUE(r.has_flag("discreteness signature"));
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.verdict->basis, criteria::Basis::Corollary2);
}

TEST(Truncation, FlatStripHasNoPositiveGapTrend) {
  auto p = plan("nn_flat", "flat:1:0:16", {BcKind::N, BcKind::N}, 0.0, {4.0, 8.0, 16.0});
  p.per_unit_y = 2.0;
  p.expect = Expectation::NotDiscrete;
  const auto r = truncation_sweep(p);
  EXPECT_TRUE(r.has_flag("no discreteness signature"));
  EXPECT_TRUE(r.has_flag("no positive gap trend"));
  EXPECT_TRUE(r.pass());
  EXPECT_LT(r.points.back().clamped[0], r.points.front().clamped[0] / 4.0);
}

TEST(Truncation, WrongExpectationFails) {
  auto p = plan("nn_flat_wrong", "flat:1:0:16", {BcKind::N, BcKind::N}, 0.0, {4.0, 8.0, 16.0});
  p.per_unit_y = 2.0;
  p.expect = Expectation::Discrete;
  EXPECT_FALSE(truncation_sweep(p).pass());
}

TEST(Truncation, TwoValuesMakeNoClaim) {
  auto p = plan("short", "exp:1", {BcKind::D, BcKind::D}, 0.0, {2.0, 3.0});
  const auto r = truncation_sweep(p);
  EXPECT_TRUE(r.has_flag("fewer than 3 sweep values: no convergence claim"));
  EXPECT_TRUE(r.has_flag("no discreteness signature"));
}

TEST(Truncation, HomothetyLeavesStabilizationUnchanged) {
  // Scaling half-width and length by c scales every eigenvalue by c^-4.
  auto a = plan("hom_a", "flat:0.5:0:8", {BcKind::D, BcKind::D}, 0.0, {2.0, 4.0, 8.0});
  a.per_unit_y = 2.0;
  auto b = plan("hom_b", "flat:1:0:16", {BcKind::D, BcKind::D}, 0.0, {4.0, 8.0, 16.0});
  b.per_unit_y = 1.0;
  const auto ra = truncation_sweep(a), rb = truncation_sweep(b);
  EXPECT_NEAR(rb.points[0].clamped[0] * 16.0, ra.points[0].clamped[0], 1e-9 * ra.points[0].clamped[0]);
  for (std::size_t i = 0; i < ra.stabilization.size(); ++i)
    for (std::size_t k = 0; k < ra.stabilization[i].size(); ++k)
      EXPECT_NEAR(ra.stabilization[i][k], rb.stabilization[i][k], 1e-10);
}

TEST(Truncation, MetricIsScaleInvariant) {
  for (double c : {1e-6, 3.0, 1e8}) EXPECT_NEAR(lab::detail::rel_change(c * 2.0, c * 2.5), 0.25, 1e-15);
}

TEST(Embedding, SuperExponentialGrows) {
  auto p = plan("emb", "superexp:1", {BcKind::N, BcKind::N}, 1.0, {2.0, 3.0, 4.0});
  p.variable = SweepVariable::Rho;
  p.domain.L = 6.0;
  p.degenerate_ratio = 1e-30;
  p.per_unit_y = 4.0;
  const auto r = embedding_growth_study(p);
  ASSERT_EQ(r.embedding.size(), 3u);
  EXPECT_LT(r.embedding[0].K, r.embedding[1].K);
  EXPECT_LT(r.embedding[1].K, r.embedding[2].K);
  EXPECT_TRUE(r.pass());
  EXPECT_TRUE(r.has_flag("growth"));
}

TEST(Embedding, ExponentialEnvelopeIsBounded) {
  auto p = plan("emb_exp", "exp:1", {BcKind::N, BcKind::N}, 0.0, {1.0, 2.0, 3.0});
  p.variable = SweepVariable::Rho;
  p.domain.L = 4.0;
  const auto r = embedding_growth_study(p);
  EXPECT_TRUE(r.has_flag("bounded envelope"));
  for (const auto& e : r.embedding) EXPECT_NEAR(e.envelope, 1.0 / 16.0, 1e-6);
}

TEST(Embedding, FlatStripDoesNotGrow) {
  auto p = plan("emb_flat", "flat:0.5:0:4", {BcKind::N, BcKind::N}, 0.0, {1.0, 2.0, 3.0});
  p.variable = SweepVariable::Rho;
  p.domain.L = 4.0;
  const auto r = embedding_growth_study(p);
  EXPECT_TRUE(r.has_flag("no growth"));
}

TEST(Embedding, RejectsBadPlans) {
  auto p = plan("emb_bad", "exp:1", {BcKind::D, BcKind::N}, 0.0, {1.0, 2.0});
  p.variable = SweepVariable::Rho;
  p.domain.L = 3.0;
  EXPECT_THROW(embedding_growth_study(p), ConfigError);
  p.domain.side_bc = {BcKind::N, BcKind::N};
  p.values = {1.0, 5.0};
  EXPECT_THROW(embedding_growth_study(p), EmptySubdomain);
  p.variable = SweepVariable::L;
  EXPECT_THROW(embedding_growth_study(p), ConfigError);
}

TEST(MixedCase, PowerTwoStabilizes) {
  auto p = plan("mn2", "power:2", {BcKind::M, BcKind::N}, 1.0, {4.0, 8.0, 16.0});
  const auto r = mn_case_study(p);
  ASSERT_FALSE(r.checks.empty());
  EXPECT_EQ(r.checks.front().name, "s1 decreasing");
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.verdict->verdict, criteria::Verdict::Discrete);
  ASSERT_EQ(r.trend.size(), 3u);
  EXPECT_LT(r.trend[0].value, r.trend[2].value);
}

TEST(MixedCase, PowerHalfIsInconclusive) {
  auto p = plan("mn05", "power:0.5", {BcKind::N, BcKind::M}, 1.0, {4.0, 8.0, 16.0});
  p.per_unit_y = 2.0;
  const auto r = mn_case_study(p);
  EXPECT_TRUE(r.checks.empty());
  EXPECT_EQ(r.verdict->verdict, criteria::Verdict::Inconclusive);
}

TEST(MixedCase, SideSwapGivesIdenticalSpectra) {
  auto a = plan("mn_a", "power:2", {BcKind::M, BcKind::N}, 1.0, {2.0, 3.0});
  auto b = plan("mn_b", "power:2", {BcKind::N, BcKind::M}, 1.0, {2.0, 3.0});
  const auto ra = mn_case_study(a), rb = mn_case_study(b);
  for (std::size_t i = 0; i < ra.points.size(); ++i)
    for (std::size_t k = 0; k < ra.points[i].clamped.size(); ++k)
      EXPECT_NEAR(ra.points[i].clamped[k], rb.points[i].clamped[k], 1e-9 * ra.points[i].clamped[k]);
  auto bad = plan("mn_bad", "power:2", {BcKind::N, BcKind::N}, 1.0, {2.0, 3.0});
  EXPECT_THROW(mn_case_study(bad), ConfigError);
}

TEST(Consistency, MatrixAndHardySuite) {
  const auto r = consistency_report();
  EXPECT_EQ(r.matrix.size(), 24u);
  EXPECT_TRUE(r.pass());
  for (const auto& v : r.matrix) {
    const bool t1 = v.pair.contains(BcKind::D) || (v.pair.upper == BcKind::M && v.pair.lower == BcKind::M);
    if (t1) EXPECT_EQ(v.verdict, criteria::Verdict::Discrete) << v.pair.str() << ' ' << v.profile;
  }
  EXPECT_EQ(r.hardy_rows.size(), 4u);
}

TEST(Reports, DeterministicFilesAndNaming) {
  auto p = plan("det", "exp:1", {BcKind::D, BcKind::D}, 0.0, {2.0, 3.0, 4.0});
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto f1 = write_report(truncation_sweep(p), d1);
  setenv("PEAK_SPECTRA_THREADS", "1", 1);
  const auto f2 = write_report(truncation_sweep(p), d2);
  unsetenv("PEAK_SPECTRA_THREADS");
  ASSERT_EQ(f1.size(), f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) {
    EXPECT_EQ(f1[i].filename(), f2[i].filename());
    EXPECT_EQ(io::read_text(f1[i]), io::read_text(f2[i])) << f1[i];
  }
  EXPECT_TRUE(std::filesystem::exists(d1 / "det" / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(d1 / "det" / "eigenvalues.csv"));
  EXPECT_TRUE(std::filesystem::exists(d1 / "det" / "lambda_vs_L.svg"));
  const auto j = nlohmann::json::parse(io::read_text(d1 / "det" / "report.json"));
  EXPECT_EQ(j["config_hash"], p.hash());
}

TEST(Reports, HashTracksConfig) {
  auto a = plan("h", "exp:1", {BcKind::D, BcKind::D}, 0.0, {2.0, 3.0});
  auto b = a;
  EXPECT_EQ(a.hash(), b.hash());
  b.nz = 6;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Workers, EnvironmentCapsThreads) {
  setenv("PEAK_SPECTRA_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1u);
  unsetenv("PEAK_SPECTRA_THREADS");
  EXPECT_GE(worker_count(), 1u);
  std::vector<int> out(50, 0);
  run_jobs(50, [&](int i) { out[i] = i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_THROW(run_jobs(3, [](int i) {
                 if (i == 1) throw SingularPencil("boom");
               }),
               SingularPencil);
}

TEST(Plans, Validation) {
  ExperimentPlan p;
  EXPECT_THROW(p.validate(), ConfigError);
  p.values = {2.0, 1.0};
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(parse_sweep_variable("time"), ConfigError);
  EXPECT_EQ(parse_expectation("not-discrete"), Expectation::NotDiscrete);
}
