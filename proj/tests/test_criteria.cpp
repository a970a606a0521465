#include <cmath>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "peakspec/criteria.hpp"

using namespace peakspec;
using namespace peakspec::criteria;

namespace {

// Composite 30-point Gauss on [a, b].
template <class F>
double gauss_composite(F f, double a, double b, int panels = 64) {
  double s = 0.0;
  const double w = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    s += boost::math::quadrature::gauss<double, 30>::integrate(f, a + i * w, a + (i + 1) * w);
  return s;
}

// Brute-force W for exp(-t^b): closed tail via the incomplete gamma function,
// inverse mass by composite Gauss, minimum on a dense grid then a finer one.
double brute_W_superexp(double b, double q, double R) {
  // h = exp(-q t^b)
  auto tail = [&](double t) {
    return boost::math::tgamma(1.0 / b, q * std::pow(t, b)) / (b * std::pow(q, 1.0 / b));
  };
  auto inv = [&](double t) { return gauss_composite([&](double s) { return std::exp(q * std::pow(s, b)); }, R, t); };
  auto obj = [&](double t) { return 1.0 / (16.0 * std::pow(inv(t) * tail(t), 2)); };
  double best_t = R, best = INFINITY;
  for (int i = 1; i <= 4000; ++i) {
    const double t = R + 4.0 * i / 4000;
    const double v = obj(t);
    if (v < best) best = v, best_t = t;
  }
  for (int i = -200; i <= 200; ++i) {
    const double t = best_t + 1e-3 * i / 200;
    if (t <= R) continue;
    best = std::min(best, obj(t));
  }
  return best;
}

}  // namespace

TEST(Functionals, FForExponential) {
  const Profile h = Profile::exponential(1.0);
  for (double y : {0.0, 1.0, 5.0, 30.0}) EXPECT_NEAR(F_h(h, y), 4.0 * std::exp(-y), 1e-12 * std::exp(-y));
}

TEST(Functionals, FForPower) { EXPECT_NEAR(F_h(Profile::power(2.0), 2.0), 4.0, 1e-12); }

TEST(Functionals, GForExponential) {
  const Profile h = Profile::exponential(1.0);
  for (double y : {0.1, 1.0, 4.0, 20.0}) {
    const double oracle = std::exp(y) / (4.0 * std::pow(std::expm1(y), 2));
    EXPECT_NEAR(G_h(h, 0.0, y), oracle, 1e-10 * oracle);
  }
}

TEST(Functionals, GForPower) { EXPECT_NEAR(G_h(Profile::power(2.0), 1.0, 2.0), 9.0 / 49.0, 1e-12); }

TEST(Functionals, GBlowsUpAtR) {
  const Profile h = Profile::exponential(1.0);
  EXPECT_GT(G_h(h, 0.0, 1e-6), 1e10);
  EXPECT_THROW(G_h(h, 0.0, 0.0), DomainError);
}

TEST(Functionals, ZWeight) {
  const Profile e = Profile::exponential(1.0);
  for (double y : {0.5, 2.0, 6.0}) {
    const double oracle = std::exp(2.0 * y) / (4.0 * std::pow(std::expm1(y), 2));
    EXPECT_NEAR(z_weight(e, 0.0, y), oracle, 1e-10 * oracle);
  }
  EXPECT_NEAR(z_weight(Profile::power(2.0), 1.0, 2.0), 36.0 / 49.0, 1e-12);
  EXPECT_GT(z_weight(e, 0.0, 1e-7), 1e12);
}

TEST(WFunctional, ExponentialIsOneSixteenth) {
  const Profile h = Profile::exponential(1.0);
  for (double R : {0.0, 2.0, 5.0}) {
    const auto w = W_h(h, R);
    EXPECT_NEAR(w.value, 1.0 / 16.0, 1e-8 / 16.0) << "R=" << R;
    EXPECT_TRUE(w.at_infinity);
  }
}

TEST(WFunctional, MatchesBruteForceScan) {
  for (double alpha : {0.5, 1.0}) {
    for (double R : {1.0, 2.0}) {
      const double b = 1.0 + alpha;
      const auto w = W_h(Profile::super_exponential(alpha), R);
      const double oracle = brute_W_superexp(b, 1.0, R);
      EXPECT_NEAR(w.value, oracle, 1e-6 * oracle) << "alpha=" << alpha << " R=" << R;
      EXPECT_FALSE(w.at_infinity);
    }
  }
  // H^3 = exp(-3 t^2)
  const auto w3 = W_h(Profile::super_exponential(1.0).powered(3.0), 2.0);
  const double oracle3 = brute_W_superexp(2.0, 3.0, 2.0);
  EXPECT_NEAR(w3.value, oracle3, 1e-6 * oracle3);
}

TEST(WFunctional, ObjectiveNearRExceedsInfimum) {
  const Profile h = Profile::super_exponential(1.0);
  const auto w = W_h(h, 2.0);
  EXPECT_GT(w_objective(h, 2.0, 2.0 + 1e-6), w.value);
  for (const auto& p : w.scan) EXPECT_GE(p.value, w.value * (1.0 - 1e-12));
}

TEST(WFunctional, SuperExponentialIncreasesWithR) {
  const Profile H = Profile::super_exponential(1.0);
  for (const Profile& h : {H, H.powered(3.0)}) {
    double prev = 0.0;
    for (double R : {2.0, 4.0, 6.0, 8.0}) {
      const double w = W_h(h, R).value;
      EXPECT_GT(w, prev);
      prev = w;
    }
    EXPECT_GT(prev, 100.0);
  }
}

TEST(LimitTests, AdamsFournier) {
  EXPECT_FALSE(adams_fournier_test(Profile::exponential(1.0)).holds);
  EXPECT_TRUE(adams_fournier_test(Profile::super_exponential(1.0)).holds);
  const auto p = adams_fournier_test(Profile::power(2.0));
  EXPECT_FALSE(p.holds);
  // r(y) = y for H = y^-2
  for (const auto& pt : p.evidence.trace) EXPECT_NEAR(pt.value, pt.y, 1e-9 * pt.y);
}

TEST(LimitTests, SuperExponentialRatioIsAboutOneOverTwoY) {
  const auto t = adams_fournier_test(Profile::super_exponential(1.0));
  const auto& last = t.evidence.trace.back();
  EXPECT_NEAR(last.value * 2.0 * last.y, 1.0, 1e-3);
}

TEST(LimitTests, LogDerivative) {
  const auto s = log_derivative_test(Profile::super_exponential(1.0));
  EXPECT_TRUE(s.holds);
  for (const auto& p : s.evidence.trace) EXPECT_NEAR(p.value, -2.0 * p.y, 1e-9 * p.y);
  EXPECT_FALSE(log_derivative_test(Profile::exponential(1.0)).holds);
  EXPECT_FALSE(log_derivative_test(Profile::power(1.0)).holds);
}

TEST(LimitTests, Theorem3) {
  EXPECT_TRUE(theorem3_test(Profile::power(2.0), 1.0).holds);
  EXPECT_FALSE(theorem3_test(Profile::power(0.5), 1.0).holds);
  const auto e = theorem3_test(Profile::exponential(1.0), 0.0);
  EXPECT_TRUE(e.holds);
  for (const auto& p : e.evidence.trace) {
    if (p.y > 60) break;
    const double oracle = std::log10(std::exp(4.0 * p.y) / (4.0 * std::pow(std::expm1(p.y), 2)));
    EXPECT_NEAR(p.value, oracle, 1e-9 * std::abs(oracle));
  }
}

TEST(LimitTests, ShortTabulatedRangeIsNotDecided) {
  const Profile t = Profile::flat(0.5, 0.0, 0.5);
  const auto d = decay_test(t);
  EXPECT_FALSE(d.holds);
  EXPECT_FALSE(d.evidence.note.empty());
}

TEST(Logres, BuiltInFamiliesSatisfyTheBound) {
  EXPECT_GE(logres_check(Profile::exponential(1.0), 1.0).min_ratio, 1.0 - 1e-8);
  EXPECT_GE(logres_check(Profile::super_exponential(1.0), 1.0).min_ratio, 1.0 - 1e-8);
  EXPECT_GE(logres_check(Profile::power(2.0), 1.0).min_ratio, 1.0 - 1e-8);
  EXPECT_THROW(logres_check(Profile::super_exponential(1.0), 0.1), DomainError);
}

TEST(Classifier, Examples) {
  const auto dn = classify(parse_bc_pair("D,N"), Profile::power(2.0));
  EXPECT_EQ(dn.verdict, Verdict::Discrete);
  EXPECT_EQ(dn.basis, Basis::Theorem1_ii);
  const auto nn = classify(parse_bc_pair("N,N"), Profile::super_exponential(1.0));
  EXPECT_EQ(nn.verdict, Verdict::Discrete);
  EXPECT_EQ(nn.basis, Basis::Corollary2);
  const auto mn = classify(parse_bc_pair("M,N"), Profile::power(2.0));
  EXPECT_EQ(mn.verdict, Verdict::Discrete);
  EXPECT_EQ(mn.basis, Basis::Theorem3);
  EXPECT_EQ(classify(parse_bc_pair("N,N"), Profile::power(2.0)).verdict, Verdict::Inconclusive);
  EXPECT_EQ(classify(parse_bc_pair("N,N"), Profile::exponential(1.0)).verdict, Verdict::Inconclusive);
  EXPECT_EQ(classify(parse_bc_pair("D,D"), Profile::exponential(1.0)).basis, Basis::Theorem1_i);
}

TEST(Classifier, SwapSymmetryAndAdamsFournierImplication) {
  const std::vector<Profile> profiles{Profile::power(0.5), Profile::power(2.0), Profile::exponential(1.0),
                                      Profile::super_exponential(1.0), Profile::super_exponential(0.5)};
  for (const auto& H : profiles) {
    for (const auto& p : all_pairs()) {
      const auto a = classify(p, H), b = classify(p.swapped(), H);
      EXPECT_EQ(a.verdict, b.verdict) << p.str() << ' ' << H.name();
      EXPECT_EQ(a.basis, b.basis);
    }
    if (adams_fournier_test(H).holds) EXPECT_EQ(classify({BcKind::N, BcKind::N}, H).verdict, Verdict::Discrete);
  }
}

TEST(Classifier, ThresholdsAreHonoured) {
  Thresholds th;
  th.af_limit = 1e-30;  // unreachable on the default grid
  const auto v = classify({BcKind::N, BcKind::N}, Profile::super_exponential(1.0), th);
  EXPECT_NE(v.basis, Basis::Corollary2);
  EXPECT_DOUBLE_EQ(v.evidence.front().threshold, 1e-30);
}

TEST(BcPairs, Parsing) {
  EXPECT_EQ(parse_bc_pair("N,N").str(), "N-N");
  EXPECT_EQ(parse_bc_pair("m-n").str(), "M-N");
  EXPECT_EQ(parse_bc_pair("DN").swapped().str(), "N-D");
  EXPECT_EQ(parse_bc_pair("N,M").canonical().str(), "M-N");
  EXPECT_THROW(parse_bc_pair("N"), ConfigError);
  EXPECT_THROW(parse_bc_pair("X,N"), ConfigError);
  EXPECT_EQ(all_pairs().size(), 6u);
}
