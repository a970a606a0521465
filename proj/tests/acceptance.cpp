// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "peakspec/lab.hpp"

using namespace peakspec;
using criteria::BcKind;
using criteria::Verdict;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double cantilever_beta() {
  auto f = [](double b) { return std::cos(b) * std::cosh(b) + 1.0; };
  double lo = 1.0, hi = 2.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

plate::PeakDomainSpec square(double nu) {
  plate::PeakDomainSpec s;
  s.profile = Profile::flat(0.5, 0.0, 1.0);
  s.L = 1.0;
  s.side_bc = {BcKind::M, BcKind::M};
  s.left_edge = s.right_edge = plate::EdgeBc::Hinged;
  s.nu = nu;
  return s;
}

double square_lowest(int n, double nu) {
  const auto s = square(nu);
  return plate::solve_eigs(plate::assemble(s, plate::build_mesh(s, n, n)), 1).eigenvalues[0];
}

void weights(Outcome& o) {
  const Profile h = Profile::exponential(1.0);
  double worst = 0.0;
  for (double y : {0.5, 1.0, 3.0, 10.0, 25.0}) {
    worst = std::max(worst, rel(criteria::F_h(h, y), 4.0 * std::exp(-y)));
    worst = std::max(worst, rel(criteria::G_h(h, 0.0, y), std::exp(y) / (4.0 * std::pow(std::expm1(y), 2))));
  }
  for (double R : {0.0, 1.0, 4.0}) worst = std::max(worst, rel(criteria::W_h(h, R).value, 1.0 / 16.0));
  o.detail << "max rel error " << worst;
  o.require(worst < 1e-8, "rel error < 1e-8");
}

void lemmas(Outcome& o) {
  const Profile e = Profile::exponential(1.0);
  const auto l1 = hardy::lemma1_ratio(e, 0.0, 30.0, 512);
  const auto l2 = hardy::lemma2_ratio(e, 0.0, 30.0, 512);
  o.detail << "lemma1 " << l1.extremal_value << " (slack " << l1.slack() << "), lemma2 " << l2.extremal_value
           << " (slack " << l2.slack() << ")";
  o.require(l1.extremal_value >= 0.9 && l1.extremal_value <= 1.0 + l1.slack(), "lemma1 in [0.9, 1 + slack]");
  o.require(l2.extremal_value >= 1.0 - l2.slack() && l2.extremal_value <= 1.1, "lemma2 in [1 - slack, 1.1]");
  for (const Profile& h : {e, Profile::super_exponential(1.0)})
    for (double R : {0.0, 2.0}) {
      const auto c = hardy::corollary1_ratio(h, R, 30.0, 512);
      const double w = criteria::W_h(h, R).value;
      o.detail << ", corollary1 " << h.name() << " R=" << R << ": " << c.extremal_value << " vs W " << w;
      o.require(c.extremal_value >= w - c.slack(), "corollary1 >= W - slack");
    }
}

void lemma3(Outcome& o) {
  double worst = INFINITY;
  for (const Profile& h : {Profile::power(2.0), Profile::exponential(1.0), Profile::super_exponential(1.0)})
    worst = std::min(worst, criteria::logres_check(h, 1.0).min_ratio);
  o.detail << "min logres ratio " << worst;
  o.require(worst >= 1.0 - 1e-8, "logres >= 1 - 1e-8");
  const Profile H = Profile::super_exponential(1.0);
  for (const Profile& h : {H, H.powered(3.0)}) {
    double prev = -INFINITY;
    o.detail << ", W";
    for (double R : {2.0, 4.0, 6.0, 8.0}) {
      const double w = criteria::W_h(h, R).value;
      o.detail << ' ' << w;
      o.require(w > prev, "W strictly increasing");
      prev = w;
    }
  }
}

void cross_sections(Outcome& o) {
  const double hinged = hardy::cross_section_constant(hardy::sections::hinged(), 1.0, 64).extremal_value;
  const double b = cantilever_beta();
  const double cant = hardy::cross_section_constant(hardy::sections::cantilever(), 1.0, 64).extremal_value;
  double inv = 0.0;
  for (const auto& cs : {hardy::sections::hinged(), hardy::sections::cantilever()})
    for (double H : {0.01, 0.3, 3.0, 50.0}) {
      const double c1 = hardy::cross_section_constant(cs, 1.0, 64).extremal_value;
      inv = std::max(inv, rel(hardy::cross_section_constant(cs, H, 64).extremal_value, c1));
    }
  const double eh = rel(hinged, std::pow(M_PI, 4) / 16.0), ec = rel(cant, std::pow(b, 4) / 16.0);
  o.detail << "hinged err " << eh << ", cantilever err " << ec << ", rescaling " << inv;
  o.require(eh < 1e-3, "hinged within 0.1%");
  o.require(ec < 1e-3, "cantilever within 0.1%");
  o.require(inv < 1e-8, "rescaling invariance 1e-8");
}

void fem(Outcome& o) {
  const double exact = 4.0 * std::pow(M_PI, 4);
  const double l8 = square_lowest(8, 0.3), l16 = square_lowest(16, 0.3), l32 = square_lowest(32, 0.3);
  const double l16_0 = square_lowest(16, 0.0);
  o.detail << "lambda1 8/16/32: " << l8 << ' ' << l16 << ' ' << l32 << ", err16 " << rel(l16, exact)
           << ", nu change " << rel(l16_0, l16);
  o.require(rel(l16, exact) < 5e-3, "16x16 within 0.5%");
  o.require(rel(l16_0, l16) < 1e-6, "nu invariance 1e-6");
  o.require(l16 < l8 && l32 < l16, "monotone under refinement");
}

void matrix(Outcome& o) {
  const std::vector<std::string> profiles{"power:0.5", "power:2", "exp:1", "superexp:1"};
  int matched = 0;
  for (const auto& pair : criteria::all_pairs())
    for (const auto& ps : profiles) {
      const Profile H = parse_profile(ps);
      const auto v = criteria::classify(pair, H);
      const auto w = criteria::classify(pair.swapped(), H);
      Verdict expected = Verdict::Inconclusive;
      const auto c = pair.canonical();
      if (pair.contains(BcKind::D) || (c.upper == BcKind::M && c.lower == BcKind::M)) expected = Verdict::Discrete;
      else if (c.upper == BcKind::N && c.lower == BcKind::N) {
        if (ps == "superexp:1") expected = Verdict::Discrete;
      } else if (ps != "power:0.5") {
        expected = Verdict::Discrete;
      }
      const bool ok = v.verdict == expected && w.verdict == v.verdict && w.basis == v.basis;
      if (ok) ++matched;
      else o.require(false, pair.str() + " " + ps);
    }
  o.detail << matched << "/24 cells match, swap symmetric";
}

lab::ExperimentPlan truncation_plan() {
  lab::ExperimentPlan p;
  p.name = "truncation_dd_exp";
  p.profile = "exp:1";
  p.domain.side_bc = {BcKind::D, BcKind::D};
  p.values = {6.0, 9.0, 12.0};
  p.domain.L = 6.0;
  p.per_unit_y = 4.0;
  p.nz = 6;
  p.k = 3;
  p.thresholds.stabilization = 1e-3;
  p.thresholds.gap = 1e-3;
  p.expect = lab::Expectation::Discrete;
  return p;
}

lab::ExperimentPlan embedding_plan() {
  lab::ExperimentPlan p;
  p.name = "embedding_nn_superexp";
  p.profile = "superexp:1";
  p.domain.side_bc = {BcKind::N, BcKind::N};
  p.domain.R = 1.0;
  p.domain.L = 6.0;
  p.variable = lab::SweepVariable::Rho;
  p.values = {2.0, 3.0, 4.0};
  p.per_unit_y = 8.0;
  p.nz = 4;
  p.degenerate_ratio = 1e-30;
  return p;
}

void truncation(Outcome& o) {
  const auto r = lab::truncation_sweep(truncation_plan());
  const double s1 = r.stabilization.back()[0], gap = r.gaps.back();
  o.detail << "lambda1 " << r.points[0].clamped[0] << " -> " << r.points[2].clamped[0] << ", s1 " << s1 << ", gap "
           << gap;
  o.require(s1 < 1e-3, "s1 < 1e-3");
  o.require(gap < 1e-3, "gap < 1e-3");
}

void embedding(Outcome& o) {
  const auto r = lab::embedding_growth_study(embedding_plan());
  double min_ratio = INFINITY;
  o.detail << "K";
  for (std::size_t i = 0; i < r.embedding.size(); ++i) {
    const auto& e = r.embedding[i];
    o.detail << ' ' << e.K;
    min_ratio = std::min(min_ratio, e.ratio);
    if (i > 0) o.require(e.K > r.embedding[i - 1].K, "K strictly increasing");
  }
  o.detail << ", min K/envelope " << min_ratio;
  o.require(min_ratio >= embedding_plan().thresholds.ratio_floor, "ratio bounded below");
}

std::vector<std::string> produce(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& rep : {lab::truncation_sweep(truncation_plan()), lab::embedding_growth_study(embedding_plan()),
                          lab::consistency_report()}) {
    const auto w = lab::write_report(rep, dir);
    files.insert(files.end(), w.begin(), w.end());
  }
  std::ostringstream crit;
  const Profile e = Profile::exponential(1.0);
  for (double y : {0.5, 1.0, 5.0})
    crit << io::num(y) << ',' << io::num(criteria::F_h(e, y)) << ',' << io::num(criteria::G_h(e, 0.0, y)) << '\n';
  io::write_text(dir / "weights.csv", crit.str());
  files.push_back(dir / "weights.csv");
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(std::filesystem::relative(f, dir).string() + "\n" + io::read_text(f));
  return out;
}

void determinism(Outcome& o) {
  const auto base = std::filesystem::temp_directory_path() / "peakspec_acceptance";
  std::filesystem::remove_all(base);
  const auto a = produce(base / "run1");
  const auto b = produce(base / "run2");
  int same = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a[i] == b[i];
  o.detail << same << "/" << a.size() << " files byte-identical";
  o.require(a.size() == b.size() && same == static_cast<int>(a.size()), "identical outputs");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "weight functional closed forms", 1.0, weights},
      {2, "lemma sharpness suite", 30.0, lemmas},
      {3, "logarithmic residual and W monotonicity", 5.0, lemma3},
      {4, "cross-section constants", 10.0, cross_sections},
      {5, "FEM validation on the hinged square", 120.0, fem},
      {6, "classifier matrix", 10.0, matrix},
      {7, "truncation stabilization", 300.0, truncation},
      {8, "embedding constant growth", 300.0, embedding},
      {9, "determinism", 600.0, determinism},
  };
  int failures = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.budget_s, "runtime budget");
    std::printf("%s criterion %d (%s): %s; %.2f s of %.0f s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.str().c_str(), secs, c.budget_s);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failures, all.size());
  return failures == 0 ? 0 : 1;
}
