#pragma once

// Experiment orchestration: truncation sweeps, embedding-constant growth
// studies, the mixed hinged/free case study and the consistency report.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"
#include "peakspec/hardy1d.hpp"
#include "peakspec/io.hpp"
#include "peakspec/plate2d.hpp"
#include "peakspec/profile_parse.hpp"
#include "peakspec/profiles.hpp"

namespace peakspec::lab {

using nlohmann::json;

enum class SweepVariable { L, Rho, Ny, R };
enum class Expectation { None, Discrete, NotDiscrete };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::L: return "L";
    case SweepVariable::Rho: return "rho";
    case SweepVariable::Ny: return "ny";
    case SweepVariable::R: return "R";
  }
  return "?";
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
  if (s == "L") return SweepVariable::L;
  if (s == "rho") return SweepVariable::Rho;
  if (s == "ny") return SweepVariable::Ny;
  if (s == "R") return SweepVariable::R;
  throw ConfigError("unknown sweep variable '" + s + "' (expected L, rho, ny or R)");
}

inline const char* to_string(Expectation e) {
  switch (e) {
    case Expectation::None: return "none";
    case Expectation::Discrete: return "discrete";
    case Expectation::NotDiscrete: return "not-discrete";
  }
  return "?";
}

inline Expectation parse_expectation(const std::string& s) {
  if (s == "none") return Expectation::None;
  if (s == "discrete") return Expectation::Discrete;
  if (s == "not-discrete") return Expectation::NotDiscrete;
  throw ConfigError("unknown expectation '" + s + "' (expected none, discrete or not-discrete)");
}

struct LabThresholds {
  double stabilization = 1e-2;  // s_1 at the last step
  double gap = 1e-2;            // relative Clamped/Free gap of lambda_1 at the last value
  double ratio_floor = 1e-3;    // lower bound demanded of K / envelope
  double monotone_slack = 0.05;  // K may drop by this fraction between sweep points
};

struct ExperimentPlan {
  std::string name = "plan";
  std::string profile = "exp:1";  // textual form, see parse_profile
  plate::PeakDomainSpec domain;   // profile field is filled from `profile`
  SweepVariable variable = SweepVariable::L;
  std::vector<double> values;
  double per_unit_y = 8.0;  // y-elements per unit length when ny = 0
  int ny = 0;
  int nz = 8;
  double grading = 1.0;
  double degenerate_ratio = 1e-12;
  int k = 5;
  LabThresholds thresholds;
  Expectation expect = Expectation::None;
  std::vector<std::string> outputs{"json", "csv", "svg"};

  void validate() const {
    if (name.empty()) throw ConfigError("plan needs a name");
    if (values.empty()) throw ConfigError("plan needs at least one sweep value");
    if (!std::is_sorted(values.begin(), values.end()) ||
        std::adjacent_find(values.begin(), values.end()) != values.end())
      throw ConfigError("sweep values must be strictly ascending");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (nz < 4) throw ConfigError("nz must be at least 4");
    if (ny != 0 && ny < 4) throw ConfigError("ny must be 0 (density driven) or at least 4");
    if (!(per_unit_y > 0.0)) throw ConfigError("per_unit_y must be positive");
  }

  json to_json() const {
    return {{"name", name},
            {"profile", profile},
            {"R", domain.R},
            {"L", domain.L},
            {"nu", domain.nu},
            {"side_bc", domain.side_bc.str()},
            {"left_edge", plate::to_string(domain.left_edge)},
            {"right_edge", plate::to_string(domain.right_edge)},
            {"variable", to_string(variable)},
            {"values", values},
            {"per_unit_y", per_unit_y},
            {"ny", ny},
            {"nz", nz},
            {"grading", grading},
            {"degenerate_ratio", degenerate_ratio},
            {"k", k},
            {"thresholds",
             {{"stabilization", thresholds.stabilization},
              {"gap", thresholds.gap},
              {"ratio_floor", thresholds.ratio_floor},
              {"monotone_slack", thresholds.monotone_slack}}},
            {"expect", to_string(expect)},
            {"outputs", outputs}};
  }

  std::string hash() const { return io::hex(io::fnv1a(to_json().dump())); }
};

struct SweepPoint {
  double value = 0.0;
  int dofs = 0;
  std::vector<double> clamped;  // right edge clamped
  std::vector<double> free;     // right edge free
};

struct EmbeddingPoint {
  double rho = 0.0;
  double K = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
  std::string note;
};

struct TrendPoint {
  double y = 0.0;
  double value = 0.0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SpectralReport {
  std::string kind;
  std::string plan_name;
  std::string config_hash;
  json config;
  std::vector<SweepPoint> points;
  std::vector<std::vector<double>> stabilization;  // [step][k], step i compares values i and i+1
  std::vector<double> gaps;                        // per point, relative lambda_1 gap
  std::vector<EmbeddingPoint> embedding;
  std::vector<TrendPoint> trend;
  std::optional<criteria::CriterionVerdict> verdict;
  std::vector<criteria::CriterionVerdict> matrix;
  std::vector<hardy::HardyRow> hardy_rows;
  std::vector<Check> checks;
  std::vector<std::string> flags;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  bool has_flag(const std::string& f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }

  json to_json() const {
    json j;
    j["kind"] = kind;
    j["plan"] = plan_name;
    j["config_hash"] = config_hash;
    j["config"] = config;
    json pts = json::array();
    for (const auto& p : points) pts.push_back({{"value", p.value}, {"dofs", p.dofs}, {"clamped", p.clamped}, {"free", p.free}});
    j["points"] = pts;
    j["stabilization"] = stabilization;
    j["gaps"] = gaps;
    json emb = json::array();
    for (const auto& e : embedding)
      emb.push_back({{"rho", e.rho}, {"K", e.K}, {"envelope", io::number(e.envelope)}, {"ratio", io::number(e.ratio)}, {"note", e.note}});
    j["embedding"] = emb;
    json tr = json::array();
    for (const auto& t : trend) tr.push_back({io::number(t.y), io::number(t.value)});
    j["trend"] = tr;
    if (verdict) j["verdict"] = io::to_json(*verdict);
    json mat = json::array();
    for (const auto& v : matrix)
      mat.push_back({{"pair", v.pair.str()}, {"profile", v.profile}, {"verdict", criteria::to_string(v.verdict)},
                     {"basis", criteria::to_string(v.basis)}});
    j["matrix"] = mat;
    json hr = json::array();
    for (const auto& r : hardy_rows)
      hr.push_back({{"operation", r.operation}, {"profile", r.profile}, {"R", r.R}, {"L", r.L}, {"n", r.n},
                    {"value", r.value}, {"bound", r.bound}, {"pass", r.pass}});
    j["hardy"] = hr;
    json ch = json::array();
    for (const auto& c : checks) ch.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = ch;
    j["flags"] = flags;
    j["pass"] = pass();
    return j;
  }
};

// ------------------------------------------------------------------ workers

/// Worker count: PEAK_SPECTRA_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PEAK_SPECTRA_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = std::min(n, static_cast<unsigned>(v));
  }
  return n;
}

/// Runs jobs 0..n-1 on up to worker_count() threads; results land by index.
inline void run_jobs(int n, const std::function<void(int)>& job) {
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max(n, 1)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ------------------------------------------------------------------ helpers

namespace detail {

inline plate::PeakDomainSpec domain_of(const ExperimentPlan& plan) {
  plate::PeakDomainSpec d = plan.domain;
  d.profile = parse_profile(plan.profile);
  return d;
}

inline int ny_for(const ExperimentPlan& plan, double length) {
  if (plan.ny > 0) return plan.ny;
  return std::max(4, static_cast<int>(std::lround(plan.per_unit_y * length)));
}

inline plate::MeshOptions mesh_options(const ExperimentPlan& plan) {
  plate::MeshOptions mo;
  mo.grading = plan.grading;
  mo.degenerate_ratio = plan.degenerate_ratio;
  return mo;
}

inline SpectralReport start(const ExperimentPlan& plan, const std::string& kind) {
  plan.validate();
  SpectralReport r;
  r.kind = kind;
  r.plan_name = plan.name;
  r.config = plan.to_json();
  r.config_hash = plan.hash();
  return r;
}

inline double rel_change(double from, double to) { return std::abs(to - from) / std::abs(from); }

/// min{H^-4, W_H, W_{H^3}} at y; terms that cannot be evaluated are skipped.
inline double envelope(const Profile& H, double y, std::string& note) {
  double env = std::exp(-4.0 * log_value(H, y));
  for (const Profile& h : {H, H.powered(3.0)}) {
    try {
      env = std::min(env, criteria::W_h(h, y).value);
    } catch (const Error& e) {
      note += std::string(note.empty() ? "" : "; ") + "W(" + h.name() + ") unavailable: " + e.what();
    }
  }
  return env;
}

}  // namespace detail

// ------------------------------------------------------------------ studies

/// Solves the k lowest eigenvalues for every sweep value under a clamped and
/// a free right edge, then reports the stabilization metric and the edge gap.
inline SpectralReport truncation_sweep(const ExperimentPlan& plan) {
  SpectralReport rep = detail::start(plan, "truncation_sweep");
  if (plan.variable == SweepVariable::Rho) throw ConfigError("truncation sweep cannot vary rho");
  const plate::PeakDomainSpec base = detail::domain_of(plan);
  const int nv = static_cast<int>(plan.values.size());
  rep.points.assign(nv, {});
  for (int i = 0; i < nv; ++i) rep.points[i].value = plan.values[i];
  run_jobs(2 * nv, [&](int job) {
    const int i = job / 2;
    const bool clamped = job % 2 == 0;
    plate::PeakDomainSpec d = base;
    const double v = plan.values[i];
    int ny = detail::ny_for(plan, d.L);
    if (plan.variable == SweepVariable::L) {
      d.L = v;
      ny = detail::ny_for(plan, v);
    } else if (plan.variable == SweepVariable::R) {
      d.R = v;
    } else if (plan.variable == SweepVariable::Ny) {
      ny = static_cast<int>(std::lround(v));
    }
    d.right_edge = clamped ? plate::EdgeBc::Clamped : plate::EdgeBc::Free;
    const auto mesh = plate::build_mesh(d, ny, plan.nz, detail::mesh_options(plan));
    const auto ops = plate::assemble(d, mesh);
    const auto res = plate::solve_eigs(ops, std::min(plan.k, ops.size()));
    SweepPoint& p = rep.points[i];
    if (clamped) {
      p.clamped = res.eigenvalues;
      p.dofs = ops.size();
    } else {
      p.free = res.eigenvalues;
    }
  });

  for (int i = 0; i + 1 < nv; ++i) {
    std::vector<double> s;
    const auto& a = rep.points[i].clamped;
    const auto& b = rep.points[i + 1].clamped;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) s.push_back(detail::rel_change(a[k], b[k]));
    rep.stabilization.push_back(s);
  }
  for (const auto& p : rep.points) rep.gaps.push_back(detail::rel_change(p.clamped[0], p.free[0]));
  rep.verdict = criteria::classify(base.side_bc, base.profile);

  const auto& th = plan.thresholds;
  const bool enough = nv >= 3;
  if (!enough) rep.flags.push_back("fewer than 3 sweep values: no convergence claim");
  const double s1 = rep.stabilization.empty() ? std::numeric_limits<double>::infinity() : rep.stabilization.back()[0];
  const bool signature = enough && s1 < th.stabilization && rep.gaps.back() < th.gap;
  rep.flags.push_back(signature ? "discreteness signature" : "no discreteness signature");
  if (!signature) {
    bool falling = true;
    for (int i = 0; i + 1 < nv; ++i) falling = falling && rep.points[i + 1].clamped[0] < rep.points[i].clamped[0];
    if (falling) rep.flags.push_back("no positive gap trend");
  }
  std::ostringstream det;
  det << "s1=" << io::num(s1) << " gap=" << io::num(rep.gaps.back());
  if (plan.expect == Expectation::Discrete) rep.checks.push_back({"discreteness signature", signature, det.str()});
  if (plan.expect == Expectation::NotDiscrete) rep.checks.push_back({"no discreteness signature", !signature, det.str()});
  return rep;
}

/// K(rho) from the H^2 Gram matrix against the L^2 mass beyond rho, compared
/// with min{H^-4, W_H, W_{H^3}} at rho.
inline SpectralReport embedding_growth_study(const ExperimentPlan& plan) {
  SpectralReport rep = detail::start(plan, "embedding_growth_study");
  if (plan.variable != SweepVariable::Rho) throw ConfigError("embedding study sweeps rho");
  const plate::PeakDomainSpec d = detail::domain_of(plan);
  if (!(d.side_bc.upper == criteria::BcKind::N && d.side_bc.lower == criteria::BcKind::N))
    throw ConfigError("embedding study needs N-N sides");
  const auto mesh = plate::build_mesh(d, detail::ny_for(plan, d.L), plan.nz, detail::mesh_options(plan));
  const auto ops = plate::assemble(d, mesh);
  const int nv = static_cast<int>(plan.values.size());
  rep.embedding.assign(nv, {});
  run_jobs(nv, [&](int i) {
    const int idx = plate::node_at(mesh, plan.values[i]);
    if (idx >= mesh.ny()) throw EmptySubdomain("no element lies beyond rho = " + io::num(plan.values[i]));
    EmbeddingPoint& e = rep.embedding[i];
    e.rho = mesh.y_nodes[idx];
    e.K = plate::embedding_constant(ops, idx);
    e.envelope = detail::envelope(d.profile, e.rho, e.note);
    e.ratio = e.K / e.envelope;
  });
  rep.verdict = criteria::classify(d.side_bc, d.profile);

  const auto& th = plan.thresholds;
  double min_ratio = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int i = 0; i < nv; ++i) {
    min_ratio = std::min(min_ratio, rep.embedding[i].ratio);
    if (i > 0 && rep.embedding[i].K < (1.0 - th.monotone_slack) * rep.embedding[i - 1].K) monotone = false;
  }
  const auto& first = rep.embedding.front();
  const auto& last = rep.embedding.back();
  rep.flags.push_back(last.envelope < 2.0 * first.envelope ? "bounded envelope" : "growing envelope");
  rep.flags.push_back(last.K < 2.0 * first.K ? "no growth" : "growth");
  rep.checks.push_back({"ratio bounded below", min_ratio >= th.ratio_floor, "min ratio " + io::num(min_ratio)});
  rep.checks.push_back({"K nondecreasing", monotone, "slack " + io::num(th.monotone_slack)});
  return rep;
}

/// Truncation sweep for M-N / N-M sides with the min{H^-4, H^-3 G_H} trend;
/// stabilization is asserted only when the Theorem 3 test holds.
inline SpectralReport mn_case_study(const ExperimentPlan& plan) {
  const plate::PeakDomainSpec d = detail::domain_of(plan);
  const auto c = d.side_bc.canonical();
  if (!(c.upper == criteria::BcKind::M && c.lower == criteria::BcKind::N))
    throw ConfigError("mixed case study needs M-N or N-M sides");
  if (plan.variable != SweepVariable::L) throw ConfigError("mixed case study sweeps L");
  ExperimentPlan inner = plan;
  inner.expect = Expectation::None;
  SpectralReport rep = truncation_sweep(inner);
  rep.kind = "mn_case_study";
  rep.config = plan.to_json();
  rep.config_hash = plan.hash();

  for (double L : plan.values) {
    const double y = d.R + L;
    const double lH = log_value(d.profile, y);
    const double t = std::min(-4.0 * lH, criteria::log_G_h(d.profile, d.R, y) - 3.0 * lH);
    rep.trend.push_back({y, std::exp(t)});
  }
  const auto t3 = criteria::theorem3_test(d.profile, std::max(d.R, d.profile.r_start()));
  if (t3.holds && plan.values.size() >= 3) {
    bool decreasing = true;
    for (std::size_t i = 1; i < rep.stabilization.size(); ++i)
      decreasing = decreasing && rep.stabilization[i][0] <= rep.stabilization[i - 1][0];
    rep.checks.push_back({"s1 decreasing", decreasing, "theorem3 test holds"});
  } else {
    rep.flags.push_back("theorem3 test fails: no stabilization assertion");
  }
  return rep;
}

/// Classifier matrix over the six side pairings and four profile families,
/// the one-dimensional inequality suite and the swap symmetry.
inline SpectralReport consistency_report() {
  SpectralReport rep;
  rep.kind = "consistency_report";
  rep.plan_name = "consistency";
  rep.config = {{"profiles", {"power:0.5", "power:2", "exp:1", "superexp:1"}}, {"pairs", "all"}};
  rep.config_hash = io::hex(io::fnv1a(rep.config.dump()));
  const std::vector<std::string> profiles{"power:0.5", "power:2", "exp:1", "superexp:1"};
  bool symmetric = true, theorem1 = true;
  for (const auto& pair : criteria::all_pairs())
    for (const auto& ps : profiles) {
      const Profile H = parse_profile(ps);
      auto v = criteria::classify(pair, H);
      const auto w = criteria::classify(pair.swapped(), H);
      symmetric = symmetric && v.verdict == w.verdict && v.basis == w.basis;
      const bool t1_row = pair.contains(criteria::BcKind::D) ||
                          (pair.upper == criteria::BcKind::M && pair.lower == criteria::BcKind::M);
      if (t1_row) theorem1 = theorem1 && v.verdict == criteria::Verdict::Discrete;
      v.evidence.clear();
      rep.matrix.push_back(v);
    }
  rep.checks.push_back({"clamped and hinged-hinged rows discrete", theorem1, ""});
  rep.checks.push_back({"swap symmetry", symmetric, ""});

  const Profile e = Profile::exponential(1.0);
  rep.hardy_rows.push_back(hardy::check_lemma1(e, 0.0, 30.0, 512));
  rep.hardy_rows.push_back(hardy::check_lemma2(e, 0.0, 30.0, 512));
  rep.hardy_rows.push_back(hardy::check_corollary1(e, 0.0, 30.0, 512));
  const auto c13 = hardy::cross_section_constant(hardy::sections::hinged(), 1.0, 64);
  const double exact = std::pow(M_PI, 4) / 16.0;
  rep.hardy_rows.push_back({"cross_section_hinged", "-", -1.0, 2.0, 64, c13.extremal_value, exact,
                            std::abs(c13.extremal_value - exact) <= 1e-3 * exact});
  for (const auto& r : rep.hardy_rows) rep.checks.push_back({"hardy " + r.operation, r.pass, io::num(r.value)});
  return rep;
}

// ------------------------------------------------------------------ output

inline bool wants(const std::vector<std::string>& outputs, const std::string& f) {
  return std::find(outputs.begin(), outputs.end(), f) != outputs.end();
}

/// Writes <dir>/<plan-name>/<output>.<ext>; returns the written paths.
inline std::vector<std::filesystem::path> write_report(const SpectralReport& rep, const std::filesystem::path& dir,
                                                       const std::vector<std::string>& outputs = {"json", "csv",
                                                                                                  "svg"}) {
  std::vector<std::filesystem::path> written;
  const auto base = dir / rep.plan_name;
  auto put = [&](const std::string& file, const std::string& text) {
    io::write_text(base / file, text);
    written.push_back(base / file);
  };
  const std::string var = rep.config.contains("variable") ? rep.config["variable"].get<std::string>() : "value";
  if (wants(outputs, "json")) put("report.json", rep.to_json().dump(2) + "\n");
  if (wants(outputs, "csv")) {
    if (!rep.points.empty()) {
      std::ostringstream os;
      os << var << ",edge,k,lambda\n";
      for (const auto& p : rep.points) {
        for (std::size_t k = 0; k < p.clamped.size(); ++k)
          os << io::num(p.value) << ",Clamped," << k + 1 << ',' << io::num(p.clamped[k]) << '\n';
        for (std::size_t k = 0; k < p.free.size(); ++k)
          os << io::num(p.value) << ",Free," << k + 1 << ',' << io::num(p.free[k]) << '\n';
      }
      put("eigenvalues.csv", os.str());
      std::ostringstream ss;
      ss << "from,to,k,s\n";
      for (std::size_t i = 0; i < rep.stabilization.size(); ++i)
        for (std::size_t k = 0; k < rep.stabilization[i].size(); ++k)
          ss << io::num(rep.points[i].value) << ',' << io::num(rep.points[i + 1].value) << ',' << k + 1 << ','
             << io::num(rep.stabilization[i][k]) << '\n';
      put("stabilization.csv", ss.str());
    }
    if (!rep.embedding.empty()) {
      std::ostringstream os;
      os << "rho,K,envelope,ratio\n";
      for (const auto& e : rep.embedding)
        os << io::num(e.rho) << ',' << io::num(e.K) << ',' << io::num(e.envelope) << ',' << io::num(e.ratio) << '\n';
      put("embedding.csv", os.str());
    }
    if (!rep.matrix.empty()) {
      std::ostringstream os;
      os << "pair,profile,verdict,basis\n";
      for (const auto& v : rep.matrix)
        os << v.pair.str() << ',' << v.profile << ',' << criteria::to_string(v.verdict) << ','
           << criteria::to_string(v.basis) << '\n';
      put("matrix.csv", os.str());
    }
    if (!rep.hardy_rows.empty()) {
      std::ostringstream os;
      os << hardy::csv_header() << '\n';
      for (const auto& r : rep.hardy_rows) os << hardy::to_csv(r) << '\n';
      put("hardy.csv", os.str());
    }
  }
  if (wants(outputs, "svg")) {
    if (!rep.points.empty()) {
      std::vector<io::Series> series;
      const std::size_t kmax = rep.points.front().clamped.size();
      for (std::size_t k = 0; k < kmax; ++k) {
        io::Series s{"lambda_" + std::to_string(k + 1), {}, {}};
        for (const auto& p : rep.points)
          if (k < p.clamped.size()) {
            s.x.push_back(p.value);
            s.y.push_back(p.clamped[k]);
          }
        series.push_back(s);
      }
      put("lambda_vs_" + var + ".svg",
          io::line_plot("eigenvalues (right edge clamped)", var, "log10 lambda", series, true));
    }
    if (!rep.embedding.empty()) {
      io::Series K{"K", {}, {}}, env{"envelope", {}, {}}, ratio{"K/envelope", {}, {}};
      for (const auto& e : rep.embedding) {
        K.x.push_back(e.rho);
        K.y.push_back(e.K);
        env.x.push_back(e.rho);
        env.y.push_back(e.envelope);
        ratio.x.push_back(e.rho);
        ratio.y.push_back(e.ratio);
      }
      put("K_vs_rho.svg", io::line_plot("embedding constant", "rho", "log10 K", {K, env}, true));
      put("ratio_vs_rho.svg", io::line_plot("K / envelope", "rho", "ratio", {ratio}, false));
    }
  }
  return written;
}

}  // namespace peakspec::lab
