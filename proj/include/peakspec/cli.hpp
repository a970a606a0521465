#pragma once

// peak_spectra command-line front end. Exit codes: 0 all requested assertions
// pass, 1 an assertion fails, 2 configuration or domain error, 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "peakspec/config.hpp"
#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"
#include "peakspec/hardy1d.hpp"
#include "peakspec/io.hpp"
#include "peakspec/lab.hpp"
#include "peakspec/plate2d.hpp"

namespace peakspec::cli {

using nlohmann::json;

enum ExitCode { Ok = 0, AssertionFailed = 1, ConfigFailure = 2, NumericalFailure = 3 };

/// Flag values that override the config file when given.
struct Overrides {
  std::string config_path;
  std::optional<std::string> name, profile, pair, left_edge, right_edge, study, variable, expect, out;
  std::optional<double> R, L, nu, per_unit_y, grading, degenerate_ratio;
  std::optional<int> ny, nz, k;
  std::optional<std::vector<double>> values;
  bool dump_config = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "TOML config file");
    app->add_option("--name", name, "run name (output subdirectory)");
    app->add_option("--profile", profile, "profile: power:A[:H0[:R0]], exp:A[:R0], superexp:A[:R0], flat:H:Y0:Y1, table:PATH");
    app->add_option("--pair", pair, "side conditions upper,lower from D, M, N (e.g. N,N)");
    app->add_option("--left-edge", left_edge, "left edge: Clamped, Hinged or Free");
    app->add_option("--right-edge", right_edge, "right edge: Clamped, Hinged or Free");
    app->add_option("--R", R, "left end of the strip");
    app->add_option("--L", L, "strip length");
    app->add_option("--nu", nu, "Poisson ratio in [0, 0.5)");
    app->add_option("--ny", ny, "y elements (0: use --per-unit-y)");
    app->add_option("--nz", nz, "section elements");
    app->add_option("--per-unit-y", per_unit_y, "y elements per unit length");
    app->add_option("--grading", grading, "geometric y grading ratio (1: uniform)");
    app->add_option("--degenerate-ratio", degenerate_ratio, "smallest admissible H ratio across the strip");
    app->add_option("--k", k, "number of eigenpairs");
    app->add_option("--study", study, "sweep study: truncation, embedding or mn");
    app->add_option("--variable", variable, "sweep variable: L, rho, ny or R");
    app->add_option("--values", values, "sweep values, ascending")->delimiter(',');
    app->add_option("--expect", expect, "expected outcome: none, discrete or not-discrete");
    app->add_option("-o,--out", out, "output directory");
    app->add_flag("--dump-config", dump_config, "print the effective config and exit");
  }

  config::Config resolve() const {
    config::Config c = config_path.empty() ? config::Config{} : config::load(config_path);
    if (name) c.name = *name;
    if (profile) {
      const auto colon = profile->find(':');
      if (colon == std::string::npos) throw ConfigError("profile '" + *profile + "' needs the form kind:params");
      c.profile_kind = profile->substr(0, colon);
      if (c.profile_kind == "table") {
        c.table = profile->substr(colon + 1);
        c.profile_params.clear();
      } else {
        parse_profile(*profile);
        std::vector<double> p;
        std::stringstream ss(profile->substr(colon + 1));
        for (std::string item; std::getline(ss, item, ':');) p.push_back(std::stod(item));
        const bool has_start = (c.profile_kind == "power" && p.size() == 3) ||
                               ((c.profile_kind == "exp" || c.profile_kind == "superexp") && p.size() == 2);
        c.r_start = c.profile_kind == "power" ? 1.0 : 0.0;
        if (has_start) {
          c.r_start = p.back();
          p.pop_back();
        }
        c.profile_params = p;
        if (!R) c.R = c.r_start;
      }
    }
    if (pair) {
      const auto bp = criteria::parse_bc_pair(*pair);
      c.upper = std::string(1, criteria::to_char(bp.upper));
      c.lower = std::string(1, criteria::to_char(bp.lower));
    }
    if (left_edge) c.left_edge = *left_edge;
    if (right_edge) c.right_edge = *right_edge;
    if (R) c.R = *R;
    if (L) c.L = *L;
    if (nu) c.nu = *nu;
    if (ny) c.ny = *ny;
    if (nz) c.nz = *nz;
    if (per_unit_y) c.per_unit_y = *per_unit_y;
    if (grading) c.grading = *grading;
    if (degenerate_ratio) c.degenerate_ratio = *degenerate_ratio;
    if (k) c.k = *k;
    if (study) c.study = *study;
    if (variable) c.variable = *variable;
    if (values) c.values = *values;
    if (expect) c.expect = *expect;
    if (out) c.dir = *out;
    c.validate();
    return c;
  }
};

namespace detail {

inline std::filesystem::path run_dir(const config::Config& c) { return std::filesystem::path(c.dir) / c.name; }

inline int cmd_classify(const config::Config& c, const std::optional<std::string>& assert_verdict, std::ostream& out) {
  const criteria::BcPair pair{criteria::parse_bc_kind(c.upper[0]), criteria::parse_bc_kind(c.lower[0])};
  auto v = criteria::classify(pair, c.make_profile());
  v.profile = c.profile_spec();
  out << io::to_json(v).dump(2) << '\n';
  if (assert_verdict && *assert_verdict != criteria::to_string(v.verdict)) return AssertionFailed;
  return Ok;
}

inline int cmd_criteria(const config::Config& c, int points, std::ostream& out) {
  const Profile H = c.make_profile();
  const double R = c.R;
  std::ostringstream tab;
  tab << "y,F_h,G_h,Z_H,w_objective\n";
  for (int i = 1; i <= points; ++i) {
    const double y = R + c.L * i / points;
    tab << io::num(y) << ',' << io::num(criteria::F_h(H, y)) << ',' << io::num(criteria::G_h(H, R, y)) << ','
        << io::num(criteria::z_weight(H, R, y)) << ',' << io::num(criteria::w_objective(H, R, y)) << '\n';
  }
  const auto dir = run_dir(c);
  io::write_text(dir / "criteria.csv", tab.str());

  json summary;
  summary["profile"] = c.profile_spec();
  summary["R"] = R;
  std::ostringstream traces;
  traces << "test,y,value\n";
  auto add_trace = [&](const criteria::Evidence& e) {
    for (const auto& p : e.trace) traces << e.criterion << ',' << io::num(p.y) << ',' << io::num(p.value) << '\n';
  };
  const std::vector<std::pair<std::string, Profile>> weights{{"W_H", H}, {"W_H3", H.powered(3.0)}};
  for (const auto& [label, h] : weights) {
    const auto w = criteria::W_h(h, R);
    summary[label] = {{"value", io::number(w.value)}, {"argmin", io::number(w.argmin)}, {"at_infinity", w.at_infinity}};
    for (const auto& p : w.scan) traces << label << ',' << io::num(p.y) << ',' << io::num(p.value) << '\n';
  }
  const criteria::LimitTest tests[] = {criteria::adams_fournier_test(H), criteria::log_derivative_test(H),
                                       criteria::theorem3_test(H, R), criteria::decay_test(H)};
  for (const auto& t : tests) {
    summary["tests"][t.evidence.criterion] = {{"holds", t.holds}, {"limit_estimate", io::number(t.limit_estimate)}};
    add_trace(t.evidence);
  }
  try {
    const auto lr = criteria::logres_check(H, R);
    summary["logres"] = {{"min_ratio", io::number(lr.min_ratio)}, {"holds", lr.holds}};
    add_trace(lr.evidence);
  } catch (const DomainError& e) {
    summary["logres"] = {{"note", e.what()}};
  }
  io::write_text(dir / "traces.csv", traces.str());
  io::write_text(dir / "criteria.json", summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
  return Ok;
}

inline int cmd_hardy(const config::Config& c, int n, std::ostream& out) {
  const Profile h = c.make_profile();
  std::vector<hardy::HardyRow> rows{hardy::check_lemma1(h, c.R, c.L, n), hardy::check_lemma2(h, c.R, c.L, n),
                                    hardy::check_corollary1(h, c.R, c.L, n)};
  std::ostringstream csv;
  csv << hardy::csv_header() << '\n';
  bool pass = true;
  for (const auto& r : rows) {
    csv << hardy::to_csv(r) << '\n';
    pass = pass && r.pass;
  }
  io::write_text(run_dir(c) / "hardy.csv", csv.str());
  out << csv.str();
  return pass ? Ok : AssertionFailed;
}

inline int cmd_spectrum(const config::Config& c, bool with_vectors, bool export_matrices, std::ostream& out) {
  const auto spec = c.domain();
  const int ny = c.ny > 0 ? c.ny : std::max(4, static_cast<int>(std::lround(c.per_unit_y * c.L)));
  plate::MeshOptions mo;
  mo.grading = c.grading;
  mo.degenerate_ratio = c.degenerate_ratio;
  const auto mesh = plate::build_mesh(spec, ny, c.nz, mo);
  const auto ops = plate::assemble(spec, mesh);
  plate::SolveOptions so;
  so.residual_tol = c.residual;
  const auto res = plate::solve_eigs(ops, std::min(c.k, ops.size()), so);
  json j = plate::to_json(res, with_vectors);
  j["dofs"] = ops.size();
  j["ny"] = ny;
  j["nz"] = c.nz;
  j["config_hash"] = io::hex(io::fnv1a(config::dump(c)));
  const auto dir = run_dir(c);
  io::write_text(dir / "eigen.json", j.dump(2) + "\n");
  if (export_matrices) {
    std::filesystem::create_directories(dir);
    plate::write_coordinate((dir / "stiffness.coo").string(), ops.stiffness);
    plate::write_coordinate((dir / "mass.coo").string(), ops.mass);
  }
  json brief = j;
  brief.erase("eigenvectors");
  out << brief.dump(2) << '\n';
  return Ok;
}

inline json summary(const lab::SpectralReport& rep) {
  json ch = json::array();
  for (const auto& c : rep.checks) ch.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"kind", rep.kind}, {"plan", rep.plan_name}, {"config_hash", rep.config_hash},
          {"flags", rep.flags}, {"checks", ch},          {"pass", rep.pass()}};
}

inline int cmd_sweep(const config::Config& c, std::ostream& out) {
  const auto plan = c.plan();
  lab::SpectralReport rep;
  if (c.study == "truncation") rep = lab::truncation_sweep(plan);
  else if (c.study == "embedding") rep = lab::embedding_growth_study(plan);
  else rep = lab::mn_case_study(plan);
  lab::write_report(rep, c.dir, c.formats);
  io::write_text(run_dir(c) / "config.toml", config::dump(c));
  out << summary(rep).dump(2) << '\n';
  return rep.pass() ? Ok : AssertionFailed;
}

inline int cmd_report(const config::Config& c, std::ostream& out) {
  const auto rep = lab::consistency_report();
  lab::write_report(rep, c.dir, c.formats);
  out << summary(rep).dump(2) << '\n';
  return rep.pass() ? Ok : AssertionFailed;
}

}  // namespace detail

/// Parses argv and runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Spectra of plates with peak-shaped tails"};
  app.name("peak_spectra");
  app.require_subcommand(1);
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "print help for every subcommand and flag");
  app.footer("Environment: PEAK_SPECTRA_THREADS caps the number of worker threads.\n"
             "Exit codes: 0 pass, 1 assertion failed, 2 config error, 3 numerical failure.");

  Overrides ov;
  std::optional<std::string> assert_verdict;
  int criteria_points = 64, hardy_n = 512;
  bool with_vectors = false, export_matrices = false;

  auto* classify = app.add_subcommand("classify", "decide discreteness for a side pairing and profile");
  auto* crit = app.add_subcommand("criteria", "tabulate F_h, G_h, W_h, Z_H and the limit-test traces");
  auto* hardy_cmd = app.add_subcommand("hardy", "run the one-dimensional inequality suite");
  auto* spectrum = app.add_subcommand("spectrum", "lowest eigenvalues of one truncated plate");
  auto* sweep = app.add_subcommand("sweep", "truncation, embedding or mixed-case study");
  auto* report = app.add_subcommand("report", "classifier matrix and inequality consistency report");
  for (auto* sc : {classify, crit, hardy_cmd, spectrum, sweep, report}) ov.attach(sc);
  classify->add_option("--assert-verdict", assert_verdict, "fail (exit 1) unless the verdict is Discrete/Inconclusive")
      ->check(CLI::IsMember({"Discrete", "Inconclusive"}));
  crit->add_option("--points", criteria_points, "table rows over (R, R+L]")->check(CLI::PositiveNumber);
  hardy_cmd->add_option("--n", hardy_n, "intervals of the finest grid")->check(CLI::Range(8, 1 << 20));
  spectrum->add_flag("--with-vectors", with_vectors, "include eigenvectors in eigen.json");
  spectrum->add_flag("--export-matrices", export_matrices, "write stiffness and mass in coordinate format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Ok : ConfigFailure;
  }

  try {
    const config::Config c = ov.resolve();
    if (ov.dump_config) {
      out << config::dump(c);
      return Ok;
    }
    if (classify->parsed()) return detail::cmd_classify(c, assert_verdict, out);
    if (crit->parsed()) return detail::cmd_criteria(c, criteria_points, out);
    if (hardy_cmd->parsed()) return detail::cmd_hardy(c, hardy_n, out);
    if (spectrum->parsed()) return detail::cmd_spectrum(c, with_vectors, export_matrices, out);
    if (sweep->parsed()) return detail::cmd_sweep(c, out);
    return detail::cmd_report(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return ConfigFailure;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return ConfigFailure;
  } catch (const InterpolationError& e) {
    err << "profile error: " << e.what() << '\n';
    return ConfigFailure;
  } catch (const ConvergenceFailure& e) {
    err << "numerical failure: " << e.what() << "\n" << e.trace() << '\n';
    return NumericalFailure;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return NumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return ConfigFailure;
  }
}

}  // namespace peakspec::cli
