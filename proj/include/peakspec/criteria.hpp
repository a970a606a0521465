#pragma once

// Weight functionals F_h, G_{h,R}, W_h, Z_H, the sufficient discreteness
// conditions built from them, and the boundary-condition classifier.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "peakspec/errors.hpp"
#include "peakspec/profiles.hpp"

namespace peakspec::criteria {

/// Side condition: clamped (D), hinged (M) or traction-free (N).
/// The enumerator order is the canonical order D < M < N.
enum class BcKind { D, M, N };

inline char to_char(BcKind k) {
  switch (k) {
    case BcKind::D: return 'D';
    case BcKind::M: return 'M';
    case BcKind::N: return 'N';
  }
  return '?';
}

inline BcKind parse_bc_kind(char c) {
  switch (c) {
    case 'D': case 'd': return BcKind::D;
    case 'M': case 'm': return BcKind::M;
    case 'N': case 'n': return BcKind::N;
    default: throw ConfigError(std::string("unknown boundary condition '") + c + "' (expected D, M or N)");
  }
}

struct BcPair {
  BcKind upper = BcKind::N;
  BcKind lower = BcKind::N;

  BcPair swapped() const { return {lower, upper}; }
  BcPair canonical() const { return upper <= lower ? *this : swapped(); }
  bool contains(BcKind k) const { return upper == k || lower == k; }
  bool operator==(const BcPair&) const = default;

  std::string str() const { return std::string{to_char(upper), '-', to_char(lower)}; }
};

/// Parses "N,N", "M-N" or "DN".
inline BcPair parse_bc_pair(const std::string& text) {
  std::string letters;
  for (char c : text) {
    if (c == ',' || c == '-' || c == ' ') continue;
    letters.push_back(c);
  }
  if (letters.size() != 2) throw ConfigError("boundary pair must name two sides, got '" + text + "'");
  return {parse_bc_kind(letters[0]), parse_bc_kind(letters[1])};
}

/// The six unordered side pairings in canonical order.
inline std::vector<BcPair> all_pairs() {
  using K = BcKind;
  return {{K::D, K::D}, {K::D, K::M}, {K::D, K::N}, {K::M, K::M}, {K::M, K::N}, {K::N, K::N}};
}

enum class Verdict { Discrete, Inconclusive };
enum class Basis { Theorem1_i, Theorem1_ii, Theorem2, Corollary2, Theorem3, None };

inline const char* to_string(Verdict v) { return v == Verdict::Discrete ? "Discrete" : "Inconclusive"; }

inline const char* to_string(Basis b) {
  switch (b) {
    case Basis::Theorem1_i: return "Theorem1_i";
    case Basis::Theorem1_ii: return "Theorem1_ii";
    case Basis::Theorem2: return "Theorem2";
    case Basis::Corollary2: return "Corollary2";
    case Basis::Theorem3: return "Theorem3";
    case Basis::None: return "None";
  }
  return "None";
}

struct TracePoint {
  double y;
  double value;
};

/// One evaluated condition with its numeric trace.
struct Evidence {
  std::string criterion;
  std::string quantity;  // what `value` holds in the trace
  std::vector<TracePoint> trace;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct CriterionVerdict {
  BcPair pair;
  std::string profile;
  Verdict verdict = Verdict::Inconclusive;
  Basis basis = Basis::None;
  std::vector<Evidence> evidence;
};

/// Thresholds of the finite-grid limit tests. Defaults classify the
/// standard example families the way their asymptotics dictate.
struct Thresholds {
  int doublings = 12;                   // grid y_k = base * 2^k, k <= doublings
  double af_limit = 1e-3;               // tail_mass/H below this at the last point
  double af_decay_factor = 2.0;         // per-doubling decrease of tail_mass/H
  double af_decay_rel_tol = 1e-3;       // slack on the decay factor
  double log_derivative_limit = -10.0;  // H'/H below this at the last point
  double theorem3_limit = 1e3;          // H^-3 G_H above this at the last point
  double decay_ratio = 0.1;             // H(last)/H(first) for the Theorem 1 decay check
  int trend_points = 4;                 // points over which monotone trends are demanded
};

// ---------------------------------------------------------------- functionals

inline double log_F_h(const Profile& h, double y) {
  return std::log(4.0) + 2.0 * log_tail_mass(h, y) - log_value(h, y);
}

/// F_h(y) = (4 / h(y)) * (int_y^inf h)^2.
inline double F_h(const Profile& h, double y) { return std::exp(log_F_h(h, y)); }

inline double log_G_h(const Profile& h, double R, double y) {
  if (!(y > R)) throw DomainError("G_h needs y > R (the functional is infinite at y = R)");
  if (R < h.r_start()) throw DomainError("G_h needs R >= r_start");
  return -std::log(4.0) - log_value(h, y) - 2.0 * log_inverse_mass(h, R, y);
}

/// G_{h,R}(y) = (1 / (4 h(y))) * (int_R^y 1/h)^-2.
inline double G_h(const Profile& h, double R, double y) { return std::exp(log_G_h(h, R, y)); }

/// Z_H(y) = G_{H,R}(y) / H(y).
inline double z_weight(const Profile& H, double R, double y) {
  return std::exp(log_G_h(H, R, y) - log_value(H, y));
}

/// log of G_{h,R}(t) / F_h(t) = (1/16) (int_R^t 1/h)^-2 (int_t^inf h)^-2.
inline double log_w_objective(const Profile& h, double R, double t) {
  return -std::log(16.0) - 2.0 * log_inverse_mass(h, R, t) - 2.0 * log_tail_mass(h, t);
}

inline double w_objective(const Profile& h, double R, double t) {
  return std::exp(log_w_objective(h, R, t));
}

struct WResult {
  double value = 0.0;      // infimum (or its limit estimate)
  double argmin = 0.0;     // minimizing t
  bool at_infinity = false;  // infimum approached as t -> inf, value is a limit estimate
  std::vector<TracePoint> scan;  // (t, objective) on the coarse grid
};

/// W_h(R) = inf over t > R of G_{h,R}(t) / F_h(t).
///
/// Coarse scan over offsets t - R = 10^e, e in [-10, 30] (40 decades, cut
/// where log h leaves a range representable without cancellation), then golden-section
/// refinement in e around the best grid point.
inline WResult W_h(const Profile& h, double R) {
  if (R < h.r_start()) throw DomainError("W_h needs R >= r_start");
  const double e_lo = -10.0, e_hi = 30.0, step = 0.125;
  const double t_cap = h.r_end();
  auto obj = [&](double e) { return log_w_objective(h, R, R + std::pow(10.0, e)); };

  WResult out;
  std::vector<double> es, vals;
  double best = std::numeric_limits<double>::infinity();
  for (double e = e_lo; e <= e_hi + 1e-12; e += step) {
    const double t = R + std::pow(10.0, e);
    if (t > t_cap) break;
    // Beyond |log h| ~ 1e4 the log-space product loses its digits to cancellation.
    if (std::abs(log_value(h, t)) > 1e4) break;
    const double v = obj(e);
    es.push_back(e);
    vals.push_back(v);
    out.scan.push_back({t, std::exp(v)});
    best = std::min(best, v);
    // The objective blows up past its interior minimum under fast decay.
    if (v > best + std::log(1e8) && es.size() > 8) break;
  }
  if (es.empty()) throw DomainError("W_h scan range is empty");
  const auto imin = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  const bool last = imin + 1 == vals.size();
  const bool flat_tail = std::abs(vals.back() - vals[imin]) <= 1e-12 * std::max(1.0, std::abs(vals[imin]));
  if (last || flat_tail) {
    out.at_infinity = true;
    out.value = std::exp(vals.back());
    out.argmin = R + std::pow(10.0, es.back());
    return out;
  }

  double a = es[imin == 0 ? 0 : imin - 1];
  double b = es[imin + 1];
  if (imin == 0) a = e_lo - 4.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = obj(c), fd = obj(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = obj(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = obj(d);
    }
  }
  const double e_best = fc < fd ? c : d;
  const double v_best = std::min({fc, fd, vals[imin]});
  out.value = std::exp(v_best);
  out.argmin = v_best == vals[imin] ? R + std::pow(10.0, es[imin]) : R + std::pow(10.0, e_best);
  return out;
}

// ------------------------------------------------------------------ tests

namespace detail {

inline double grid_base(const Profile& H, double R) { return std::max({R, H.r_start(), 1.0}); }

inline std::vector<double> geometric_grid(const Profile& H, double base, int first_k, int doublings) {
  std::vector<double> ys;
  for (int k = first_k; k <= doublings; ++k) {
    const double y = base * std::pow(2.0, k);
    if (y > H.r_end()) break;
    ys.push_back(y);
  }
  return ys;
}

inline bool tail_monotone(const std::vector<TracePoint>& tr, int n, bool decreasing) {
  if (static_cast<int>(tr.size()) < n) return false;
  for (std::size_t i = tr.size() - n + 1; i < tr.size(); ++i) {
    if (decreasing ? !(tr[i].value < tr[i - 1].value) : !(tr[i].value > tr[i - 1].value)) return false;
  }
  return true;
}

}  // namespace detail

struct LimitTest {
  double limit_estimate = 0.0;
  bool holds = false;
  Evidence evidence;
};

/// lim tail_mass(y)/H(y) = 0, decided on y = base * 2^k.
inline LimitTest adams_fournier_test(const Profile& H, const Thresholds& th = {}) {
  LimitTest out;
  out.evidence.criterion = "adams_fournier";
  out.evidence.quantity = "tail_mass/H";
  out.evidence.threshold = th.af_limit;
  const auto ys = detail::geometric_grid(H, detail::grid_base(H, H.r_start()), 0, th.doublings);
  try {
    for (double y : ys) out.evidence.trace.push_back({y, std::exp(log_tail_mass(H, y) - log_value(H, y))});
  } catch (const NotIntegrable&) {
    out.limit_estimate = std::numeric_limits<double>::infinity();
    out.evidence.trace.clear();
    out.evidence.note = "profile not integrable";
    return out;
  }
  const auto& tr = out.evidence.trace;
  if (tr.empty()) {
    out.evidence.note = "profile range too short for the test grid";
    return out;
  }
  out.limit_estimate = tr.back().value;
  bool decays = detail::tail_monotone(tr, th.trend_points, true);
  const double need = th.af_decay_factor * (1.0 - th.af_decay_rel_tol);
  for (std::size_t i = tr.size() - th.trend_points + 1; decays && i < tr.size(); ++i) {
    if (tr[i - 1].value / tr[i].value < need) decays = false;
  }
  out.holds = decays && out.limit_estimate < th.af_limit;
  out.evidence.pass = out.holds;
  return out;
}

/// lim H'/H = -inf, decided on y = base * 2^k.
inline LimitTest log_derivative_test(const Profile& H, const Thresholds& th = {}) {
  LimitTest out;
  out.evidence.criterion = "log_derivative";
  out.evidence.quantity = "H'/H";
  out.evidence.threshold = th.log_derivative_limit;
  for (double y : detail::geometric_grid(H, detail::grid_base(H, H.r_start()), 0, th.doublings))
    out.evidence.trace.push_back({y, log_derivative(H, y)});
  if (out.evidence.trace.empty()) {
    out.evidence.note = "profile range too short for the test grid";
    return out;
  }
  out.limit_estimate = out.evidence.trace.back().value;
  out.holds = out.limit_estimate < th.log_derivative_limit &&
              detail::tail_monotone(out.evidence.trace, th.trend_points, true);
  out.evidence.pass = out.holds;
  return out;
}

/// lim H^-3 G_{H,R} = +inf, decided on y = base * 2^k with y > R.
/// The trace holds log10 values, which stay finite where the quantity overflows.
inline LimitTest theorem3_test(const Profile& H, double R, const Thresholds& th = {}) {
  if (R < H.r_start()) throw DomainError("theorem3_test needs R >= r_start");
  LimitTest out;
  out.evidence.criterion = "theorem3";
  out.evidence.quantity = "log10(H^-3 G_H)";
  out.evidence.threshold = std::log10(th.theorem3_limit);
  for (double y : detail::geometric_grid(H, detail::grid_base(H, R), 1, th.doublings)) {
    const double lv = log_G_h(H, R, y) - 3.0 * log_value(H, y);
    out.evidence.trace.push_back({y, lv / std::log(10.0)});
  }
  if (out.evidence.trace.empty()) {
    out.evidence.note = "profile range too short for the test grid";
    return out;
  }
  out.limit_estimate = std::pow(10.0, out.evidence.trace.back().value);
  out.holds = out.evidence.trace.back().value > std::log10(th.theorem3_limit) &&
              detail::tail_monotone(out.evidence.trace, th.trend_points, false);
  out.evidence.pass = out.holds;
  return out;
}

/// H -> 0 along the geometric grid (the decay Theorem 1 relies on).
inline LimitTest decay_test(const Profile& H, const Thresholds& th = {}) {
  LimitTest out;
  out.evidence.criterion = "decay";
  out.evidence.quantity = "log10(H)";
  out.evidence.threshold = std::log10(th.decay_ratio);
  for (double y : detail::geometric_grid(H, detail::grid_base(H, H.r_start()), 0, th.doublings))
    out.evidence.trace.push_back({y, log_value(H, y) / std::log(10.0)});
  const auto& tr = out.evidence.trace;
  if (tr.empty()) {
    out.evidence.note = "profile range too short for the test grid";
    return out;
  }
  out.limit_estimate = std::pow(10.0, tr.back().value);
  out.holds = tr.size() >= 2 && tr.back().value - tr.front().value < std::log10(th.decay_ratio) &&
              detail::tail_monotone(tr, th.trend_points, true);
  out.evidence.pass = out.holds;
  return out;
}

struct LogresResult {
  double min_ratio = 0.0;
  bool holds = false;
  Evidence evidence;
};

/// inf_t G_{h^3,R}(t) / (h(t) h'(t)^2) on offsets t - R in [1e-6, 1e4].
inline LogresResult logres_check(const Profile& h, double R) {
  if (R < h.monotone_from()) throw DomainError("logres_check needs R >= monotone_from");
  const Profile h3 = h.powered(3.0);
  LogresResult out;
  out.evidence.criterion = "logres";
  out.evidence.quantity = "G_{h^3,R}/(h h'^2)";
  out.evidence.threshold = 1.0 - 1e-8;
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (double e = -6.0; e <= 4.0 + 1e-12; e += 0.05) {
    const double t = R + std::pow(10.0, e);
    if (t > h.r_end()) break;
    const auto j = h.log_jet(t);
    const double log_abs_d1 = j.log_value + std::log(std::abs(j.dlog));
    const double lr = log_G_h(h3, R, t) - j.log_value - 2.0 * log_abs_d1;
    const double r = std::exp(lr);
    out.evidence.trace.push_back({t, r});
    out.min_ratio = std::min(out.min_ratio, r);
  }
  out.holds = out.min_ratio >= 1.0 - 1e-8;
  out.evidence.pass = out.holds;
  return out;
}

// ------------------------------------------------------------- classifier

namespace detail {

inline Evidence assumption_evidence(const Profile& H) {
  const auto v = validate(H);
  Evidence e;
  e.criterion = "assumption1";
  e.quantity = "sampled validity";
  e.pass = v.valid();
  for (const auto& n : v.notes) e.note += (e.note.empty() ? "" : "; ") + n;
  return e;
}

// N-N ladder: Corollary 2 first, then Theorem 2.
inline std::optional<Basis> neumann_neumann(const Profile& H, const Thresholds& th,
                                            std::vector<Evidence>& ev) {
  auto af = adams_fournier_test(H, th);
  ev.push_back(af.evidence);
  if (af.holds) return Basis::Corollary2;
  auto lg = log_derivative_test(H, th);
  ev.push_back(lg.evidence);
  auto as = assumption_evidence(H);
  ev.push_back(as);
  if (lg.holds && as.pass) return Basis::Theorem2;
  return std::nullopt;
}

}  // namespace detail

/// Decides which sufficient condition, if any, certifies a discrete
/// spectrum for the given side conditions. Failure of every condition is
/// reported as Inconclusive; no necessity is claimed.
inline CriterionVerdict classify(const BcPair& pair, const Profile& H, const Thresholds& th = {}) {
  CriterionVerdict out;
  out.pair = pair;
  out.profile = H.name();
  const BcPair c = pair.canonical();
  auto set = [&](Basis b) {
    out.basis = b;
    out.verdict = b == Basis::None ? Verdict::Inconclusive : Verdict::Discrete;
  };

  if (c.contains(BcKind::D) || (c.upper == BcKind::M && c.lower == BcKind::M)) {
    auto d = decay_test(H, th);
    out.evidence.push_back(d.evidence);
    if (!d.holds) {
      set(Basis::None);
      return out;
    }
    // u = 0 on both sides covers D-D, D-M, M-M; otherwise one clamped side (D-N).
    const bool both_vanish = c.upper != BcKind::N && c.lower != BcKind::N;
    set(both_vanish ? Basis::Theorem1_i : Basis::Theorem1_ii);
    return out;
  }

  if (c.upper == BcKind::M && c.lower == BcKind::N) {
    auto t3 = theorem3_test(H, H.r_start(), th);
    out.evidence.push_back(t3.evidence);
    if (t3.holds) {
      set(Basis::Theorem3);
      return out;
    }
  }

  set(detail::neumann_neumann(H, th, out.evidence).value_or(Basis::None));
  return out;
}

}  // namespace peakspec::criteria
