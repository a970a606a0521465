#pragma once

// One-dimensional weighted inequalities and cross-section Friedrichs constants,
// computed as extremal Rayleigh quotients over C1 cubic Hermite spaces.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"
#include "peakspec/hermite.hpp"
#include "peakspec/pencil.hpp"
#include "peakspec/profiles.hpp"
#include "peakspec/quadrature.hpp"

namespace peakspec::hardy {

enum class Grading { Uniform, Geometric };

struct Grid1D {
  std::vector<double> nodes;
  Grading grading = Grading::Uniform;
  double ratio = 1.0;

  static constexpr int min_intervals = 8;

  static Grid1D uniform(double a, double b, int n) {
    check(a, b, n);
    Grid1D g;
    g.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) g.nodes[i] = a + (b - a) * i / n;
    g.nodes.back() = b;
    return g;
  }

  /// Interval lengths proportional to ratio^i.
  static Grid1D geometric(double a, double b, int n, double ratio) {
    check(a, b, n);
    if (!(ratio > 0.0)) throw DomainError("grading ratio must be positive");
    Grid1D g;
    g.grading = Grading::Geometric;
    g.ratio = ratio;
    double total = 0.0, w = 1.0;
    std::vector<double> widths(n);
    for (int i = 0; i < n; ++i, w *= ratio) {
      widths[i] = w;
      total += w;
    }
    g.nodes.resize(n + 1);
    g.nodes[0] = a;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += widths[i];
      g.nodes[i + 1] = a + (b - a) * acc / total;
    }
    g.nodes.back() = b;
    return g;
  }

  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
  int dofs() const { return 2 * static_cast<int>(nodes.size()); }

  double mesh_size() const {
    double m = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) m = std::max(m, nodes[i] - nodes[i - 1]);
    return m;
  }

 private:
  static void check(double a, double b, int n) {
    if (!(b > a)) throw DomainError("grid needs a < b");
    if (n < min_intervals) throw DomainError("grid needs at least 8 intervals");
  }
};

struct RayleighResult {
  double extremal_value = 0.0;
  Eigen::VectorXd minimizer_coeffs;  // Hermite coefficients (value, slope) per node
  double mesh_size = 0.0;
  std::vector<std::pair<int, double>> refinement_trace;  // (intervals, value), coarse to fine

  /// Change between the two finest levels of the refinement trace.
  double slack() const {
    if (refinement_trace.size() < 2) return 0.0;
    const auto& a = refinement_trace[refinement_trace.size() - 2];
    const auto& b = refinement_trace.back();
    return std::abs(b.second - a.second);
  }
};

enum class Constraint { ValueLeft, ValueRight, SlopeLeft, SlopeRight, MeanZero, EndpointsEqual };
using ConstraintSpec = std::set<Constraint>;

inline const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::ValueLeft: return "ValueLeft";
    case Constraint::ValueRight: return "ValueRight";
    case Constraint::SlopeLeft: return "SlopeLeft";
    case Constraint::SlopeRight: return "SlopeRight";
    case Constraint::MeanZero: return "MeanZero";
    case Constraint::EndpointsEqual: return "EndpointsEqual";
  }
  return "?";
}

inline Constraint parse_constraint(const std::string& s) {
  for (Constraint c : {Constraint::ValueLeft, Constraint::ValueRight, Constraint::SlopeLeft, Constraint::SlopeRight,
                       Constraint::MeanZero, Constraint::EndpointsEqual}) {
    if (s == to_string(c)) return c;
  }
  throw ConfigError("unknown constraint '" + s + "'");
}

/// Named constraint sets of the cross-section inequality.
namespace sections {
inline ConstraintSpec hinged() { return {Constraint::ValueLeft, Constraint::ValueRight}; }
inline ConstraintSpec cantilever() { return {Constraint::ValueRight, Constraint::SlopeRight}; }
inline ConstraintSpec orthogonal() { return {Constraint::MeanZero, Constraint::EndpointsEqual}; }
inline ConstraintSpec one_sided() { return {Constraint::ValueRight}; }
}  // namespace sections

// ------------------------------------------------------------------ assembly

namespace detail {

using LogWeight = std::function<double(double)>;

/// int w(x) D^k phi_i D^k phi_j over the grid, assembled congruence-scaled:
/// entry (i, j) carries the factor exp(-(ref_i + ref_j) / 2), ref = log reference
/// weight at the node of DOF i. Weights spanning hundreds of decades (thin
/// tails) then stay representable; the Rayleigh quotients are unchanged as
/// long as both forms of a pencil share the reference.
/// The first panel is integrated over [x_0 + eps, x_1] only.
inline Eigen::MatrixXd weighted_form(const Grid1D& g, int order, const LogWeight& logw,
                                     const std::vector<double>& ref, double eps = 0.0) {
  const int n = g.intervals();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(g.dofs(), g.dofs());
  for (int e = 0; e < n; ++e) {
    const double x0 = g.nodes[e], x1 = g.nodes[e + 1], len = x1 - x0;
    const double a = e == 0 ? x0 + eps : x0;
    const double span = x1 - a;
    const double r[4] = {ref[e], ref[e], ref[e + 1], ref[e + 1]};
    for (int q = 0; q < 4; ++q) {
      const double x = a + span * hermite::Gauss4Unit::nodes[q];
      const double lw = logw(x);
      if (!std::isfinite(lw)) throw SingularPencil("weight is not finite at y = " + std::to_string(x));
      const double wq = span * hermite::Gauss4Unit::weights[q];
      const auto s = hermite::shape((x - x0) / len, len);
      const auto& d = order == 0 ? s.v : order == 1 ? s.d1 : s.d2;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) K(2 * e + i, 2 * e + j) += wq * std::exp(lw - 0.5 * (r[i] + r[j])) * d[i] * d[j];
    }
  }
  return K;
}

inline std::vector<double> node_logs(const Grid1D& g, const LogWeight& logw) {
  std::vector<double> out;
  out.reserve(g.nodes.size());
  for (double x : g.nodes) {
    const double v = logw(x);
    if (!std::isfinite(v)) throw SingularPencil("reference weight is not finite at y = " + std::to_string(x));
    out.push_back(v);
  }
  return out;
}

/// Undo the congruence scaling; the result is normalized to max |c_i| = 1.
inline Eigen::VectorXd unscale(const Eigen::VectorXd& c, const std::vector<double>& ref) {
  const int N = static_cast<int>(c.size());
  std::vector<double> lg(N);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    lg[i] = c[i] == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(c[i])) - 0.5 * ref[i / 2];
    top = std::max(top, lg[i]);
  }
  Eigen::VectorXd out(N);
  for (int i = 0; i < N; ++i) out[i] = c[i] == 0.0 ? 0.0 : std::copysign(std::exp(lg[i] - top), c[i]);
  return out;
}

/// Basis of the admissible subspace: columns are coefficient vectors.
/// A nonempty dof_scale means coefficients x = diag(dof_scale) y; the basis is returned for y.
inline Eigen::MatrixXd admissible_basis(const Grid1D& g, const ConstraintSpec& cs,
                                        const Eigen::VectorXd& dof_scale = {}) {
  const int N = g.dofs(), last = g.intervals();
  std::vector<int> pinned;
  if (cs.count(Constraint::ValueLeft)) pinned.push_back(0);
  if (cs.count(Constraint::SlopeLeft)) pinned.push_back(1);
  if (cs.count(Constraint::ValueRight)) pinned.push_back(2 * last);
  if (cs.count(Constraint::SlopeRight)) pinned.push_back(2 * last + 1);
  std::vector<int> keep;
  for (int i = 0; i < N; ++i)
    if (std::find(pinned.begin(), pinned.end(), i) == pinned.end()) keep.push_back(i);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, static_cast<int>(keep.size()));
  for (int j = 0; j < static_cast<int>(keep.size()); ++j) S(keep[j], j) = 1.0;

  std::vector<Eigen::RowVectorXd> rows;
  if (cs.count(Constraint::MeanZero)) {
    const Eigen::MatrixXd M0 =
        weighted_form(g, 0, [](double) { return 0.0; }, std::vector<double>(g.nodes.size(), 0.0));
    // int phi_j = (M0 * coefficients of the constant 1)_j.
    Eigen::VectorXd one = Eigen::VectorXd::Zero(N);
    for (int i = 0; i <= last; ++i) one[2 * i] = 1.0;
    rows.push_back((M0 * one).transpose());
  }
  if (cs.count(Constraint::EndpointsEqual)) {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(N);
    r[2 * last] = 1.0;
    r[0] -= 1.0;
    rows.push_back(r);
  }
  if (rows.empty()) return S;
  Eigen::MatrixXd C(static_cast<int>(rows.size()), N);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) C.row(i) = rows[i];
  if (dof_scale.size() == N) C = C * dof_scale.asDiagonal();
  const Eigen::MatrixXd CS = C * S;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(CS);
  const int rank = static_cast<int>(lu.rank());
  const int m = static_cast<int>(S.cols());
  if (m - rank <= 0) return Eigen::MatrixXd(N, 0);
  // Null space of CS from a full QR of its transpose.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(CS.transpose());
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  return S * Q.rightCols(m - rank);
}

struct Extremum {
  double lambda;
  Eigen::VectorXd coeffs;
};

/// Smallest eigenpair of (Z^T A Z, Z^T B Z).
inline Extremum smallest(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Z) {
  if (Z.cols() == 0) throw EmptySpace("constraints leave no admissible function");
  const int N = static_cast<int>(Z.rows()), m = static_cast<int>(Z.cols());
  // Pure DOF selection (point constraints only) avoids dense triple products.
  std::vector<int> pick;
  bool selection = true;
  for (int j = 0; j < m && selection; ++j) {
    int hit = -1;
    for (int i = 0; i < N; ++i) {
      if (Z(i, j) == 0.0) continue;
      if (Z(i, j) != 1.0 || hit >= 0) {
        selection = false;
        break;
      }
      hit = i;
    }
    if (hit < 0) selection = false;
    pick.push_back(hit);
  }
  Eigen::MatrixXd Ar, Br;
  if (selection) {
    Ar.resize(m, m);
    Br.resize(m, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        Ar(i, j) = A(pick[i], pick[j]);
        Br(i, j) = B(pick[i], pick[j]);
      }
  } else {
    Ar = Z.transpose() * A * Z;
    Br = Z.transpose() * B * Z;
  }
  Ar = 0.5 * (Ar + Ar.transpose()).eval();
  Br = 0.5 * (Br + Br.transpose()).eval();
  linalg::PencilOptions opt;
  opt.k = 1;
  opt.dense_limit = std::numeric_limits<int>::max();
  const linalg::SparseMatrix As = Ar.sparseView(0.0), Bs = Br.sparseView(0.0);
  const auto res = linalg::smallest_eigenpairs(As, Bs, opt);
  Eigen::VectorXd full;
  if (selection) {
    full = Eigen::VectorXd::Zero(N);
    for (int j = 0; j < m; ++j) full[pick[j]] = res.vectors(j, 0);
  } else {
    full = Z * res.vectors.col(0);
  }
  return {res.values[0], full};
}

inline std::vector<int> refinement_levels(int n) {
  std::vector<int> levels;
  for (int m = n; m >= Grid1D::min_intervals && levels.size() < 4; m /= 2) levels.push_back(m);
  std::reverse(levels.begin(), levels.end());
  return levels;
}

template <class Solve>
RayleighResult refine(int n, double a, double b, Solve&& solve) {
  RayleighResult out;
  for (int m : refinement_levels(n)) {
    const Grid1D g = Grid1D::uniform(a, b, m);
    auto [value, coeffs] = solve(g);
    out.refinement_trace.emplace_back(m, value);
    out.extremal_value = value;
    out.minimizer_coeffs = std::move(coeffs);
    out.mesh_size = g.mesh_size();
  }
  if (out.refinement_trace.empty()) throw DomainError("grid needs at least 8 intervals");
  return out;
}

inline void check_interval(const Profile& h, double R, double L) {
  if (!(L > 0.0)) throw DomainError("interval length must be positive");
  if (R < h.r_start()) throw DomainError("R precedes the profile start");
  if (R + L > h.r_end()) throw DomainError("interval leaves the profile range");
}

}  // namespace detail

// ------------------------------------------------------------------ operations

/// sup over U with U(R) = 0 of int h U^2 / int F_h U'^2 on [R, R+L].
inline RayleighResult lemma1_ratio(const Profile& h, double R, double L, int n) {
  detail::check_interval(h, R, L);
  const auto lh = [&](double y) { return log_value(h, y); };
  const auto lF = [&](double y) { return criteria::log_F_h(h, y); };
  return detail::refine(n, R, R + L, [&](const Grid1D& g) {
    const auto ref = detail::node_logs(g, lh);
    const Eigen::MatrixXd A = detail::weighted_form(g, 1, lF, ref);
    const Eigen::MatrixXd B = detail::weighted_form(g, 0, lh, ref);
    const auto ext = detail::smallest(A, B, detail::admissible_basis(g, {Constraint::ValueLeft}));
    return std::pair{1.0 / ext.lambda, detail::unscale(ext.coeffs, ref)};
  });
}

/// inf over U with U(R) = 0 of int h U'^2 / int G_{h,R} U^2 on [R, R+L].
/// The singular weight G is integrated from R + eps, eps = 1e-3 * (L / n).
inline RayleighResult lemma2_ratio(const Profile& h, double R, double L, int n) {
  detail::check_interval(h, R, L);
  const auto lh = [&](double y) { return log_value(h, y); };
  const auto lG = [&](double y) { return criteria::log_G_h(h, R, y); };
  return detail::refine(n, R, R + L, [&](const Grid1D& g) {
    const double eps = 1e-3 * L / g.intervals();
    const auto ref = detail::node_logs(g, lh);
    const Eigen::MatrixXd A = detail::weighted_form(g, 1, lh, ref);
    const Eigen::MatrixXd B = detail::weighted_form(g, 0, lG, ref, eps);
    const auto ext = detail::smallest(A, B, detail::admissible_basis(g, {Constraint::ValueLeft}));
    return std::pair{ext.lambda, detail::unscale(ext.coeffs, ref)};
  });
}

/// inf over U with U(R) = U'(R) = 0 of int h U''^2 / int h U^2 on [R, R+L].
inline RayleighResult corollary1_ratio(const Profile& h, double R, double L, int n) {
  detail::check_interval(h, R, L);
  const auto lh = [&](double y) { return log_value(h, y); };
  return detail::refine(n, R, R + L, [&](const Grid1D& g) {
    const auto ref = detail::node_logs(g, lh);
    const Eigen::MatrixXd A = detail::weighted_form(g, 2, lh, ref);
    const Eigen::MatrixXd B = detail::weighted_form(g, 0, lh, ref);
    const auto ext = detail::smallest(
        A, B, detail::admissible_basis(g, {Constraint::ValueLeft, Constraint::SlopeLeft}));
    return std::pair{ext.lambda, detail::unscale(ext.coeffs, ref)};
  });
}

/// c = H^(2 order) * inf int |u^(order)|^2 / int |u|^2 over (-H, H) under the constraints.
/// order 2 is the plate case; order 1 covers a one-sided condition on dz u.
inline RayleighResult cross_section_constant(const ConstraintSpec& constraints, double halfwidth, int n,
                                             int order = 2) {
  if (!(halfwidth > 0.0)) throw DomainError("half-width must be positive");
  if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
  const auto zero = [](double) { return 0.0; };
  const double scale = std::pow(halfwidth, 2 * order);
  return detail::refine(n, -halfwidth, halfwidth, [&](const Grid1D& g) {
    const std::vector<double> ref(g.nodes.size(), 0.0);
    // Slope dofs measured in units of the element size keep every entry on one scale in H.
    Eigen::VectorXd d = Eigen::VectorXd::Ones(g.dofs());
    for (int i = 1; i < g.dofs(); i += 2) d[i] = 1.0 / g.mesh_size();
    const Eigen::MatrixXd A = d.asDiagonal() * detail::weighted_form(g, order, zero, ref) * d.asDiagonal();
    const Eigen::MatrixXd B = d.asDiagonal() * detail::weighted_form(g, 0, zero, ref) * d.asDiagonal();
    const auto ext = detail::smallest(A, B, detail::admissible_basis(g, constraints, d));
    return std::pair{scale * std::max(ext.lambda, 0.0), Eigen::VectorXd(d.asDiagonal() * ext.coeffs)};
  });
}

/// Evaluates a Hermite coefficient vector on a uniform grid over [a, b].
inline double evaluate(const Eigen::VectorXd& coeffs, double a, double b, double x, int order = 0) {
  const int n = static_cast<int>(coeffs.size()) / 2 - 1;
  const double len = (b - a) / n;
  const int e = std::clamp(static_cast<int>((x - a) / len), 0, n - 1);
  const auto s = hermite::shape((x - (a + e * len)) / len, len);
  const auto& d = order == 0 ? s.v : order == 1 ? s.d1 : s.d2;
  double v = 0.0;
  for (int i = 0; i < 4; ++i) v += coeffs[2 * e + i] * d[i];
  return v;
}

// ------------------------------------------------------------ single functions

struct Trial {
  std::function<double(double)> u, du, d2u;
};

/// Quotients of the three inequalities for one trial function on [R, R+L].
inline double lemma1_quotient(const Profile& h, double R, double L, const Trial& f) {
  const double num = quad::integrate([&](double y) { return eval(h, y).value * f.u(y) * f.u(y); }, R, R + L, 1e-10);
  const double den =
      quad::integrate([&](double y) { return criteria::F_h(h, y) * f.du(y) * f.du(y); }, R, R + L, 1e-10);
  return num / den;
}

inline double lemma2_quotient(const Profile& h, double R, double L, const Trial& f) {
  const double num =
      quad::integrate([&](double y) { return eval(h, y).value * f.du(y) * f.du(y); }, R, R + L, 1e-10);
  const double den = quad::integrate(
      [&](double y) { return y > R ? criteria::G_h(h, R, y) * f.u(y) * f.u(y) : 0.0; }, R, R + L, 1e-10);
  return num / den;
}

inline double corollary1_quotient(const Profile& h, double R, double L, const Trial& f) {
  const double num =
      quad::integrate([&](double y) { return eval(h, y).value * f.d2u(y) * f.d2u(y); }, R, R + L, 1e-10);
  const double den = quad::integrate([&](double y) { return eval(h, y).value * f.u(y) * f.u(y); }, R, R + L, 1e-10);
  return num / den;
}

// --------------------------------------------------------------- decomposition

enum class SlopeVariant { EndpointDifference, Moment };

struct SectionDecomposition {
  double u0 = 0.0;
  double u1 = 0.0;
  std::function<double(double)> u_perp;
};

/// u = u0 + z u1 + u_perp on (-H, H), with u0 the section mean.
/// EndpointDifference sets u1 = (u(H) - u(-H)) / (2H) so that u_perp has zero
/// mean and equal endpoint values; Moment sets u1 = 3/(2H^3) int z u.
inline SectionDecomposition decompose_section(std::function<double(double)> u, double H,
                                              SlopeVariant variant = SlopeVariant::EndpointDifference) {
  if (!(H > 0.0)) throw DomainError("half-width must be positive");
  SectionDecomposition d;
  d.u0 = quad::integrate(u, -H, H, 1e-13, 1e-300) / (2.0 * H);
  if (variant == SlopeVariant::EndpointDifference) {
    d.u1 = (u(H) - u(-H)) / (2.0 * H);
  } else {
    d.u1 = 1.5 / (H * H * H) * quad::integrate([&](double z) { return z * u(z); }, -H, H, 1e-13, 1e-300);
  }
  d.u_perp = [u = std::move(u), u0 = d.u0, u1 = d.u1](double z) { return u(z) - u0 - z * u1; };
  return d;
}

// ------------------------------------------------------------------- reports

struct HardyRow {
  std::string operation;
  std::string profile;
  double R = 0.0, L = 0.0;
  int n = 0;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline std::string csv_header() { return "operation,profile,R,L,n,value,bound,pass"; }

inline std::string to_csv(const HardyRow& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.operation << ',' << r.profile << ',' << r.R << ',' << r.L << ',' << r.n << ',' << r.value << ','
     << r.bound << ',' << (r.pass ? "true" : "false");
  return os.str();
}

/// Lemma checks with a tolerance of ten times the refinement slack.
inline HardyRow check_lemma1(const Profile& h, double R, double L, int n) {
  const auto r = lemma1_ratio(h, R, L, n);
  return {"lemma1", h.name(), R, L, n, r.extremal_value, 1.0, r.extremal_value <= 1.0 + 10.0 * r.slack()};
}

inline HardyRow check_lemma2(const Profile& h, double R, double L, int n) {
  const auto r = lemma2_ratio(h, R, L, n);
  return {"lemma2", h.name(), R, L, n, r.extremal_value, 1.0, r.extremal_value >= 1.0 - 10.0 * r.slack()};
}

inline HardyRow check_corollary1(const Profile& h, double R, double L, int n) {
  const auto r = corollary1_ratio(h, R, L, n);
  const double w = criteria::W_h(h, R).value;
  return {"corollary1", h.name(), R, L, n, r.extremal_value, w, r.extremal_value >= w - 10.0 * r.slack()};
}

}  // namespace peakspec::hardy
