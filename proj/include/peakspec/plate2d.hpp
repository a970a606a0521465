#pragma once

// Kirchhoff plate eigenproblem on a truncated peak strip {R < y < R+L, |z| < H(y)}.
//
// The strip is mapped to the rectangle (y, zeta) in [R, R+L] x [-1, 1] by
// z = H(y) zeta and discretized with tensor products of C1 cubic Hermite
// functions (a bicubic Hermite / Bogner-Fox-Schmit space in mapped
// coordinates). Physical derivatives follow from the chain rule with
// g = H'/H and c = H''/H:
//   u_1  = U_y - zeta g U_zeta
//   u_2  = U_zeta / H
//   u_11 = U_yy - 2 zeta g U_yzeta + zeta^2 g^2 U_zetazeta + zeta (2 g^2 - c) U_zeta
//   u_12 = (U_yzeta - zeta g U_zetazeta - g U_zeta) / H
//   u_22 = U_zetazeta / H^2
// with volume element H dy dzeta.
//
// When the side conditions admit linear functions of zeta (N-N, M-N, N-M),
// those are carried as explicit basis functions in place of an equal number
// of nodal functions. Their zeta-second derivative is then exactly zero,
// which keeps the 1/H^4-weighted terms of rigid section motions free of
// cancellation in very thin tails.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"
#include "peakspec/hermite.hpp"
#include "peakspec/pencil.hpp"
#include "peakspec/profiles.hpp"
#include "peakspec/quadrature.hpp"

namespace peakspec::plate {

using criteria::BcKind;
using criteria::BcPair;
using linalg::SparseMatrix;

/// Truncation edge y = const. Hinged fixes u (and with it all tangential derivatives).
enum class EdgeBc { Clamped, Hinged, Free };

inline const char* to_string(EdgeBc e) {
  switch (e) {
    case EdgeBc::Clamped: return "Clamped";
    case EdgeBc::Hinged: return "Hinged";
    case EdgeBc::Free: return "Free";
  }
  return "?";
}

inline EdgeBc parse_edge_bc(const std::string& s) {
  if (s == "Clamped" || s == "clamped") return EdgeBc::Clamped;
  if (s == "Hinged" || s == "hinged") return EdgeBc::Hinged;
  if (s == "Free" || s == "free") return EdgeBc::Free;
  throw ConfigError("unknown edge condition '" + s + "' (expected Clamped, Hinged or Free)");
}

struct PeakDomainSpec {
  Profile profile = Profile::exponential(1.0);
  double R = 0.0;
  double L = 1.0;
  EdgeBc left_edge = EdgeBc::Clamped;
  EdgeBc right_edge = EdgeBc::Free;
  BcPair side_bc{BcKind::D, BcKind::D};  // upper side zeta = +1, lower side zeta = -1
  double nu = 0.3;

  void validate() const {
    if (!(L > 0.0)) throw DomainError("truncation length must be positive");
    if (!(nu >= 0.0 && nu < 0.5)) throw DomainError("Poisson ratio must lie in [0, 0.5)");
    if (R < profile.r_start()) throw DomainError("strip starts before the profile");
    if (R + L > profile.r_end()) throw DomainError("strip extends beyond the profile");
  }
};

struct GeometryPoint {
  double y = 0.0;
  double weight = 0.0;  // Gauss weight times element length in y
  double H = 0.0;
  double dH = 0.0;
  double d2H = 0.0;
  double g = 0.0;     // H'/H
  double curv = 0.0;  // H''/H
};

struct MappedMesh {
  std::vector<double> y_nodes;
  std::vector<double> zeta_nodes;
  std::vector<std::array<GeometryPoint, 4>> geometry;  // per y-element, 4 Gauss points
  double grading = 1.0;

  int ny() const { return static_cast<int>(y_nodes.size()) - 1; }
  int nz() const { return static_cast<int>(zeta_nodes.size()) - 1; }
};

struct MeshOptions {
  double grading = 1.0;           // ratio of consecutive y-element lengths
  double degenerate_ratio = 1e-12;  // smallest admissible H(R+L)/H(R)
};

inline MappedMesh build_mesh(const PeakDomainSpec& spec, int ny, int nz, const MeshOptions& opt = {}) {
  spec.validate();
  if (ny < 4 || nz < 4) throw DomainError("mesh needs ny, nz >= 4");
  if (!(opt.grading > 0.0)) throw DomainError("grading ratio must be positive");
  const double log_ratio = log_value(spec.profile, spec.R + spec.L) - log_value(spec.profile, spec.R);
  if (!(log_ratio >= std::log(opt.degenerate_ratio)))
    throw DegenerateGeometry("H(R+L)/H(R) = exp(" + std::to_string(log_ratio) + ") is below the admissible ratio");

  MappedMesh m;
  m.grading = opt.grading;
  std::vector<double> widths(ny);
  double total = 0.0, w = 1.0;
  for (int i = 0; i < ny; ++i, w *= opt.grading) {
    widths[i] = w;
    total += w;
  }
  m.y_nodes.resize(ny + 1);
  m.y_nodes[0] = spec.R;
  double acc = 0.0;
  for (int i = 0; i < ny; ++i) {
    acc += widths[i];
    m.y_nodes[i + 1] = spec.R + spec.L * acc / total;
  }
  m.y_nodes.back() = spec.R + spec.L;
  m.zeta_nodes.resize(nz + 1);
  for (int j = 0; j <= nz; ++j) m.zeta_nodes[j] = -1.0 + 2.0 * j / nz;
  m.zeta_nodes.back() = 1.0;

  m.geometry.resize(ny);
  for (int i = 0; i < ny; ++i) {
    const double y0 = m.y_nodes[i], len = m.y_nodes[i + 1] - y0;
    for (int q = 0; q < 4; ++q) {
      GeometryPoint& p = m.geometry[i][q];
      p.y = y0 + len * hermite::Gauss4Unit::nodes[q];
      p.weight = len * hermite::Gauss4Unit::weights[q];
      const auto jet = spec.profile.log_jet(p.y);
      p.H = std::exp(jet.log_value);
      p.g = jet.dlog;
      p.curv = jet.d2log + jet.dlog * jet.dlog;
      p.dH = p.H * p.g;
      p.d2H = p.H * p.curv;
    }
  }
  return m;
}

// ------------------------------------------------------------------ spaces

/// One-dimensional factor spaces. Hermite functions are identified by
/// (node, comp) with comp 0 = value, 1 = slope; rigid functions are c0 + c1 zeta.
struct BasisFunction {
  bool rigid = false;
  int node = 0;
  int comp = 0;
  double c0 = 0.0, c1 = 0.0;
};

struct FactorSpace {
  std::vector<double> nodes;
  std::vector<BasisFunction> functions;
  std::vector<std::vector<int>> active;  // per element: function indices with support there
  std::vector<bool> removed;             // per nodal DOF 2*node+comp: fixed by a boundary condition

  int size() const { return static_cast<int>(functions.size()); }

  /// Value and first two derivatives of function f on element e at local t.
  std::array<double, 3> eval(int f, int e, double t) const {
    const BasisFunction& b = functions[f];
    const double len = nodes[e + 1] - nodes[e];
    if (b.rigid) {
      const double x = nodes[e] + len * t;
      return {b.c0 + b.c1 * x, b.c1, 0.0};
    }
    const int local = (b.node == e ? 0 : 2) + b.comp;
    const auto s = hermite::shape(t, len);
    return {s.v[local], s.d1[local], s.d2[local]};
  }

  /// Nodal DOF vector (value, slope per node) of function f.
  Eigen::VectorXd nodal(int f) const {
    const int n = static_cast<int>(nodes.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
    const BasisFunction& b = functions[f];
    if (b.rigid) {
      for (int i = 0; i < n; ++i) {
        v[2 * i] = b.c0 + b.c1 * nodes[i];
        v[2 * i + 1] = b.c1;
      }
    } else {
      v[2 * b.node + b.comp] = 1.0;
    }
    return v;
  }
};

namespace detail {

inline FactorSpace make_space(const std::vector<double>& nodes, std::vector<bool> removed,
                              const std::vector<BasisFunction>& rigid, const std::vector<int>& replaced) {
  FactorSpace s;
  s.nodes = nodes;
  s.removed = removed;
  const int n = static_cast<int>(nodes.size());
  for (const auto& r : rigid) s.functions.push_back(r);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c) {
      const int k = 2 * i + c;
      if (removed[k] || std::find(replaced.begin(), replaced.end(), k) != replaced.end()) continue;
      s.functions.push_back({false, i, c, 0.0, 0.0});
    }
  s.active.assign(n - 1, {});
  for (int f = 0; f < s.size(); ++f) {
    const BasisFunction& b = s.functions[f];
    for (int e = 0; e < n - 1; ++e) {
      if (b.rigid || b.node == e || b.node == e + 1) s.active[e].push_back(f);
    }
  }
  return s;
}

}  // namespace detail

inline FactorSpace make_y_space(const std::vector<double>& nodes, EdgeBc left, EdgeBc right) {
  const int n = static_cast<int>(nodes.size());
  std::vector<bool> removed(2 * n, false);
  auto apply = [&](int node, EdgeBc bc) {
    if (bc == EdgeBc::Clamped) removed[2 * node] = removed[2 * node + 1] = true;
    if (bc == EdgeBc::Hinged) removed[2 * node] = true;
  };
  apply(0, left);
  apply(n - 1, right);
  return detail::make_space(nodes, removed, {}, {});
}

inline FactorSpace make_section_space(const std::vector<double>& nodes, const BcPair& sides) {
  const int n = static_cast<int>(nodes.size());
  const int top = n - 1;
  std::vector<bool> removed(2 * n, false);
  auto apply = [&](int node, BcKind bc) {
    if (bc == BcKind::D) removed[2 * node] = removed[2 * node + 1] = true;
    if (bc == BcKind::M) removed[2 * node] = true;
  };
  apply(0, sides.lower);
  apply(top, sides.upper);
  std::vector<BasisFunction> rigid;
  std::vector<int> replaced;
  if (sides.upper == BcKind::N && sides.lower == BcKind::N) {
    rigid = {{true, 0, 0, 1.0, 0.0}, {true, 0, 0, 0.0, 1.0}};
    replaced = {0, 1};
  } else if (sides.upper == BcKind::M && sides.lower == BcKind::N) {
    rigid = {{true, 0, 0, 1.0, -1.0}};
    replaced = {0};
  } else if (sides.upper == BcKind::N && sides.lower == BcKind::M) {
    rigid = {{true, 0, 0, 1.0, 1.0}};
    replaced = {2 * top};
  }
  return detail::make_space(nodes, removed, rigid, replaced);
}

/// A nodal tensor DOF: comp 0 = u, 1 = u_y, 2 = u_zeta, 3 = u_yzeta.
struct NodalDof {
  int iy = 0;
  int iz = 0;
  int comp = 0;
};

struct DiscreteOperatorPair {
  SparseMatrix stiffness;
  SparseMatrix mass;
  SparseMatrix sobolev_gram;
  SparseMatrix hessian;  // sum of squared physical second derivatives
  std::vector<NodalDof> constrained_dofs;
  PeakDomainSpec spec;
  MappedMesh mesh;
  FactorSpace yspace;
  FactorSpace zspace;

  int size() const { return static_cast<int>(stiffness.rows()); }
  int index(int a, int b) const { return a * zspace.size() + b; }
};

// ------------------------------------------------------------------ assembly

struct ElementMatrices {
  std::vector<int> dofs;
  Eigen::MatrixXd stiffness, mass, gram, hessian;
};

namespace detail {

struct PointValues {
  double u, u1, u2, u11, u12, u22;
};

inline void check_geometry(const GeometryPoint& p) {
  if (!std::isfinite(p.H) || !(p.H > 0.0) || !std::isfinite(p.g) || !std::isfinite(p.curv))
    throw AssemblyError("non-finite geometry at y = " + std::to_string(p.y));
}

}  // namespace detail

inline ElementMatrices element_matrices(const PeakDomainSpec& spec, const MappedMesh& mesh, const FactorSpace& ys,
                                        const FactorSpace& zs, int ey, int ez) {
  const auto& yact = ys.active[ey];
  const auto& zact = zs.active[ez];
  const int nl = static_cast<int>(yact.size() * zact.size());
  ElementMatrices em;
  em.dofs.reserve(nl);
  for (int a : yact)
    for (int b : zact) em.dofs.push_back(a * zs.size() + b);
  em.stiffness = Eigen::MatrixXd::Zero(nl, nl);
  em.mass = Eigen::MatrixXd::Zero(nl, nl);
  em.gram = Eigen::MatrixXd::Zero(nl, nl);
  em.hessian = Eigen::MatrixXd::Zero(nl, nl);
  const double nu = spec.nu;
  const double z0 = zs.nodes[ez], zlen = zs.nodes[ez + 1] - z0;
  std::vector<detail::PointValues> pv(nl);
  std::vector<std::array<double, 3>> yv(yact.size()), zv(zact.size());
  for (int qy = 0; qy < 4; ++qy) {
    const GeometryPoint& gp = mesh.geometry[ey][qy];
    detail::check_geometry(gp);
    const double ty = hermite::Gauss4Unit::nodes[qy];
    for (std::size_t a = 0; a < yact.size(); ++a) yv[a] = ys.eval(yact[a], ey, ty);
    const double H = gp.H, g = gp.g, c = gp.curv;
    for (int qz = 0; qz < 4; ++qz) {
      const double tz = hermite::Gauss4Unit::nodes[qz];
      const double zeta = z0 + zlen * tz;
      const double w = gp.weight * zlen * hermite::Gauss4Unit::weights[qz] * H;
      for (std::size_t b = 0; b < zact.size(); ++b) zv[b] = zs.eval(zact[b], ez, tz);
      int k = 0;
      for (std::size_t a = 0; a < yact.size(); ++a)
        for (std::size_t b = 0; b < zact.size(); ++b, ++k) {
          const double U = yv[a][0] * zv[b][0];
          const double Uy = yv[a][1] * zv[b][0];
          const double Uz = yv[a][0] * zv[b][1];
          const double Uyy = yv[a][2] * zv[b][0];
          const double Uyz = yv[a][1] * zv[b][1];
          const double Uzz = yv[a][0] * zv[b][2];
          detail::PointValues& p = pv[k];
          p.u = U;
          p.u1 = Uy - zeta * g * Uz;
          p.u2 = Uz / H;
          p.u11 = Uyy - 2.0 * zeta * g * Uyz + zeta * zeta * g * g * Uzz + zeta * (2.0 * g * g - c) * Uz;
          p.u12 = (Uyz - zeta * g * Uzz - g * Uz) / H;
          p.u22 = Uzz / (H * H);
        }
      for (int i = 0; i < nl; ++i) {
        const auto& pi = pv[i];
        for (int j = 0; j <= i; ++j) {
          const auto& pj = pv[j];
          const double hess = pi.u11 * pj.u11 + 2.0 * pi.u12 * pj.u12 + pi.u22 * pj.u22;
          const double energy = pi.u11 * pj.u11 + pi.u22 * pj.u22 + nu * (pi.u11 * pj.u22 + pi.u22 * pj.u11) +
                                2.0 * (1.0 - nu) * pi.u12 * pj.u12;
          const double mass = pi.u * pj.u;
          em.stiffness(i, j) += w * energy;
          em.mass(i, j) += w * mass;
          em.hessian(i, j) += w * hess;
          em.gram(i, j) += w * (mass + pi.u1 * pj.u1 + pi.u2 * pj.u2 + hess);
        }
      }
    }
  }
  for (Eigen::MatrixXd* m : {&em.stiffness, &em.mass, &em.gram, &em.hessian})
    m->triangularView<Eigen::StrictlyUpper>() = m->transpose().triangularView<Eigen::StrictlyUpper>();
  return em;
}

namespace detail {

inline std::vector<NodalDof> constrained_nodal_dofs(const FactorSpace& ys, const FactorSpace& zs) {
  std::vector<NodalDof> out;
  const int ny = static_cast<int>(ys.nodes.size()), nz = static_cast<int>(zs.nodes.size());
  for (int iy = 0; iy < ny; ++iy)
    for (int iz = 0; iz < nz; ++iz)
      for (int comp = 0; comp < 4; ++comp) {
        const int cy = comp & 1, cz = comp >> 1;
        if (ys.removed[2 * iy + cy] || zs.removed[2 * iz + cz]) out.push_back({iy, iz, comp});
      }
  return out;
}

inline SparseMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

/// Mass form restricted to y-elements with index >= first_element.
inline SparseMatrix assemble_mass_beyond(const DiscreteOperatorPair& ops, int first_element) {
  const int n = ops.size();
  std::vector<Eigen::Triplet<double>> t;
  for (int ey = first_element; ey < ops.mesh.ny(); ++ey)
    for (int ez = 0; ez < ops.mesh.nz(); ++ez) {
      const auto em = element_matrices(ops.spec, ops.mesh, ops.yspace, ops.zspace, ey, ez);
      for (std::size_t i = 0; i < em.dofs.size(); ++i)
        for (std::size_t j = 0; j < em.dofs.size(); ++j) t.emplace_back(em.dofs[i], em.dofs[j], em.mass(i, j));
    }
  return detail::from_triplets(n, t);
}

inline DiscreteOperatorPair assemble(const PeakDomainSpec& spec, const MappedMesh& mesh) {
  spec.validate();
  DiscreteOperatorPair ops;
  ops.spec = spec;
  ops.mesh = mesh;
  ops.yspace = make_y_space(mesh.y_nodes, spec.left_edge, spec.right_edge);
  ops.zspace = make_section_space(mesh.zeta_nodes, spec.side_bc);
  ops.constrained_dofs = detail::constrained_nodal_dofs(ops.yspace, ops.zspace);
  const int n = ops.yspace.size() * ops.zspace.size();
  if (n == 0) throw AssemblyError("boundary conditions leave no free DOF");
  std::vector<Eigen::Triplet<double>> tk, tm, tg, th;
  // Element index order keeps the reduction deterministic.
  for (int ey = 0; ey < mesh.ny(); ++ey)
    for (int ez = 0; ez < mesh.nz(); ++ez) {
      const auto em = element_matrices(spec, mesh, ops.yspace, ops.zspace, ey, ez);
      for (std::size_t i = 0; i < em.dofs.size(); ++i)
        for (std::size_t j = 0; j < em.dofs.size(); ++j) {
          const int r = em.dofs[i], c = em.dofs[j];
          tk.emplace_back(r, c, em.stiffness(i, j));
          tm.emplace_back(r, c, em.mass(i, j));
          tg.emplace_back(r, c, em.gram(i, j));
          th.emplace_back(r, c, em.hessian(i, j));
        }
    }
  ops.stiffness = detail::from_triplets(n, tk);
  ops.mass = detail::from_triplets(n, tm);
  ops.sobolev_gram = detail::from_triplets(n, tg);
  ops.hessian = detail::from_triplets(n, th);
  return ops;
}

/// Coefficient vector of the function whose nodal tensor DOFs are given by
/// f(y, zeta) = (u, u_y, u_zeta, u_yzeta); least squares onto the space.
inline Eigen::VectorXd coefficients_from_nodal(const DiscreteOperatorPair& ops,
                                               const std::function<std::array<double, 4>(double, double)>& f) {
  const FactorSpace& ys = ops.yspace;
  const FactorSpace& zs = ops.zspace;
  const int nzn = static_cast<int>(zs.nodes.size());
  Eigen::MatrixXd S(2 * nzn, zs.size());
  for (int b = 0; b < zs.size(); ++b) S.col(b) = zs.nodal(b);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
  Eigen::VectorXd out(ops.size());
  for (int a = 0; a < ys.size(); ++a) {
    const BasisFunction& yb = ys.functions[a];
    Eigen::VectorXd target(2 * nzn);
    for (int iz = 0; iz < nzn; ++iz) {
      const auto v = f(ys.nodes[yb.node], zs.nodes[iz]);
      target[2 * iz] = v[yb.comp];          // u or u_y
      target[2 * iz + 1] = v[2 + yb.comp];  // u_zeta or u_yzeta
    }
    out.segment(a * zs.size(), zs.size()) = qr.solve(target);
  }
  return out;
}

// ------------------------------------------------------------------ solving

struct EigenResult {
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::vector<double> residual_norms;
  std::string method;
};

inline nlohmann::json to_json(const EigenResult& r, bool with_vectors = false) {
  nlohmann::json j;
  j["eigenvalues"] = r.eigenvalues;
  j["residual_norms"] = r.residual_norms;
  j["method"] = r.method;
  if (with_vectors) {
    std::vector<std::vector<double>> cols;
    for (int c = 0; c < r.eigenvectors.cols(); ++c)
      cols.emplace_back(r.eigenvectors.col(c).data(), r.eigenvectors.col(c).data() + r.eigenvectors.rows());
    j["eigenvectors"] = cols;
  }
  return j;
}

struct SolveOptions {
  int dense_limit = 3000;
  double residual_tol = 1e-8;
};

inline EigenResult solve_eigs(const DiscreteOperatorPair& ops, int k, const SolveOptions& so = {}) {
  if (k < 1 || k > ops.size()) throw DomainError("eigenpair count must lie in [1, free DOFs]");
  linalg::PencilOptions opt;
  opt.k = k;
  opt.dense_limit = so.dense_limit;
  const auto res = linalg::smallest_eigenpairs(ops.stiffness, ops.mass, opt);
  EigenResult out{res.values, res.vectors, res.residuals, res.method};
  for (std::size_t i = 0; i < out.residual_norms.size(); ++i) {
    if (!(out.residual_norms[i] <= so.residual_tol))
      throw ConvergenceFailure("eigenpair residual above tolerance",
                               "pair " + std::to_string(i) + " backward error " + std::to_string(out.residual_norms[i]));
  }
  return out;
}

/// K = min over u of (u, u)_{H^2} / ||u||^2_{L^2(y >= y_nodes[rho_index])}.
inline double embedding_constant(const DiscreteOperatorPair& ops, int rho_index, const SolveOptions& so = {}) {
  if (rho_index < 0 || rho_index >= ops.mesh.ny()) throw EmptySubdomain("no element lies beyond the cut");
  const SparseMatrix Mrho = assemble_mass_beyond(ops, rho_index);
  linalg::PencilOptions opt;
  opt.k = 1;
  opt.dense_limit = so.dense_limit;
  opt.shift = 0.0;
  const auto res = linalg::smallest_eigenpairs(ops.sobolev_gram, Mrho, opt);
  if (!(res.residuals[0] <= so.residual_tol))
    throw ConvergenceFailure("embedding eigenpair residual above tolerance",
                             "backward error " + std::to_string(res.residuals[0]));
  return res.values[0];
}

/// Node index of the first y-node at or beyond rho.
inline int node_at(const MappedMesh& mesh, double rho) {
  const auto it = std::lower_bound(mesh.y_nodes.begin(), mesh.y_nodes.end(), rho - 1e-12);
  return static_cast<int>(it - mesh.y_nodes.begin());
}

// ------------------------------------------------------------------ export

/// "row col value" lines, 0-based, preceded by a "# rows cols nnz" header.
inline void write_coordinate(std::ostream& os, const SparseMatrix& m) {
  os << "# " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os.precision(17);
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

inline void write_coordinate(const std::string& path, const SparseMatrix& m) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  write_coordinate(os, m);
}

}  // namespace peakspec::plate
