#pragma once

// Smallest eigenpairs of a symmetric pencil (A, B), A positive semidefinite
// and B positive semidefinite with A + sB positive definite for s > 0.
//
// Both paths work with the inverted pencil: eigenvalues of
// (A + sB)^{-1} B are 1/(lambda + s), so the wanted end of the spectrum is
// the dominant one and is resolved to relative accuracy even when A is
// strongly graded (thin peak tails make stiffness entries span many decades).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include "peakspec/errors.hpp"

namespace peakspec::linalg {

using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct PencilOptions {
  int k = 1;
  int dense_limit = 3000;  // dense reduction up to this many unknowns
  double tol = 1e-10;      // backward-error target for the iterative path
  int max_iter = 2000;
  std::uint64_t seed = 0x5eed5eedULL;
  std::optional<double> shift;  // s in A + sB; 0 unless A is singular
};

struct PencilResult {
  std::vector<double> values;   // ascending
  DenseMatrix vectors;          // columns, B-normalized where B v != 0
  std::vector<double> residuals;  // normwise backward errors
  std::string method;
  int iterations = 0;
  double shift = 0.0;
};

inline double norm1(const SparseMatrix& m) {
  double best = 0.0;
  for (int c = 0; c < m.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

/// ||A v - lambda B v|| / ((||A||_1 + |lambda| ||B||_1) ||v||).
inline double backward_error(const SparseMatrix& A, const SparseMatrix& B, double lambda, const Vector& v,
                             double normA, double normB) {
  const Vector r = A * v - lambda * (B * v);
  const double denom = (normA + std::abs(lambda) * normB) * v.norm();
  return denom > 0.0 ? r.norm() / denom : r.norm();
}

namespace detail {

// Fallback shift for singular A: small against the largest diagonal
// Rayleigh quotient, which sits near the top of the discrete spectrum.
inline double fallback_shift(const SparseMatrix& A, const SparseMatrix& B) {
  const Vector da = A.diagonal(), db = B.diagonal();
  double best = 0.0;
  for (int i = 0; i < da.size(); ++i) {
    if (db[i] > 0.0 && da[i] > 0.0) best = std::max(best, da[i] / db[i]);
  }
  return best > 0.0 ? 1e-10 * best : 1e-10;
}

inline bool has_positive_diagonal(const SparseMatrix& m) {
  const Vector d = m.diagonal();
  for (int i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) return false;
  return true;
}

inline Vector jacobi_scaling(const SparseMatrix& As) {
  Vector d = As.diagonal();
  for (int i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) throw SingularPencil("pencil has a non-positive diagonal entry");
    d[i] = 1.0 / std::sqrt(d[i]);
  }
  return d;
}

inline SparseMatrix scale_sym(const SparseMatrix& m, const Vector& d) {
  SparseMatrix out = d.asDiagonal() * m * d.asDiagonal();
  out.makeCompressed();
  return out;
}

// Largest k eigenpairs of Bd w = theta Ad w (Ad positive definite) through
// LAPACK dsygvx; the eigenvectors come back Ad-orthonormal.
inline void top_generalized(DenseMatrix Bd, DenseMatrix Ad, int k, Vector& theta, DenseMatrix& W) {
  const lapack_int n = static_cast<lapack_int>(Ad.rows());
  lapack_int found = 0;
  Vector w(n);
  W.resize(n, k);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dsygvx(LAPACK_COL_MAJOR, 1, 'V', 'I', 'L', n, Bd.data(), n, Ad.data(), n, 0.0,
                                         0.0, n - k + 1, n, 0.0, &found, w.data(), W.data(), n, ifail.data());
  if (info > n) throw SingularPencil("A + sB is not positive definite");
  if (info != 0 || found != k)
    throw ConvergenceFailure("dense generalized eigensolver failed", "dsygvx info=" + std::to_string(info));
  theta = w.head(k);
}

inline PencilResult solve_shifted(const SparseMatrix& A, const SparseMatrix& B, const SparseMatrix& As, double s,
                                  const PencilOptions& opt);

}  // namespace detail

/// k smallest eigenpairs of A x = lambda B x.
inline PencilResult smallest_eigenpairs(const SparseMatrix& A, const SparseMatrix& B, const PencilOptions& opt) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || B.cols() != n) throw SingularPencil("pencil matrices differ in size");
  if (opt.k < 1 || opt.k > n) throw SingularPencil("requested eigenpair count outside [1, n]");

  PencilResult out;
  std::vector<double> shifts;
  if (opt.shift) {
    shifts.push_back(*opt.shift);
  } else {
    shifts = {0.0, detail::fallback_shift(A, B)};
  }
  for (std::size_t attempt = 0; attempt < shifts.size(); ++attempt) {
    const bool last = attempt + 1 == shifts.size();
    const SparseMatrix As = A + shifts[attempt] * B;
    if (!detail::has_positive_diagonal(As)) {
      if (last) throw SingularPencil("pencil has a non-positive diagonal entry");
      continue;
    }
    try {
      out = detail::solve_shifted(A, B, As, shifts[attempt], opt);
      return out;
    } catch (const SingularPencil&) {
      if (last) throw;
    }
  }
  throw SingularPencil("no admissible shift");
}

namespace detail {

inline PencilResult solve_shifted(const SparseMatrix& A, const SparseMatrix& B, const SparseMatrix& As, double s,
                                  const PencilOptions& opt) {
  const int n = static_cast<int>(A.rows());
  PencilResult out;
  out.shift = s;
  const Vector d = jacobi_scaling(As);
  const SparseMatrix Ahat = scale_sym(As, d);
  const SparseMatrix Bhat = scale_sym(B, d);
  const double normA = norm1(A), normB = norm1(B);

  const int k = opt.k;
  Vector theta;     // eigenvalues of the inverted pencil, ascending
  DenseMatrix Xhat;  // eigenvectors in scaled coordinates

  if (n <= opt.dense_limit) {
    out.method = "dense";
    top_generalized(DenseMatrix(Bhat), DenseMatrix(Ahat), k, theta, Xhat);
  } else {
    out.method = "shift-invert subspace";
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> chol(Ahat);
    if (chol.info() != Eigen::Success) throw SingularPencil("A + sB is not positive definite");
    const int p = std::min(n, std::max(2 * k, k + 8));
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    DenseMatrix X(n, p);
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < n; ++i) X(i, j) = unif(rng);

    std::ostringstream trace;
    std::vector<double> prev(k, 0.0);
    bool converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
      const DenseMatrix BX = Bhat * X;
      const DenseMatrix Y = chol.solve(BX);
      DenseMatrix Ar = Y.transpose() * BX;
      DenseMatrix Br = Y.transpose() * (Bhat * Y);
      Ar = 0.5 * (Ar + Ar.transpose()).eval();
      Br = 0.5 * (Br + Br.transpose()).eval();
      // Ritz values of the inverted operator: Br q = theta Ar q.
      Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> ges(Ar, Br);
      if (ges.info() != Eigen::Success) throw ConvergenceFailure("Rayleigh-Ritz step failed", trace.str());
      // ges sorts (Ar, Br) eigenvalues ascending: mu = lambda + s.
      const DenseMatrix Q = ges.eigenvectors();
      X = Y * Q;
      const Vector mu = ges.eigenvalues();
      out.iterations = it;
      double change = 0.0;
      for (int j = 0; j < k; ++j) {
        change = std::max(change, std::abs(mu[j] - prev[j]) / std::max(std::abs(mu[j]), 1e-300));
        prev[j] = mu[j];
      }
      if (it % 10 == 0 || change < opt.tol) {
        double worst = 0.0;
        for (int j = 0; j < k; ++j) {
          const Vector v = d.asDiagonal() * X.col(j);
          worst = std::max(worst, backward_error(A, B, mu[j] - s, v, normA, normB));
        }
        trace << "iter " << it << " max backward error " << worst << " ritz change " << change << "\n";
        if (worst <= opt.tol && change < 1e-12) {
          converged = true;
          break;
        }
      }
      // Keep X well scaled: B-normalize the block.
      for (int j = 0; j < p; ++j) {
        const double nb = std::sqrt(std::max(X.col(j).dot(Bhat * X.col(j)), 1e-300));
        X.col(j) /= nb;
      }
    }
    if (!converged) throw ConvergenceFailure("subspace iteration did not converge", trace.str());
    theta.resize(k);
    for (int j = 0; j < k; ++j) theta[k - 1 - j] = 1.0 / (prev[j]);
    Xhat.resize(n, k);
    for (int j = 0; j < k; ++j) Xhat.col(k - 1 - j) = X.col(j);
  }

  // theta ascending -> lambda descending; emit ascending lambda.
  out.vectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    const int src = k - 1 - j;
    const double th = theta[src];
    const double lambda = th > 0.0 ? 1.0 / th - s : std::numeric_limits<double>::infinity();
    Vector v = d.asDiagonal() * Xhat.col(src);
    const double nb = v.dot(B * v);
    if (nb > 0.0) v /= std::sqrt(nb);
    out.values.push_back(lambda);
    out.vectors.col(j) = v;
    out.residuals.push_back(std::isfinite(lambda) ? backward_error(A, B, lambda, v, normA, normB) : 0.0);
  }
  return out;
}

}  // namespace detail

}  // namespace peakspec::linalg
