#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace peakspec::quad {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
template <class F>
Panel gauss_kronrod_panel(F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double f0 = f(mid);
  double kron = f0 * wk[0];
  double gauss = f0 * wg[0];
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fs = f(mid + half * xk[i]) + f(mid - half * xk[i]);
    kron += fs * wk[i];
    if (i % 2 == 0) gauss += fs * wg[i / 2];
  }
  return {a, b, kron * half, std::abs((kron - gauss) * half)};
}

/// Globally adaptive 15-point Gauss-Kronrod on a finite interval: the panel
/// with the largest error estimate is bisected until the summed estimate is
/// below max(rel_tol * |I|, abs_tol).
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10, double abs_tol = 0.0,
                 int max_panels = 4000) {
  if (a == b) return 0.0;
  std::priority_queue<Panel> heap;
  Panel first = gauss_kronrod_panel(f, a, b);
  double value = first.value, error = first.error;
  heap.push(first);
  while (error > std::max(rel_tol * std::abs(value), abs_tol) && static_cast<int>(heap.size()) < max_panels) {
    const Panel worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      heap.push(worst);
      break;
    }
    const Panel l = gauss_kronrod_panel(f, worst.a, m);
    const Panel r = gauss_kronrod_panel(f, m, worst.b);
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to drop the drift of the incremental updates.
  value = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    heap.pop();
  }
  return value;
}

/// Integral of g over [y, inf) through tau = y + scale * s / (1 - s).
template <class F>
double integrate_tail(F&& g, double y, double scale, double rel_tol = 1e-10) {
  auto mapped = [&](double s) {
    if (s >= 1.0) return 0.0;
    const double one_minus = 1.0 - s;
    const double tau = y + scale * s / one_minus;
    if (!std::isfinite(tau)) return 0.0;
    const double v = g(tau) * scale / (one_minus * one_minus);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate(mapped, 0.0, 1.0, rel_tol);
}

/// Integral of g over [a, b] for integrands concentrated at the right end:
/// panels of width scale * 2^k march leftwards from b.
template <class F>
double integrate_right_weighted(F&& g, double a, double b, double scale, double rel_tol = 1e-10) {
  double total = 0.0;
  double right = b;
  double width = scale;
  while (right > a) {
    const double left = std::max(a, right - width);
    total += integrate(g, left, right, rel_tol, 0.1 * rel_tol * std::abs(total));
    right = left;
    width *= 2.0;
  }
  return total;
}

/// Four-point Gauss-Legendre rule on [-1, 1].
struct Gauss4 {
  static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563,
                                               0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461,
                                                 0.6521451548625461, 0.3478548451374538};
};

}  // namespace peakspec::quad
