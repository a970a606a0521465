#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "peakspec/errors.hpp"

namespace peakspec {

/// Natural cubic spline through (x_i, y_i) with analytic derivatives.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;

  NaturalCubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw InterpolationError("spline needs at least 3 matching samples");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw InterpolationError("spline abscissae must be strictly increasing");
    }
    // Second derivatives m_i, m_0 = m_{n-1} = 0; Thomas algorithm.
    m_.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6.0;
      const double b = (h0 + h1) / 3.0;
      const double cc = h1 / 6.0;
      const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = d[i] - c[i] * m_[i + 1];
    }
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  const std::vector<double>& abscissae() const { return x_; }
  const std::vector<double>& ordinates() const { return y_; }

  bool covers(double t) const { return !x_.empty() && t >= x_.front() && t <= x_.back(); }

  struct Sample {
    double value;
    double d1;
    double d2;
  };

  Sample operator()(double t) const {
    if (!covers(t)) throw InterpolationError("spline evaluated outside its sample range");
    const std::size_t i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    const double value = a * y_[i] + b * y_[i + 1] +
                         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    const double d1 = (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) * h / 6.0 * m_[i] +
                      (3.0 * b * b - 1.0) * h / 6.0 * m_[i + 1];
    const double d2 = a * m_[i] + b * m_[i + 1];
    return {value, d1, d2};
  }

  /// Exact integral of the spline over [lo, hi] within the sample range.
  double integral(double lo, double hi) const {
    if (!covers(lo) || !covers(hi)) throw InterpolationError("spline integral outside sample range");
    if (hi < lo) return -integral(hi, lo);
    double total = 0.0;
    std::size_t i = segment(lo);
    double t0 = lo;
    while (t0 < hi) {
      const double t1 = std::min(hi, x_[i + 1]);
      total += segment_antiderivative(i, t1) - segment_antiderivative(i, t0);
      t0 = t1;
      ++i;
      if (i + 1 >= x_.size()) break;
    }
    return total;
  }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, x_.size() - 2);
  }

  // Antiderivative on segment i measured from x_i.
  double segment_antiderivative(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i];
    const double b = (t - x_[i]) / h;
    const double a = 1.0 - b;
    const double ia = (1.0 - a * a) / 2.0;               // int_0^b a db
    const double ib = b * b / 2.0;                        // int_0^b b db
    const double ia3 = (1.0 - a * a * a * a) / 4.0 - ia;  // int (a^3 - a)
    const double ib3 = b * b * b * b / 4.0 - ib;          // int (b^3 - b)
    return h * (ia * y_[i] + ib * y_[i + 1] + (ia3 * m_[i] + ib3 * m_[i + 1]) * h * h / 6.0);
  }

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace peakspec
