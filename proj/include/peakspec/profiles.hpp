#pragma once

// Peak half-width profiles H(y) and the semi-infinite integrals built on them.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "peakspec/errors.hpp"
#include "peakspec/quadrature.hpp"
#include "peakspec/spline.hpp"

namespace peakspec {

enum class ProfileKind { Power, Exponential, SuperExponential, Tabulated };

/// H, H', H'' at one point.
struct DerivativeBundle {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Immutable description of a peak profile.
///
/// The built-in families are
///   Power:            H(y) = h0 * y^(-alpha)
///   Exponential:      H(y) = exp(-alpha * y)
///   SuperExponential: H(y) = exp(-y^(1 + alpha))
/// and Tabulated profiles interpolate samples with a natural cubic spline.
/// Every profile carries an amplitude factor and an exponent, so that the
/// weights H^3 and c*H used by the criteria stay in closed form.
class Profile {
 public:
  static Profile power(double alpha, double h0 = 1.0, double r_start = 1.0) {
    if (!(alpha > 0.0)) throw DomainError("power profile needs alpha > 0");
    if (!(h0 > 0.0)) throw DomainError("power profile needs h0 > 0");
    if (!(r_start > 0.0)) throw DomainError("power profile needs r_start > 0");
    Profile p(ProfileKind::Power, alpha, r_start);
    p.amplitude_ = h0;
    return p;
  }

  static Profile exponential(double alpha, double r_start = 0.0) {
    if (!(alpha > 0.0)) throw DomainError("exponential profile needs alpha > 0");
    return Profile(ProfileKind::Exponential, alpha, r_start);
  }

  static Profile super_exponential(double alpha, double r_start = 0.0) {
    if (!(alpha > 0.0)) throw DomainError("super-exponential profile needs alpha > 0");
    if (r_start < 0.0) throw DomainError("super-exponential profile needs r_start >= 0");
    Profile p(ProfileKind::SuperExponential, alpha, r_start);
    // H'' > 0 only once y^(1+alpha) > alpha / (1 + alpha).
    const double beta = 1.0 + alpha;
    p.monotone_from_ = std::max(r_start, std::pow(alpha / beta, 1.0 / beta));
    return p;
  }

  /// Spline through samples (y_i, H_i); monotone_from is verified by validate().
  static Profile tabulated(std::vector<double> y, std::vector<double> h,
                           std::optional<double> monotone_from = std::nullopt) {
    for (double v : h) {
      if (!(v > 0.0)) throw DomainError("tabulated profile needs positive samples");
    }
    Profile p(ProfileKind::Tabulated, 0.0, y.empty() ? 0.0 : y.front());
    p.spline_ = std::make_shared<const NaturalCubicSpline>(std::move(y), std::move(h));
    p.monotone_from_ = monotone_from.value_or(p.r_start_);
    return p;
  }

  /// Constant half-width h on [y0, y1] (rectangle mode).
  static Profile flat(double h, double y0, double y1) {
    const int n = 8;
    std::vector<double> y(n + 1), v(n + 1, h);
    for (int i = 0; i <= n; ++i) y[i] = y0 + (y1 - y0) * i / n;
    return tabulated(std::move(y), std::move(v));
  }

  /// Two-column CSV (y, H); lines starting with '#' and a non-numeric header are skipped.
  static Profile from_csv(const std::string& path, std::optional<double> monotone_from = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw InterpolationError("cannot open profile table " + path);
    std::vector<double> y, h;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a = 0.0, b = 0.0;
      if (!(ss >> a >> b)) {
        if (y.empty()) continue;
        throw InterpolationError("malformed row in profile table " + path + ": " + line);
      }
      y.push_back(a);
      h.push_back(b);
    }
    return tabulated(std::move(y), std::move(h), monotone_from);
  }

  /// c * H.
  Profile scaled(double factor) const {
    if (!(factor > 0.0)) throw DomainError("profile scale factor must be positive");
    Profile p = *this;
    p.amplitude_ *= factor;
    return p;
  }

  /// H^q.
  Profile powered(double q) const {
    if (!(q > 0.0)) throw DomainError("profile exponent must be positive");
    Profile p = *this;
    p.exponent_ *= q;
    return p;
  }

  Profile with_monotone_from(double t) const {
    if (t < r_start_) throw DomainError("monotone_from must not precede r_start");
    Profile p = *this;
    p.monotone_from_ = t;
    return p;
  }

  ProfileKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double amplitude() const { return amplitude_; }
  double exponent() const { return exponent_; }
  double r_start() const { return r_start_; }
  double monotone_from() const { return monotone_from_; }
  const NaturalCubicSpline* spline() const { return spline_.get(); }

  /// Upper end of the region where the profile is defined.
  double r_end() const {
    return kind_ == ProfileKind::Tabulated ? spline_->back() : std::numeric_limits<double>::infinity();
  }

  /// Short identifier such as "exp:1", "superexp:1", "power:2", "power:2^3".
  std::string name() const {
    std::ostringstream os;
    os.precision(6);
    switch (kind_) {
      case ProfileKind::Power: os << "power:" << alpha_; break;
      case ProfileKind::Exponential: os << "exp:" << alpha_; break;
      case ProfileKind::SuperExponential: os << "superexp:" << alpha_; break;
      case ProfileKind::Tabulated: os << "table[" << spline_->abscissae().size() << "]"; break;
    }
    if (amplitude_ != 1.0) os << "*" << amplitude_;
    if (exponent_ != 1.0) os << "^" << exponent_;
    return os.str();
  }

  // Log-space primitives: log H, (log H)' = H'/H and (log H)''.
  struct LogJet {
    double log_value;
    double dlog;
    double d2log;
  };

  LogJet log_jet(double y) const {
    double lb = 0.0, db = 0.0, ddb = 0.0;
    switch (kind_) {
      case ProfileKind::Power:
        lb = -alpha_ * std::log(y);
        db = -alpha_ / y;
        ddb = alpha_ / (y * y);
        break;
      case ProfileKind::Exponential:
        lb = -alpha_ * y;
        db = -alpha_;
        ddb = 0.0;
        break;
      case ProfileKind::SuperExponential: {
        const double beta = 1.0 + alpha_;
        lb = -std::pow(y, beta);
        db = -beta * std::pow(y, alpha_);
        ddb = y > 0.0 ? -beta * alpha_ * std::pow(y, alpha_ - 1.0) : 0.0;
        break;
      }
      case ProfileKind::Tabulated: {
        const auto s = (*spline_)(y);
        if (!(s.value > 0.0)) throw DomainError("tabulated profile interpolates to a non-positive value");
        lb = std::log(s.value);
        db = s.d1 / s.value;
        ddb = s.d2 / s.value - db * db;
        break;
      }
    }
    return {exponent_ * (std::log(amplitude_) + lb), exponent_ * db, exponent_ * ddb};
  }

 private:
  Profile(ProfileKind kind, double alpha, double r_start)
      : kind_(kind), alpha_(alpha), r_start_(r_start), monotone_from_(r_start) {}

  ProfileKind kind_;
  double alpha_ = 0.0;
  double amplitude_ = 1.0;
  double exponent_ = 1.0;
  double r_start_ = 0.0;
  double monotone_from_ = 0.0;
  std::shared_ptr<const NaturalCubicSpline> spline_;
};

namespace detail {

inline void require_in_domain(const Profile& p, double y) {
  if (!(y >= p.r_start())) throw DomainError("profile evaluated before r_start");
  if (p.kind() == ProfileKind::Tabulated && y > p.r_end())
    throw InterpolationError("tabulated profile does not cover the requested abscissa");
}

// log(e^a - e^b) for a >= b.
inline double log_diff_exp(double a, double b) {
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log(-std::expm1(b - a));
}

inline double tail_scale(const Profile& p, double y) {
  const double d = std::abs(p.log_jet(y).dlog);
  return std::clamp(d > 0.0 ? 1.0 / d : 1.0, 1e-12, 1e12);
}

}  // namespace detail

inline double log_value(const Profile& p, double y) {
  detail::require_in_domain(p, y);
  return p.log_jet(y).log_value;
}

/// H'(y) / H(y), robust where H itself underflows.
inline double log_derivative(const Profile& p, double y) {
  detail::require_in_domain(p, y);
  return p.log_jet(y).dlog;
}

inline DerivativeBundle eval(const Profile& p, double y) {
  detail::require_in_domain(p, y);
  const auto j = p.log_jet(y);
  const double v = std::exp(j.log_value);
  return {v, v * j.dlog, v * (j.dlog * j.dlog + j.d2log)};
}

/// log of the tail integral of H over [y, inf), by quadrature only (no closed forms).
inline double log_tail_mass_quadrature(const Profile& p, double y) {
  detail::require_in_domain(p, y);
  const double base = p.log_jet(y).log_value;
  if (p.kind() == ProfileKind::Tabulated) {
    // Spline part, then an exponential continuation matching the end log-slope.
    const double end = p.r_end();
    const double k = -p.log_jet(end).dlog;
    if (!(k > 0.0)) throw NotIntegrable("tabulated profile is not decaying at its last sample");
    const double inner = quad::integrate(
        [&](double t) { return std::exp(p.log_jet(t).log_value - base); }, y, end);
    const double outer = std::exp(p.log_jet(end).log_value - base) / k;
    return base + std::log(inner + outer);
  }
  if (p.kind() == ProfileKind::Power && !(p.alpha() * p.exponent() > 1.0))
    throw NotIntegrable("power profile with alpha <= 1 has a divergent tail");
  const double scale = detail::tail_scale(p, y);
  const double integral =
      quad::integrate_tail([&](double t) { return std::exp(p.log_jet(t).log_value - base); }, y, scale);
  if (!std::isfinite(integral)) throw NotIntegrable("tail quadrature diverged");
  return base + std::log(integral);
}

/// log of the tail integral of H over [y, inf).
inline double log_tail_mass(const Profile& p, double y) {
  detail::require_in_domain(p, y);
  const double q = p.exponent();
  const double la = std::log(p.amplitude());
  switch (p.kind()) {
    case ProfileKind::Exponential: {
      const double rate = q * p.alpha();
      return q * la - rate * y - std::log(rate);
    }
    case ProfileKind::Power: {
      const double decay = q * p.alpha();
      if (!(decay > 1.0)) throw NotIntegrable("power profile with alpha <= 1 has a divergent tail");
      return q * la + (1.0 - decay) * std::log(y) - std::log(decay - 1.0);
    }
    default:
      return log_tail_mass_quadrature(p, y);
  }
}

/// Integral of H over [y, inf).
inline double tail_mass(const Profile& p, double y) { return std::exp(log_tail_mass(p, y)); }

inline double tail_mass_quadrature(const Profile& p, double y) {
  return std::exp(log_tail_mass_quadrature(p, y));
}

/// log of the integral of 1/H over [a, b] by quadrature; -inf for a == b.
inline double log_inverse_mass_quadrature(const Profile& p, double a, double b) {
  if (a > b) throw DomainError("inverse_mass needs a <= b");
  detail::require_in_domain(p, a);
  detail::require_in_domain(p, b);
  if (a == b) return -std::numeric_limits<double>::infinity();
  const double top = p.log_jet(b).log_value;
  const double scale = detail::tail_scale(p, b);
  const double integral = quad::integrate_right_weighted(
      [&](double t) { return std::exp(top - p.log_jet(t).log_value); }, a, b, scale);
  return std::log(integral) - top;
}

/// log of the integral of 1/H over [a, b]; -inf for a == b.
inline double log_inverse_mass(const Profile& p, double a, double b) {
  if (a > b) throw DomainError("inverse_mass needs a <= b");
  detail::require_in_domain(p, a);
  detail::require_in_domain(p, b);
  if (a == b) return -std::numeric_limits<double>::infinity();
  const double q = p.exponent();
  const double la = std::log(p.amplitude());
  switch (p.kind()) {
    case ProfileKind::Exponential: {
      const double rate = q * p.alpha();
      return -q * la + detail::log_diff_exp(rate * b, rate * a) - std::log(rate);
    }
    case ProfileKind::Power: {
      const double k = q * p.alpha() + 1.0;
      return -q * la + detail::log_diff_exp(k * std::log(b), k * std::log(a)) - std::log(k);
    }
    default:
      return log_inverse_mass_quadrature(p, a, b);
  }
}

/// Integral of 1/H over [a, b].
inline double inverse_mass(const Profile& p, double a, double b) {
  return std::exp(log_inverse_mass(p, a, b));
}

inline double inverse_mass_quadrature(const Profile& p, double a, double b) {
  return std::exp(log_inverse_mass_quadrature(p, a, b));
}

/// Sampled check of the regularity and decay assumptions on a profile.
struct ProfileValidity {
  bool positive = true;
  bool monotone_convex = true;     // H' < 0, H'' > 0 beyond monotone_from
  bool derivative_decays = true;   // H' -> 0
  bool curvature_bounded = true;   // H'' bounded
  bool integrable = true;          // tail integral finite
  std::vector<std::string> notes;

  bool valid() const {
    return positive && monotone_convex && derivative_decays && curvature_bounded && integrable;
  }
};

inline ProfileValidity validate(const Profile& p) {
  ProfileValidity out;
  const double t0 = std::max(p.monotone_from(), p.r_start());
  const double span = std::isfinite(p.r_end()) ? p.r_end() - t0 : 64.0;

  // Dense uniform sweep for sign conditions.
  const int n_uniform = 400;
  for (int i = 1; i <= n_uniform; ++i) {
    const double y = t0 + span * i / n_uniform;
    const auto j = p.log_jet(y);
    if (!std::isfinite(j.log_value)) {
      out.positive = false;
      out.notes.push_back("non-finite log H at y=" + std::to_string(y));
      break;
    }
    const double convexity = j.dlog * j.dlog + j.d2log;  // H''/H
    if (!(j.dlog < 0.0) || !(convexity > 0.0)) {
      out.monotone_convex = false;
      out.notes.push_back("H' < 0 < H'' fails at y=" + std::to_string(y));
      break;
    }
  }

  // Geometric sweep for limits: |H'| should shrink and H'' stay bounded.
  std::vector<double> d1s;
  double max_d2 = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double y = t0 + span * (std::pow(2.0, k) - 1.0) / 4095.0;
    const auto b = eval(p, std::min(y, p.r_end()));
    d1s.push_back(std::abs(b.d1));
    max_d2 = std::max(max_d2, std::abs(b.d2));
    if (!std::isfinite(b.d2)) out.curvature_bounded = false;
  }
  if (!(d1s.back() < d1s.front() || d1s.back() < 1e-12)) {
    out.derivative_decays = false;
    out.notes.push_back("|H'| does not decrease along the geometric grid");
  }
  if (!std::isfinite(max_d2)) out.curvature_bounded = false;

  try {
    const double m = tail_mass(p, p.r_start());
    if (!std::isfinite(m)) out.integrable = false;
  } catch (const NotIntegrable& e) {
    out.integrable = false;
    out.notes.emplace_back(e.what());
  }
  return out;
}

}  // namespace peakspec
