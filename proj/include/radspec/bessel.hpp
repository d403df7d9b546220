#ifndef RADSPEC_BESSEL_HPP
#define RADSPEC_BESSEL_HPP

//
// Bessel and Hankel functions.
//
// Real-argument J_nu(x) is delegated to Boost.Math. Complex arguments in the
// closed upper half-plane use:
//   * H^(1) for the two lowest orders from a closed form (half-integer
//     orders), a Laplace-type integral (|z| >= 2) or the ascending series
//     (|z| < 2), then forward recurrence in the order;
//   * J from a backward recurrence started by the continued fraction for
//     J_{nu+1}/J_nu and normalised through the cross product
//     J_{nu+1} H_nu - J_nu H_{nu+1} = 2i / (pi z).
// Sequences carry an explicit logarithmic scale so that orders of several
// hundred at small arguments neither overflow nor underflow.
//

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "errors.hpp"
#include "radial_core.hpp"

namespace radspec {

/// Angular sector k in dimension d; Bessel order nu = (d + 2k - 2) / 2.
struct SectorOrder {
  Dimension d;
  int k;

  SectorOrder(Dimension d_, int k_) : d(d_), k(k_) {
    detail::require(k >= 0, "sector index must be >= 0");
  }
  double nu() const noexcept { return 0.5 * (d.value() + 2 * k - 2); }
};

/// J_nu(x) for real nu >= 0, x >= 0.
inline double bessel_j(double nu, double x) {
  detail::require(nu >= 0.0, "bessel_j: negative order");
  detail::require(x >= 0.0, "bessel_j: negative argument");
  if (x == 0.0)
    return nu == 0.0 ? 1.0 : 0.0;
  try {
    return boost::math::cyl_bessel_j(nu, x);
  } catch (const std::exception &e) {
    throw accuracy_error(std::string("bessel_j(") + std::to_string(nu) + ", " +
                         std::to_string(x) + "): " + e.what());
  }
}

/// Value m * exp(log_scale); keeps Bessel sequences representable.
struct ScaledValue {
  cplx m{0.0};
  double log_scale = 0.0;

  // m * exp(log_scale + extra)
  cplx value(double extra = 0.0) const {
    if (m == cplx(0.0))
      return 0.0;
    const double e = log_scale + extra;
    const double l = std::log(std::abs(m)) + e;
    if (l < -745.0)
      return 0.0;
    if (l > 709.0)
      throw accuracy_error("Bessel value overflows double range");
    return m * std::exp(e);
  }
  double log_abs() const {
    return m == cplx(0.0) ? -std::numeric_limits<double>::infinity()
                          : std::log(std::abs(m)) + log_scale;
  }
};

inline ScaledValue operator*(const ScaledValue &a, const ScaledValue &b) {
  return {a.m * b.m, a.log_scale + b.log_scale};
}

namespace detail {

inline constexpr double kRescale = 1e200;
inline const double kLogRescale = std::log(kRescale);

inline ScaledValue scaled_sub(const ScaledValue &a, const ScaledValue &b) {
  const double e = std::max(a.log_scale, b.log_scale);
  return {a.m * std::exp(a.log_scale - e) - b.m * std::exp(b.log_scale - e), e};
}

// Fractional part of the order; only integer and half-integer orders occur for
// integer dimensions and are supported by the complex-argument routines.
inline double base_order(double nu) {
  const double f = nu - std::floor(nu);
  if (f == 0.0 || f == 0.5)
    return f;
  throw accuracy_error("complex-argument Bessel routines support integer and half-integer "
                       "orders only, got nu = " +
                       std::to_string(nu));
}

// H^(1)_n(z) e^{-iz}, n in {0, 1}, by the Laplace-type integral
//   H_n(z) = sqrt(2/(pi z)) e^{i(z - n pi/2 - pi/4)} / Gamma(n+1/2)
//            * 2 int_0^inf t^{2n} e^{-t^2} (1 + i t^2 / (2z))^{n-1/2} dt.
inline cplx hankel1_integral_scaled(int n, cplx z) {
  const auto &g = gauss_legendre(16);
  const double h = 0.25, tmax = 7.0;
  const int panels = static_cast<int>(tmax / h);
  const cplx a = cplx(0.0, 1.0) / (2.0 * z);
  cplx acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int i = 0; i < 16; ++i) {
      const double t = mid + 0.5 * h * g.x[i];
      const double t2 = t * t;
      acc += g.w[i] * std::pow(t2, n) * std::exp(-t2) * std::pow(1.0 + a * t2, n - 0.5);
    }
  }
  acc *= 0.5 * h * 2.0;
  const double pi = std::numbers::pi;
  const cplx pre = std::sqrt(2.0 / (pi * z)) *
                   std::exp(cplx(0.0, -(n * pi / 2.0 + pi / 4.0))) / std::tgamma(n + 0.5);
  return pre * acc;
}

// H^(1)_0 and H^(1)_1 for |z| < 2 from the ascending series of J and Y.
inline void hankel01_series(cplx z, cplx &h0, cplx &h1) {
  const double pi = std::numbers::pi;
  const double euler = std::numbers::egamma;
  const cplx q = -0.25 * z * z; // (-z^2/4)
  // J0, J1 and the Y series parts.
  cplx j0 = 0.0, j1 = 0.0, s0 = 0.0, s1 = 0.0;
  cplx t0 = 1.0;       // q^k / (k!)^2
  cplx t1 = 0.5 * z;   // (z/2) q^k / (k!(k+1)!)
  double hk = 0.0;     // harmonic number H_k
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      t0 *= q / (double(k) * k);
      t1 *= q / (double(k) * (k + 1));
      hk += 1.0 / k;
    }
    j0 += t0;
    j1 += t1;
    // psi(k+1) = H_k - gamma, psi(k+2) = H_{k+1} - gamma
    s0 += -hk * t0; // sum (-1)^{k+1} H_k (z^2/4)^k/(k!)^2 = -H_k q^k/(k!)^2
    s1 += (2.0 * hk + 1.0 / (k + 1) - 2.0 * euler) * t1;
    if (std::abs(t0) < 1e-18 && std::abs(t1) < 1e-18 && k > 2)
      break;
  }
  const cplx lg = std::log(0.5 * z);
  const cplx y0 = (2.0 / pi) * ((lg + euler) * j0 + s0);
  const cplx y1 = -2.0 / (pi * z) + (2.0 / pi) * lg * j1 - (1.0 / pi) * s1;
  const cplx ph = std::exp(cplx(0.0, -1.0) * z);
  h0 = (j0 + cplx(0.0, 1.0) * y0) * ph;
  h1 = (j1 + cplx(0.0, 1.0) * y1) * ph;
}

} // namespace detail

/// H^(1)_{nu0+n}(z) e^{-iz} for n = 0..count-1, Im z >= 0, z != 0.
inline std::vector<ScaledValue> hankel1_sequence_scaled(double nu0, int count, cplx z) {
  detail::require(count >= 1, "sequence length must be positive");
  detail::require(z != cplx(0.0), "Hankel function at z = 0");
  detail::require(z.imag() >= 0.0, "Hankel sequence needs Im z >= 0");
  detail::require(nu0 >= 0.0, "negative order");
  const double base = detail::base_order(nu0);
  const int offset = static_cast<int>(std::lround(nu0 - base));
  const double pi = std::numbers::pi;

  cplx h_lo, h_hi; // orders base and base + 1
  if (base == 0.5) {
    const cplx c = std::sqrt(2.0 / (pi * z));
    const cplx hm = c;                     // H_{-1/2} e^{-iz}
    h_lo = cplx(0.0, -1.0) * c;            // H_{1/2} e^{-iz}
    h_hi = (0.5 * 2.0 / z) * h_lo - hm;    // H_{3/2}
  } else if (std::abs(z) >= 2.0) {
    h_lo = detail::hankel1_integral_scaled(0, z);
    h_hi = detail::hankel1_integral_scaled(1, z);
  } else {
    detail::hankel01_series(z, h_lo, h_hi);
  }

  const int total = offset + count;
  std::vector<ScaledValue> all;
  all.reserve(total);
  double e = 0.0;
  cplx prev = h_lo, cur = h_hi;
  all.push_back({prev, 0.0});
  if (total > 1)
    all.push_back({cur, 0.0});
  for (int n = 2; n < total; ++n) {
    const double nu = base + n - 1;
    cplx next = (2.0 * nu / z) * cur - prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > detail::kRescale) {
      prev /= detail::kRescale;
      cur /= detail::kRescale;
      e += detail::kLogRescale;
    }
    if (!std::isfinite(cur.real()) || !std::isfinite(cur.imag()))
      throw accuracy_error("Hankel recurrence overflow");
    all.push_back({cur, e});
  }
  return {all.begin() + offset, all.end()};
}

struct BesselSequences {
  std::vector<ScaledValue> j; // J_{nu0+n}(z) e^{-Im z}
  std::vector<ScaledValue> h; // H^(1)_{nu0+n}(z) e^{-iz}
};

/// J and H^(1) for orders nu0..nu0+count-1 from one pass, Im z >= 0, z != 0.
inline BesselSequences bessel_sequences_scaled(double nu0, int count, cplx z) {
  detail::require(count >= 1, "sequence length must be positive");
  detail::require(z != cplx(0.0), "complex Bessel sequence at z = 0");
  detail::require(z.imag() >= 0.0, "Bessel sequence needs Im z >= 0");
  const int m = std::max(count, 2);
  auto hs = hankel1_sequence_scaled(nu0, m, z);
  const double nu_top = nu0 + m - 1;

  // Continued fraction for 1 / (J_{top+1}/J_top) = b1 - 1/(b2 - 1/(b3 - ...)).
  const double tiny = 1e-300;
  auto b = [&](int j) { return 2.0 * (nu_top + j) / z; };
  cplx f = b(1);
  if (f == cplx(0.0))
    f = tiny;
  cplx C = f, D = 0.0;
  bool converged = false;
  for (int j = 2; j < 400000; ++j) {
    D = b(j) - D;
    if (D == cplx(0.0))
      D = tiny;
    C = b(j) - 1.0 / C;
    if (C == cplx(0.0))
      C = tiny;
    D = 1.0 / D;
    const cplx delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw accuracy_error("Bessel continued fraction did not converge");

  // Backward recurrence from (J_top, J_{top+1}) = (1, 1/f) up to a scale.
  std::vector<ScaledValue> js(m);
  double e = 0.0;
  cplx upper = 1.0 / f, cur = 1.0;
  js[m - 1] = {cur, 0.0};
  for (int n = m - 1; n >= 1; --n) {
    const double nu = nu0 + n;
    const cplx lower = (2.0 * nu / z) * cur - upper;
    upper = cur;
    cur = lower;
    if (std::abs(cur) > detail::kRescale) {
      upper /= detail::kRescale;
      cur /= detail::kRescale;
      e += detail::kLogRescale;
    }
    js[n - 1] = {cur, e};
  }

  // Normalise with the cross product at the best-conditioned order.
  double best = std::numeric_limits<double>::infinity();
  ScaledValue num{};
  for (int n = 0; n + 1 < m; ++n) {
    const ScaledValue p1 = js[n + 1] * hs[n];
    const ScaledValue p2 = js[n] * hs[n + 1];
    const ScaledValue d = detail::scaled_sub(p1, p2);
    if (d.m == cplx(0.0))
      continue;
    const double c1 = p1.log_abs(), c2 = p2.log_abs(), cd = d.log_abs();
    const double cond = std::exp(std::max(c1, c2) - cd);
    if (cond < best) {
      best = cond;
      num = d;
    }
  }
  if (!(best < 1e6))
    throw accuracy_error("ill-conditioned Bessel normalisation");
  const double pi = std::numbers::pi;
  const cplx factor = (cplx(0.0, 2.0) / (pi * z)) * std::exp(cplx(0.0, -z.real())) / num.m;
  BesselSequences out;
  out.j.resize(count);
  for (int n = 0; n < count; ++n)
    out.j[n] = {js[n].m * factor, js[n].log_scale - num.log_scale};
  hs.resize(count);
  out.h = std::move(hs);
  return out;
}

/// J_{nu0+n}(z) e^{-|Im z|} for n = 0..count-1, Im z >= 0, z != 0.
inline std::vector<ScaledValue> bessel_j_sequence_scaled(double nu0, int count, cplx z) {
  return bessel_sequences_scaled(nu0, count, z).j;
}

/// H^(1)_nu(z) on the closed upper half-plane.
inline cplx hankel1(double nu, cplx z) {
  detail::require(nu >= 0.0, "hankel1: negative order");
  detail::require(z != cplx(0.0), "hankel1: z = 0");
  detail::require(z.imag() >= 0.0, "hankel1: Im z must be >= 0");
  const double base = detail::base_order(nu);
  const auto s = hankel1_sequence_scaled(base, static_cast<int>(std::lround(nu - base)) + 1, z);
  return s.back().value(-z.imag()) * std::exp(cplx(0.0, z.real()));
}

/// J_nu(z) for complex z (integer or half-integer nu).
inline cplx bessel_j(double nu, cplx z) {
  detail::require(nu >= 0.0, "bessel_j: negative order");
  if (z == cplx(0.0))
    return nu == 0.0 ? 1.0 : 0.0;
  if (z.imag() < 0.0)
    return std::conj(bessel_j(nu, std::conj(z)));
  const double base = detail::base_order(nu);
  const auto s = bessel_j_sequence_scaled(base, static_cast<int>(std::lround(nu - base)) + 1, z);
  return s.back().value(z.imag());
}

/// Radial factor of the extension operator on sector k (e^{ix.xi} convention):
///   psi_k(r) = (2 pi)^{d/2} r^{-(d-2)/2} J_nu(r).
inline double psi_k(const SectorOrder &order, double r) {
  detail::require(r > 0.0, "psi_k requires r > 0");
  const double d = order.d.value();
  return std::pow(2.0 * std::numbers::pi, d / 2.0) * std::pow(r, -(d - 2.0) / 2.0) *
         bessel_j(order.nu(), r);
}

// ---------------------------------------------------------------------------
// Bessel moment integral and its envelope
// ---------------------------------------------------------------------------

/// Exponents of int_1^inf |J_mu(2 pi s)|^{2p} s^rho ds. The integral itself
/// is defined for any mu >= 0; the envelope needs the lemma hypotheses.
struct BesselLemmaParams {
  double mu;
  double p;
  double rho;

  bool hypotheses_hold() const {
    return mu > 0.5 && p > rho + 1.0 && 2.0 * p / 3.0 > rho + 1.0 / 3.0;
  }
};

struct BesselMoment {
  double integral;   // over [1, s_max]
  double tail_bound; // certified bound on the rest
  double upper() const { return integral + tail_bound; }
};

/// int_1^{s_max} |J_mu(2 pi s)|^{2p} s^rho ds plus a bound on the tail.
///
/// The tail uses the uniform estimate
///   J_mu(x)^2 <= 4 (4x^2 - (2mu+1)(2mu+5)) / (pi ((4x^2 - m)^{3/2} - m)),
///   m = (2mu+1)(2mu+3),
/// which for x >= sqrt(m) gives |J_mu(x)|^2 <= C (2 / (pi x)),
/// C = 2 / (sqrt(3) (1 - 1/(3^{3/2} sqrt(m)))). If 2 pi s_max < sqrt(m) the
/// stretch up to the validity point is integrated and counted in the tail.
inline BesselMoment bessel_moment_integral(const BesselLemmaParams &par, double s_max) {
  detail::require(par.mu >= 0.0, "bessel_moment_integral needs mu >= 0");
  detail::require(s_max >= 2.0, "bessel_moment_integral needs s_max >= 2");
  if (par.p - par.rho <= 1.0)
    throw divergence_error("moment integral tail diverges: need p - rho > 1");
  const double pi = std::numbers::pi;
  auto integrand = [&](double s) {
    const double j = std::abs(bessel_j(par.mu, 2.0 * pi * s));
    return j == 0.0 ? 0.0 : std::pow(j, 2.0 * par.p) * std::pow(s, par.rho);
  };
  auto piece = [&](double a, double b) {
    if (b <= a)
      return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.125)));
    return integrate_panels(integrand, a, b, panels, 20);
  };
  const double m = (2.0 * par.mu + 1.0) * (2.0 * par.mu + 3.0);
  const double s_valid = std::sqrt(m) / (2.0 * pi);
  const double s_tail = std::max(s_max, s_valid);
  const double eta = 1.0 / (std::pow(3.0, 1.5) * std::sqrt(m));
  const double c = 2.0 / (std::sqrt(3.0) * (1.0 - eta));
  const double ex = par.rho - par.p + 1.0;
  const double analytic = std::pow(c / (pi * pi), par.p) * std::pow(s_tail, ex) / (-ex);
  return {piece(1.0, s_max), piece(s_max, s_tail) + analytic};
}

/// max{mu^{-p+rho+1}, mu^{-2p/3+rho+1/3}}. At p = 2 the estimate carries an
/// extra log(mu) factor, see lemma_envelope_with_log.
inline double lemma_envelope(const BesselLemmaParams &par) {
  if (!par.hypotheses_hold())
    throw invalid_argument("lemma hypotheses violated: need mu > 1/2, p > rho + 1, "
                           "2p/3 > rho + 1/3");
  return std::max(std::pow(par.mu, -par.p + par.rho + 1.0),
                  std::pow(par.mu, -2.0 * par.p / 3.0 + par.rho + 1.0 / 3.0));
}

inline double lemma_envelope_with_log(const BesselLemmaParams &par) {
  const double e = lemma_envelope(par);
  return par.p == 2.0 ? e * std::max(1.0, std::log(par.mu)) : e;
}

} // namespace radspec

#endif // RADSPEC_BESSEL_HPP
