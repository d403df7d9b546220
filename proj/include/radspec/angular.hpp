#ifndef RADSPEC_ANGULAR_HPP
#define RADSPEC_ANGULAR_HPP

//
// Sector decomposition of Sigma = E* V E for radial V. On the spherical
// harmonics of degree k, Sigma acts as the scalar
//   lambda_k = int_0^inf psi_k(s)^2 v(s) s^{d-1} ds,
// repeated dim H_k times.
//

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bessel.hpp"
#include "errors.hpp"
#include "radial_core.hpp"

namespace radspec {

/// Dimension of the degree-k spherical harmonics on S^{d-1}:
/// C(k+d-1, d-1) - C(k+d-3, d-1).
inline std::uint64_t dim_harmonics(Dimension d, int k) {
  detail::require(k >= 0, "harmonic degree must be >= 0");
  auto binom = [](long long n, long long r) -> unsigned __int128 {
    if (n < r || r < 0)
      return 0;
    unsigned __int128 c = 1;
    for (long long i = 1; i <= r; ++i) {
      c = c * static_cast<unsigned __int128>(n - r + i) / static_cast<unsigned __int128>(i);
      if (c > std::numeric_limits<std::uint64_t>::max())
        throw invalid_argument("dim_harmonics exceeds 64-bit range");
    }
    return c;
  };
  const long long dd = d.value();
  return static_cast<std::uint64_t>(binom(k + dd - 1, dd - 1) - binom(k + dd - 3, dd - 1));
}

struct SectorEigenvalue {
  int k;
  cplx lambda;
  std::uint64_t dim;
};

namespace detail {

// Samples of v on a rule whose panels are at most pi/2 wide, the scale on
// which psi_k oscillates.
struct SectorSamples {
  std::vector<double> r, w;
  std::vector<cplx> v;
};

inline SectorSamples sector_samples(const RadialProfile &v) {
  detail::require(v.support_radius() <= v.rule().r_max() * (1 + 1e-14),
                  "profile support exceeds its quadrature range");
  const double max_width = std::numbers::pi / 2;
  const auto &rule = v.rule();
  const auto b = rule.breakpoints();
  bool fine = true;
  for (std::size_t i = 1; i < b.size(); ++i)
    fine = fine && (b[i] - b[i - 1] <= max_width);
  SectorSamples s;
  if (fine) {
    s.r.assign(rule.nodes().begin(), rule.nodes().end());
    s.w.assign(rule.weights().begin(), rule.weights().end());
    s.v.assign(v.values().begin(), v.values().end());
  } else {
    const auto fr = rule.refined(max_width);
    const auto fv = v.resampled(fr);
    s.r.assign(fr.nodes().begin(), fr.nodes().end());
    s.w.assign(fr.weights().begin(), fr.weights().end());
    s.v.assign(fv.values().begin(), fv.values().end());
  }
  return s;
}

inline cplx sector_lambda(const SectorSamples &s, const SectorOrder &order) {
  cplx acc = 0.0;
  const int d = order.d.value();
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    if (s.v[i] == cplx(0.0))
      continue;
    const double psi = psi_k(order, s.r[i]);
    acc += s.w[i] * psi * psi * s.v[i] * std::pow(s.r[i], d - 1);
  }
  return acc;
}

} // namespace detail

/// lambda_k for one sector.
inline SectorEigenvalue sector_eigenvalue(const RadialProfile &v, const SectorOrder &order) {
  const auto s = detail::sector_samples(v);
  return {order.k, detail::sector_lambda(s, order), dim_harmonics(order.d, order.k)};
}

/// lambda_0 .. lambda_{k_max}.
inline std::vector<SectorEigenvalue> sector_eigenvalues(const RadialProfile &v, Dimension d,
                                                        int k_max) {
  detail::require(k_max >= 0, "k_max must be >= 0");
  const auto s = detail::sector_samples(v);
  std::vector<SectorEigenvalue> out;
  out.reserve(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const SectorOrder o(d, k);
    out.push_back({k, detail::sector_lambda(s, o), dim_harmonics(d, k)});
  }
  return out;
}

/// Upper bound for |lambda_k| from Hoelder on the support [0, R] and the
/// power-series majorant |J_nu(s)| <= (s/2)^nu / Gamma(nu+1):
///   |lambda_k| <= (2pi)^d ||v||_{L^q(s^{d-1}ds)} M_k^{1/q'},
///   M_k <= (2^{-nu}/Gamma(nu+1))^{2q'} R^{2nu q' + rho + 1} / (2nu q' + rho + 1),
///   rho = d - 1 - q'(d-2).
/// Returned as a logarithm.
inline double log_sector_bound(const SectorOrder &order, double q, double vq_radial, double R) {
  const double d = order.d.value();
  const double nu = order.nu();
  const double logc = d * std::log(2.0 * std::numbers::pi) + std::log(vq_radial);
  const double logj = -nu * std::log(2.0) - std::lgamma(nu + 1.0);
  if (q == 1.0) // sup_{s<=R} J_nu(s)^2 s^{-(d-2)}
    return logc + 2.0 * logj + (2.0 * nu - (d - 2.0)) * std::log(R);
  const double qp = q / (q - 1.0);
  const double rho = d - 1.0 - qp * (d - 2.0);
  const double e = 2.0 * nu * qp + rho + 1.0;
  detail::require(e > 0.0, "sector bound needs 2 nu q' + rho + 1 > 0");
  const double logm = 2.0 * qp * logj + e * std::log(R) - std::log(e);
  return logc + logm / qp;
}

struct SchattenEstimate {
  double norm = 0.0;
  double tail_bound = 0.0;
  int k_max_used = 0;
};

struct TailControl {
  double rel_tol = 1e-6; // extend k_max until tail_bound < rel_tol * norm
  int cap = 2048;
  bool extend = true;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity())
    return b;
  if (b == -std::numeric_limits<double>::infinity())
    return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// log of sum_{k > k_max} dim H_k |lambda_k|^p using log_sector_bound.
inline double log_sigma_tail(Dimension d, int k_max, double p, double q, double vq_radial,
                             double R) {
  double acc = -std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (int k = k_max + 1; k < k_max + 1000000; ++k) {
    const SectorOrder o(d, k);
    const double t = std::log(static_cast<double>(dim_harmonics(d, k))) +
                     p * log_sector_bound(o, q, vq_radial, R);
    acc = log_add(acc, t);
    if (t < prev && t < acc + std::log(1e-20))
      return acc;
    prev = t;
  }
  throw accuracy_error("sector tail series did not settle");
}

} // namespace detail

/// ||Sigma||_{S^p} from sectors k <= k_max plus a certified tail bound. With
/// ctl.extend, k_max doubles until tail_bound < ctl.rel_tol * norm or the cap
/// is reached (accuracy_error).
inline SchattenEstimate sigma_schatten(const RadialProfile &v, const ExponentConfig &cfg,
                                       int k_max, TailControl ctl = {}) {
  detail::require(k_max >= 1, "k_max must be >= 1");
  const double p = cfg.p;
  if (!(p > cfg.critical_p()) || !(cfg.q < cfg.d.value()))
    throw invalid_argument("sector series not summable for these exponents");
  if (v.is_zero())
    return {0.0, 0.0, k_max};
  const Dimension d = cfg.d;
  const auto s = detail::sector_samples(v);
  double R = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    if (s.v[i] != cplx(0.0))
      R = std::max(R, s.r[i]);
  R = std::max(R, std::min(v.support_radius(), v.rule().r_max()));
  const double vq = lq_norm(v, cfg.q, d) / std::pow(sphere_area(d), 1.0 / cfg.q);

  std::vector<double> logs; // log(dim) + p log|lambda_k|
  int k = 0;
  for (;;) {
    for (; k <= k_max; ++k) {
      const double a = std::abs(detail::sector_lambda(s, SectorOrder(d, k)));
      logs.push_back(a == 0.0 ? -std::numeric_limits<double>::infinity()
                              : std::log(static_cast<double>(dim_harmonics(d, k))) +
                                    p * std::log(a));
    }
    double lsum = -std::numeric_limits<double>::infinity();
    for (double l : logs)
      lsum = detail::log_add(lsum, l);
    const double ltail = detail::log_sigma_tail(d, k_max, p, cfg.q, vq, R);
    const double norm = std::exp(lsum / p);
    const double tail = norm * std::expm1(std::log1p(std::exp(ltail - lsum)) / p);
    const double tail_bound = std::isfinite(tail) ? tail : std::numeric_limits<double>::infinity();
    if (!ctl.extend || tail_bound < ctl.rel_tol * norm)
      return {norm, tail_bound, k_max};
    if (k_max >= ctl.cap)
      throw accuracy_error("sector tail bound above tolerance at the k_max cap");
    k_max = std::min(2 * k_max, ctl.cap);
  }
}

/// ||Sigma||_{S^p} / ||V||_{L^q}.
inline double theorem3_ratio(const RadialProfile &v, const ExponentConfig &cfg, int k_max,
                             TailControl ctl = {}) {
  if (v.is_zero())
    throw invalid_argument("theorem3_ratio needs a nonzero profile");
  return sigma_schatten(v, cfg, k_max, ctl).norm / lq_norm(v, cfg.q, cfg.d);
}

/// CSV rows "k,dim,re,im".
inline std::string sector_eigenvalues_csv(const std::vector<SectorEigenvalue> &ev) {
  std::string out = "k,dim,re,im\n";
  char buf[128];
  for (const auto &e : ev) {
    std::snprintf(buf, sizeof buf, "%d,%llu,%.17g,%.17g\n", e.k,
                  static_cast<unsigned long long>(e.dim), e.lambda.real(), e.lambda.imag());
    out += buf;
  }
  return out;
}

} // namespace radspec

#endif // RADSPEC_ANGULAR_HPP
