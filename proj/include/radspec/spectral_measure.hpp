#ifndef RADSPEC_SPECTRAL_MEASURE_HPP
#define RADSPEC_SPECTRAL_MEASURE_HPP

//
// W1 (dE(lambda)/dlambda) W2 for radial weights. With the e^{ix.xi}
// convention the density is (2pi)^{-d} lambda^{d-1} E(lambda) E(lambda)^*, so
// on sector k it is the rank-one kernel
//   c_d lambda^{d-1} w1(r) psi_k(lambda r) psi_k(lambda r') w2(r').
// General lambda is reduced to lambda = 1 by the dilation
//   s_k(lambda; w1, w2) = lambda^{-1} s_k(1; w1(./lambda), w2(./lambda)).
//

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "angular.hpp"
#include "bessel.hpp"
#include "radial_core.hpp"
#include "schatten.hpp"

namespace radspec {

/// c_d = (2 pi)^{-d}.
inline double spectral_cd(Dimension d) { return std::pow(2.0 * std::numbers::pi, -d.value()); }

namespace detail {

// ||w psi_k||^2_{L^2(r^{d-1}dr)} at frequency 1.
inline double weighted_psi_norm2(const SectorSamples &s, const SectorOrder &o) {
  return std::abs(sector_lambda(s, o));
}

inline SectorSamples abs2_samples(const RadialProfile &w) {
  auto s = sector_samples(w);
  for (auto &x : s.v)
    x = std::norm(x);
  return s;
}

inline double support_extent(const SectorSamples &s) {
  double R = 0.0;
  for (std::size_t i = 0; i < s.r.size(); ++i)
    if (s.v[i] != cplx(0.0))
      R = std::max(R, s.r[i]);
  return R;
}

} // namespace detail

/// The nonzero singular value of the sector-k block of W1 dE(lambda) W2.
inline double sector_singular_value(const RadialProfile &w1, const RadialProfile &w2,
                                    const SectorOrder &order, double lambda) {
  detail::require(lambda > 0.0 && std::isfinite(lambda), "spectral parameter must be positive");
  const auto a = detail::abs2_samples(dilate(w1, lambda));
  const auto b = detail::abs2_samples(dilate(w2, lambda));
  return spectral_cd(order.d) / lambda *
         std::sqrt(detail::weighted_psi_norm2(a, order) * detail::weighted_psi_norm2(b, order));
}

/// Dense Nystrom matrix of the sector-k block at frequency lambda, on the
/// common rule of w1 and w2 (used to check the rank-one structure).
inline Matrix spectral_sector_matrix(const RadialProfile &w1, const RadialProfile &w2,
                                     const SectorOrder &order, double lambda) {
  detail::require(w1.rule() == w2.rule(), "weights must share a quadrature rule");
  detail::require(lambda > 0.0, "spectral parameter must be positive");
  const auto &rule = w1.rule();
  const int n = static_cast<int>(rule.size());
  const int d = order.d.value();
  const double c = spectral_cd(order.d) * std::pow(lambda, d - 1);
  Eigen::VectorXcd a(n), b(n);
  for (int i = 0; i < n; ++i) {
    const double r = rule.node(i);
    const double m = std::sqrt(rule.weight(i) * std::pow(r, d - 1)) * psi_k(order, lambda * r);
    a[i] = m * w1.value(i);
    b[i] = m * w2.value(i);
  }
  return c * a * b.transpose();
}

/// ||W1 dE(lambda) W2||_{S^p} from sectors k <= k_max plus a tail bound.
/// The tail uses |J_nu(s)| <= (s/2)^nu / Gamma(nu+1) on the supports.
inline SchattenEstimate sandwich_schatten(const RadialProfile &w1, const RadialProfile &w2,
                                          Dimension d, double p, double lambda, int k_max,
                                          TailControl ctl = {}) {
  detail::require(p >= 1.0, "Schatten exponent must be >= 1");
  detail::require(k_max >= 1, "k_max must be >= 1");
  detail::require(lambda > 0.0 && std::isfinite(lambda), "spectral parameter must be positive");
  const auto a = detail::abs2_samples(dilate(w1, lambda));
  const auto b = detail::abs2_samples(dilate(w2, lambda));
  const double Ra = detail::support_extent(a), Rb = detail::support_extent(b);
  if (Ra == 0.0 || Rb == 0.0)
    return {0.0, 0.0, k_max};
  const double cd = spectral_cd(d) / lambda;
  // L^1(s^{d-1} ds) norms of |w|^2
  auto l1 = [](const detail::SectorSamples &s, int dd) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.r.size(); ++i)
      acc += s.w[i] * s.v[i].real() * std::pow(s.r[i], dd - 1);
    return acc;
  };
  const double na = l1(a, d), nb = l1(b, d);
  const double ninf = -std::numeric_limits<double>::infinity();

  std::vector<double> logs;
  int k = 0;
  for (;;) {
    for (; k <= k_max; ++k) {
      const SectorOrder o(d, k);
      const double s = cd * std::sqrt(detail::weighted_psi_norm2(a, o) *
                                      detail::weighted_psi_norm2(b, o));
      logs.push_back(s == 0.0 ? ninf
                              : std::log(static_cast<double>(dim_harmonics(d, k))) + p * std::log(s));
    }
    double lsum = ninf;
    for (double l : logs)
      lsum = detail::log_add(lsum, l);
    double ltail = ninf, prev = std::numeric_limits<double>::infinity();
    for (int j = k_max + 1;; ++j) {
      const SectorOrder o(d, j);
      const double ls = std::log(cd) + 0.5 * (log_sector_bound(o, 1.0, na, Ra) +
                                              log_sector_bound(o, 1.0, nb, Rb));
      const double t = std::log(static_cast<double>(dim_harmonics(d, j))) + p * ls;
      ltail = detail::log_add(ltail, t);
      if (t < prev && t < ltail + std::log(1e-20))
        break;
      if (j > k_max + 1000000)
        throw accuracy_error("sector tail series did not settle");
      prev = t;
    }
    const double norm = std::exp(lsum / p);
    const double tail = norm * std::expm1(std::log1p(std::exp(ltail - lsum)) / p);
    const double tail_bound = std::isfinite(tail) ? tail : std::numeric_limits<double>::infinity();
    if (!ctl.extend || tail_bound < ctl.rel_tol * norm || lsum == ninf)
      return {norm, tail_bound, k_max};
    if (k_max >= ctl.cap)
      throw accuracy_error("sector tail bound above tolerance at the k_max cap");
    k_max = std::min(2 * k_max, ctl.cap);
  }
}

struct CertificateRow {
  double lambda;
  double norm;
  double tail_bound;
  int k_max_used;
  double ratio;       // norm / (lambda^{d/q-1} ||W1||_{2q} ||W2||_{2q})
  double ratio_alt;   // same with lambda^{d/q-2}
};

struct Theorem3Certificate {
  double q, p;
  int d;
  bool covariant;         // weights at lambda were w(lambda .)
  std::vector<CertificateRow> rows;
  double variation;       // max/min - 1 of ratio
  double tolerance;
  bool flagged;           // covariant family with variation above tolerance
};

/// Ratios of ||W1 dE(lambda) W2||_p against lambda^{d/q-1}||W1||_{2q}||W2||_{2q}
/// over a grid. With covariant = true the weights at lambda are w(lambda .),
/// for which the ratio is exactly constant.
inline Theorem3Certificate theorem3_certificate(const RadialProfile &w1, const RadialProfile &w2,
                                                const ExponentConfig &cfg,
                                                const std::vector<double> &lambda_grid, int k_max,
                                                bool covariant = false, double tolerance = 1e-7,
                                                TailControl ctl = {}) {
  detail::require(!lambda_grid.empty(), "lambda grid must not be empty");
  Theorem3Certificate c{cfg.q, cfg.p, cfg.d.value(), covariant, {}, 0.0, tolerance, false};
  const double dq = cfg.d.value() / cfg.q;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double lam : lambda_grid) {
    detail::require(lam > 0.0, "lambda grid must be positive");
    const auto a = covariant ? dilate(w1, 1.0 / lam) : w1;
    const auto b = covariant ? dilate(w2, 1.0 / lam) : w2;
    const auto est = sandwich_schatten(a, b, cfg.d, cfg.p, lam, k_max, ctl);
    const double wn = lq_norm(a, 2.0 * cfg.q, cfg.d) * lq_norm(b, 2.0 * cfg.q, cfg.d);
    detail::require(wn > 0.0, "weights must be nonzero");
    const CertificateRow row{lam, est.norm, est.tail_bound, est.k_max_used,
                             est.norm / (std::pow(lam, dq - 1.0) * wn),
                             est.norm / (std::pow(lam, dq - 2.0) * wn)};
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
    c.rows.push_back(row);
  }
  c.variation = hi / lo - 1.0;
  c.flagged = covariant && c.variation > tolerance;
  return c;
}

} // namespace radspec

#endif // RADSPEC_SPECTRAL_MEASURE_HPP
