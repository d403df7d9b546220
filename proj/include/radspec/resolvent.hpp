#ifndef RADSPEC_RESOLVENT_HPP
#define RADSPEC_RESOLVENT_HPP

//
// W1 R0(z) W2 for radial weights, R0(z) = (-Delta - z)^{-1}.
//
// On sector k the resolvent kernel (w.r.t. r'^{d-1} dr') is
//   G_k(r, r'; z) = (i pi / 2) (r r')^{-(d-2)/2} J_nu(kappa r_<) H^(1)_nu(kappa r_>),
// kappa = sqrt(z) with Im kappa > 0. The same kernel is also available from the
// spectral representation
//   int_0^inf m(lambda) / (lambda^2 - z) c_d lambda^{d-1} psi_k(lambda r) psi_k(lambda r') dlambda
// with an optional smooth low/high frequency split.
//
// Sector matrices use a locally corrected Nystrom rule: on the panel that
// contains r_m the integral is split at r_m and the smooth factor is
// interpolated, so the kink of G_k on the diagonal does not limit accuracy.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "angular.hpp"
#include "bessel.hpp"
#include "errors.hpp"
#include "radial_core.hpp"
#include "schatten.hpp"
#include "spectral_measure.hpp"

namespace radspec {

/// dist(z, [0, inf)).
inline double delta_dist(cplx z) { return z.real() >= 0.0 ? std::abs(z.imag()) : std::abs(z); }

/// z off the spectrum [0, inf) with kappa = sqrt(z), Im kappa > 0.
class SpectralPoint {
public:
  explicit SpectralPoint(cplx z) : z_(z) {
    detail::require(std::isfinite(z.real()) && std::isfinite(z.imag()), "z must be finite");
    detail::require(!(z.imag() == 0.0 && z.real() >= 0.0), "z must lie off [0, inf)");
    kappa_ = std::sqrt(z);
    if (kappa_.imag() < 0.0)
      kappa_ = -kappa_;
    if (kappa_.imag() == 0.0) // z real negative with a signed-zero imaginary part
      kappa_ = cplx(0.0, std::sqrt(-z.real()));
  }
  cplx z() const noexcept { return z_; }
  cplx kappa() const noexcept { return kappa_; }
  double delta() const noexcept { return delta_dist(z_); }

private:
  cplx z_;
  cplx kappa_;
};

/// Radial cutoff chi(xi) = eta(|xi|): 1 on [0, inner], 0 beyond outer,
///   eta(t) = h((b-t)/(b-a)) / (h((b-t)/(b-a)) + h((t-a)/(b-a))), h(s) = e^{-1/s}.
struct CutoffSpec {
  double inner = 2.0;
  double outer = 4.0;

  double operator()(double t) const {
    if (t <= inner)
      return 1.0;
    if (t >= outer)
      return 0.0;
    auto h = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    const double w = outer - inner;
    const double a = h((outer - t) / w), b = h((t - inner) / w);
    return a / (a + b);
  }
};

enum class KernelPart { full, low, high };

namespace detail {

// exp(log_scale) * m with a unimodular phase factor, for products of scaled
// Bessel values.
inline cplx scaled_product(const ScaledValue &a, const ScaledValue &b, double extra_log,
                           double phase) {
  const double aa = std::abs(a.m), ab = std::abs(b.m);
  if (aa == 0.0 || ab == 0.0)
    return 0.0;
  const double l = a.log_scale + b.log_scale + extra_log + std::log(aa) + std::log(ab);
  if (l < -745.0)
    return 0.0;
  if (l > 709.0)
    throw accuracy_error("Green kernel value overflows double range");
  return (a.m / aa) * (b.m / ab) * std::exp(l) * std::polar(1.0, phase);
}

// J and H sequences at kappa r for the orders of sectors 0..k_max.
struct RadialBessel {
  double nu0;
  std::vector<ScaledValue> j, h;
};

inline RadialBessel radial_bessel(Dimension d, int k_max, cplx kappa, double r) {
  const double nu0 = 0.5 * (d.value() - 2);
  auto s = bessel_sequences_scaled(nu0, k_max + 1, kappa * r);
  return {nu0, std::move(s.j), std::move(s.h)};
}

// G_k(r, r') from precomputed sequences; a at r_<, b at r_>.
inline cplx green_from(const RadialBessel &lo, const RadialBessel &hi, int k, double rlo,
                       double rhi, cplx kappa, int d) {
  const double extra = kappa.imag() * (rlo - rhi) - 0.5 * (d - 2) * std::log(rlo * rhi);
  return cplx(0.0, 0.5 * std::numbers::pi) *
         scaled_product(lo.j[k], hi.h[k], extra, kappa.real() * rhi);
}

} // namespace detail

/// G_k(r, r'; z).
inline cplx green_kernel(const SectorOrder &order, const SpectralPoint &zp, double r, double rp) {
  detail::require(r > 0.0 && rp > 0.0, "green_kernel needs r, r' > 0");
  const double lo = std::min(r, rp), hi = std::max(r, rp);
  const cplx kappa = zp.kappa();
  const auto a = detail::radial_bessel(order.d, order.k, kappa, lo);
  const auto b = detail::radial_bessel(order.d, order.k, kappa, hi);
  return detail::green_from(a, b, order.k, lo, hi, kappa, order.d.value());
}

// ---------------------------------------------------------------------------
// Spectral representation of the kernel
// ---------------------------------------------------------------------------

namespace detail {

// Coefficients a_m(nu) of the Hankel expansion
//   H^(1/2)_nu(x) ~ sqrt(2/(pi x)) e^{+-i(x - nu pi/2 - pi/4)} sum (+-i)^m a_m / x^m.
inline std::vector<double> hankel_coefficients(double nu, double xmin) {
  std::vector<double> a{1.0};
  const double mu = 4.0 * nu * nu;
  for (int m = 1; m < 60; ++m) {
    const double t = a.back() * (mu - (2.0 * m - 1) * (2.0 * m - 1)) / (8.0 * m);
    if (t == 0.0)
      return a; // half-integer order: the expansion terminates
    if (std::abs(t) / std::pow(xmin, m) > std::abs(a.back()) / std::pow(xmin, m - 1) && m > 2)
      break;
    a.push_back(t);
    if (std::abs(t) / std::pow(xmin, m) < 1e-18)
      return a;
  }
  if (std::abs(a.back()) / std::pow(xmin, a.size() - 1) > 1e-15)
    throw accuracy_error("Hankel expansion not converged; raise the tail cutoff");
  return a;
}

inline cplx hankel_series(const std::vector<double> &a, cplx x, double sign) {
  cplx acc = 0.0, pw = 1.0;
  const cplx f = cplx(0.0, sign) / x;
  for (double c : a) {
    acc += c * pw;
    pw *= f;
  }
  return acc;
}

// Breakpoints on [0, L]: geometric grading around a peak at x0 down to
// width w0, then every panel split to width <= hmax.
inline std::vector<double> graded_breakpoints(double L, double x0, double w0, double hmax,
                                              std::vector<double> extra) {
  std::vector<double> e{0.0, L};
  if (x0 > 0.0 && x0 < L) {
    e.push_back(x0);
    for (double w = w0; w < L; w *= 2.0) {
      if (x0 - w > 0.0)
        e.push_back(x0 - w);
      if (x0 + w < L)
        e.push_back(x0 + w);
    }
  }
  for (double x : extra)
    if (x > 0.0 && x < L)
      e.push_back(x);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  std::vector<double> out{0.0};
  for (std::size_t i = 1; i < e.size(); ++i) {
    const double a = e[i - 1], b = e[i];
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
    for (int j = 1; j <= m; ++j)
      out.push_back(j == m ? b : a + (b - a) * j / m);
  }
  return out;
}

struct KernelParts {
  cplx full, low, high;
};

inline KernelParts spectral_kernel_parts(const SectorOrder &order, const SpectralPoint &zp,
                                         const std::optional<CutoffSpec> &cutoff, double r,
                                         double rp) {
  detail::require(r > 0.0 && rp > 0.0, "spectral kernel needs r, r' > 0");
  const cplx z = zp.z(), kappa = zp.kappa();
  const double nu = order.nu();
  const int d = order.d.value();
  const bool split = cutoff.has_value();
  if (split)
    detail::require(z.real() > 0.0, "low/high split needs Re z > 0");
  const double sre = split ? std::sqrt(z.real()) : 0.0;
  const double rmin = std::min(r, rp);

  double L = std::max({(40.0 + nu * nu) / rmin, 2.0 * std::abs(kappa), 1.0});
  if (split)
    L = std::max(L, cutoff->outer * sre * 1.0000001);

  // Peak of 1/(lambda^2 - z) near Re kappa with width Im kappa.
  const double peak = std::abs(kappa.real()), width = kappa.imag();
  const double hmax = std::min(1.0 / (r + rp), 0.5);
  if (peak > 0.0 && peak / width > 1e9)
    throw accuracy_error("resonance peak too narrow to resolve");
  std::vector<double> extra;
  if (split)
    extra = {cutoff->inner * sre, cutoff->outer * sre};
  const auto edges = graded_breakpoints(L, peak > 0.0 ? peak : -1.0, 0.25 * width, hmax, extra);
  if (edges.size() > 2000000)
    throw accuracy_error("spectral integral needs too many panels");

  const auto &g = gauss_legendre(16);
  const double pre = std::pow(r * rp, -0.5 * (d - 2));
  cplx full = 0.0, low = 0.0;
  for (std::size_t p = 1; p < edges.size(); ++p) {
    const double a = edges[p - 1], b = edges[p];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < 16; ++i) {
      const double lam = mid + half * g.x[i];
      const cplx f = g.w[i] * half * lam * bessel_j(nu, lam * r) * bessel_j(nu, lam * rp) /
                     (lam * lam - z);
      full += f;
      if (split)
        low += (*cutoff)(lam / sre) * f;
    }
  }

  // Tail [L, inf) from the Hankel expansion; each exponential e^{i w lambda}
  // is integrated along a ray rotated into the half-plane where it decays.
  const auto coef = hankel_coefficients(nu, L * rmin);
  const double phi = nu * std::numbers::pi / 2 + std::numbers::pi / 4;
  const cplx I(0.0, 1.0);
  struct Term {
    double omega;
    double sr, srp;  // signs of the expansions at r and r'
    cplx phase;
  };
  const Term terms[4] = {{r + rp, 1, 1, std::exp(-2.0 * I * phi)},
                         {r - rp, 1, -1, 1.0},
                         {rp - r, -1, 1, 1.0},
                         {-(r + rp), -1, -1, std::exp(2.0 * I * phi)}};
  cplx tail = 0.0;
  for (const auto &t : terms) {
    const double sigma = t.omega >= 0.0 ? 1.0 : -1.0;
    const double aw = std::abs(t.omega);
    const double c = (aw * L < 1.0) ? L : 1.0 / aw;
    cplx acc = 0.0;
    const int panels = 24;
    for (int p = 0; p < panels; ++p) {
      const double a = double(p) / panels, b = double(p + 1) / panels;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (int i = 0; i < 16; ++i) {
        const double s = mid + half * g.x[i];
        const double tt = c * s / (1.0 - s);
        const double jac = c / ((1.0 - s) * (1.0 - s));
        const cplx lam = L + sigma * I * tt;
        const cplx val = std::exp(I * t.omega * L - aw * tt) *
                         hankel_series(coef, lam * r, t.sr) * hankel_series(coef, lam * rp, t.srp) /
                         (lam * lam - z);
        acc += g.w[i] * half * jac * val;
      }
    }
    tail += t.phase * sigma * I * acc;
  }
  tail *= 1.0 / (2.0 * std::numbers::pi * std::sqrt(r * rp));

  KernelParts out;
  out.full = pre * (full + tail);
  out.low = pre * low;
  out.high = out.full - out.low;
  if (split)
    out.high = pre * ((full - low) + tail);
  return out;
}

} // namespace detail

/// Spectral-integral form of the sector kernel. part = low/high needs a
/// cutoff and Re z > 0; the multiplier is chi(lambda / sqrt(Re z)) resp.
/// 1 - chi.
inline cplx spectral_integral_kernel(const SectorOrder &order, const SpectralPoint &zp,
                                     const std::optional<CutoffSpec> &cutoff, KernelPart part,
                                     double r, double rp) {
  if (part != KernelPart::full)
    detail::require(cutoff.has_value(), "low/high parts need a cutoff");
  const bool split = cutoff.has_value() && (part != KernelPart::full || zp.z().real() > 0.0);
  const auto k = detail::spectral_kernel_parts(order, zp, split ? cutoff : std::nullopt, r, rp);
  switch (part) {
  case KernelPart::low:
    return k.low;
  case KernelPart::high:
    return k.high;
  default:
    return k.full;
  }
}

// ---------------------------------------------------------------------------
// Sector matrices
// ---------------------------------------------------------------------------

/// Matrix of one sector block together with its multiplicity dim H_k.
struct SectorOperator {
  Matrix m;
  int k;
  std::uint64_t mult;
};

namespace detail {

inline void require_same_rule(const RadialProfile &a, const RadialProfile &b) {
  detail::require(a.rule() == b.rule(), "weights must share a quadrature rule");
}

// Barycentric Lagrange basis of one panel evaluated at t.
inline void lagrange_basis(std::span<const double> x, double t, std::vector<double> &out) {
  const std::size_t n = x.size();
  out.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (t == x[j]) {
      out[j] = 1.0;
      return;
    }
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double wj = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j)
        wj /= (x[j] - x[k]);
    out[j] = wj / (t - x[j]);
    den += out[j];
  }
  for (auto &v : out)
    v /= den;
}

// Quadrature points and interpolation weights of the diagonal-panel
// corrections; independent of kappa.
struct CorrectionStencil {
  struct Point {
    std::size_t m;
    int side;
    double t, wt;
    std::vector<double> basis;
  };
  std::vector<Point> points;

  explicit CorrectionStencil(const QuadratureRule &rule) {
    const std::size_t n = rule.size();
    const int q = rule.nodes_per_panel();
    const int qs = std::max(q, 16);
    const auto &g = gauss_legendre(qs);
    points.reserve(n * 2 * qs);
    for (std::size_t m = 0; m < n; ++m) {
      const int p = static_cast<int>(m) / q;
      const double a = rule.breakpoints()[p], b = rule.breakpoints()[p + 1];
      const double rm = rule.node(m);
      const auto px = rule.nodes().subspan(p * q, q);
      for (int side = 0; side < 2; ++side) {
        const double lo = side == 0 ? a : rm, hi = side == 0 ? rm : b;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int i = 0; i < qs; ++i) {
          Point pt{m, side, mid + half * g.x[i], half * g.w[i], {}};
          lagrange_basis(px, pt.t, pt.basis);
          for (int j = 0; j < q; ++j)
            pt.basis[j] /= rule.weight(p * q + j);
          points.push_back(std::move(pt));
        }
      }
    }
  }
};

// Effective kernels Geff_k for k = 0..k_hi on the rule's nodes.
class GreenAssembler {
public:
  GreenAssembler(const QuadratureRule &rule, Dimension d, cplx kappa, int k_hi)
      : GreenAssembler(rule, CorrectionStencil(rule), d, kappa, k_hi) {}

  GreenAssembler(const QuadratureRule &rule, const CorrectionStencil &st, Dimension d, cplx kappa,
                 int k_hi)
      : rule_(rule), d_(d), kappa_(kappa), k_hi_(k_hi) {
    const std::size_t n = rule.size();
    nodes_.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      nodes_.push_back(radial_bessel(d, k_hi, kappa, rule.node(i)));
    const int q = rule.nodes_per_panel();
    corr_.assign(static_cast<std::size_t>(k_hi + 1), std::vector<cplx>(n * q, 0.0));
    for (const auto &pt : st.points) {
      const double rm = rule.node(pt.m);
      const auto bt = radial_bessel(d, k_hi, kappa, pt.t);
      for (int k = 0; k <= k_hi; ++k) {
        const cplx gk = pt.wt * (pt.side == 0 ? green_from(bt, nodes_[pt.m], k, pt.t, rm, kappa, d)
                                              : green_from(nodes_[pt.m], bt, k, rm, pt.t, kappa, d));
        cplx *row = corr_[k].data() + pt.m * q;
        for (int j = 0; j < q; ++j)
          row[j] += gk * pt.basis[j];
      }
    }
  }

  /// Geff_k(m, n).
  cplx operator()(int k, std::size_t m, std::size_t n) const {
    const int q = rule_.nodes_per_panel();
    if (m / q == n / q)
      return corr_[k][m * q + n % q];
    const double rm = rule_.node(m), rn = rule_.node(n);
    return rm < rn ? green_from(nodes_[m], nodes_[n], k, rm, rn, kappa_, d_.value())
                   : green_from(nodes_[n], nodes_[m], k, rn, rm, kappa_, d_.value());
  }

  int k_hi() const noexcept { return k_hi_; }

private:
  const QuadratureRule &rule_;
  Dimension d_;
  cplx kappa_;
  int k_hi_;
  std::vector<RadialBessel> nodes_;
  std::vector<std::vector<cplx>> corr_;
};

inline Matrix sandwich_from(const GreenAssembler &ga, int k, const RadialProfile &w1,
                            const RadialProfile &w2, int d) {
  const auto &rule = w1.rule();
  const Eigen::Index n = static_cast<Eigen::Index>(rule.size());
  Eigen::VectorXcd a(n), b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sqrt(rule.weight(i) * std::pow(rule.node(i), d - 1));
    a[i] = s * w1.value(i);
    b[i] = s * w2.value(i);
  }
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = (a[i] == cplx(0.0) || b[j] == cplx(0.0))
                    ? cplx(0.0)
                    : a[i] * ga(k, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * b[j];
  return m;
}

} // namespace detail

/// Sector-k matrix of W1 R0(z) W2 on L^2(r^{d-1} dr).
inline SectorOperator sector_sandwich(const RadialProfile &w1, const RadialProfile &w2,
                                      const SectorOrder &order, const SpectralPoint &zp) {
  detail::require_same_rule(w1, w2);
  detail::GreenAssembler ga(w1.rule(), order.d, zp.kappa(), order.k);
  return {detail::sandwich_from(ga, order.k, w1, w2, order.d.value()), order.k,
          dim_harmonics(order.d, order.k)};
}

/// Plain Nystrom matrix with the spectral-integral kernel (small grids only).
inline SectorOperator spectral_sector_sandwich(const RadialProfile &w1, const RadialProfile &w2,
                                               const SectorOrder &order, const SpectralPoint &zp,
                                               const std::optional<CutoffSpec> &cutoff,
                                               KernelPart part) {
  detail::require_same_rule(w1, w2);
  const auto &rule = w1.rule();
  const int d = order.d.value();
  const Eigen::Index n = static_cast<Eigen::Index>(rule.size());
  Matrix m = Matrix::Zero(n, n);
  std::vector<double> s(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s[i] = std::sqrt(rule.weight(i) * std::pow(rule.node(i), d - 1));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (w1.value(i) * w2.value(j) == cplx(0.0) && w1.value(j) * w2.value(i) == cplx(0.0))
        continue;
      const cplx g =
          spectral_integral_kernel(order, zp, cutoff, part, rule.node(i), rule.node(j));
      m(i, j) = s[i] * w1.value(i) * g * w2.value(j) * s[j];
      m(j, i) = s[j] * w1.value(j) * g * w2.value(i) * s[i];
    }
  return {m, order.k, dim_harmonics(order.d, order.k)};
}

// ---------------------------------------------------------------------------
// Schatten norms over sectors
// ---------------------------------------------------------------------------

struct ResolventOptions {
  double rel_tol = 1e-3;   // required tail_bound / norm
  int extra_sectors = 0;   // directly computed HS sectors beyond k_max (0: k_max)
};

struct ResolventEstimate {
  double norm = 0.0;
  double tail_bound = 0.0;
  int k_max_used = 0;
  int k_hs_used = 0;        // last sector whose HS norm was computed
  bool hs_model_checked = false; // HS_k * nu_k nonincreasing on the computed range
  SingularSpectrum spectrum;
};

/// ||W1 R0(z) W2||_{S^p} over sectors k <= k_max plus a tail bound.
///
/// Sectors k_max < k <= K contribute through their Hilbert-Schmidt norms
/// (||T||_p <= ||T||_HS for p >= 2, times rank^{1/p-1/2} otherwise). Beyond K
/// the HS norms are extrapolated as HS_k <= HS_K nu_K / nu_k, which is
/// checked against the computed range and is summable exactly when
/// p > d - 1.
inline ResolventEstimate resolvent_schatten(const RadialProfile &w1, const RadialProfile &w2,
                                            const ExponentConfig &cfg, const SpectralPoint &zp,
                                            int k_max, ResolventOptions opt = {}) {
  detail::require_same_rule(w1, w2);
  detail::require(k_max >= 0, "k_max must be >= 0");
  const Dimension d = cfg.d;
  const double p = cfg.p;
  ResolventEstimate out;
  out.k_max_used = k_max;
  if (w1.is_zero() || w2.is_zero()) {
    out.hs_model_checked = true;
    return out;
  }
  const int extra = opt.extra_sectors > 0 ? opt.extra_sectors : std::max(k_max, 8);
  const int K = k_max + extra;
  detail::GreenAssembler ga(w1.rule(), d, zp.kappa(), K);

  for (int k = 0; k <= k_max; ++k) {
    const auto spec = svd_singular_values(detail::sandwich_from(ga, k, w1, w2, d.value()));
    out.spectrum.merge(spec, dim_harmonics(d, k));
  }
  out.norm = schatten_norm(out.spectrum, p);

  const double n = static_cast<double>(w1.rule().size());
  const double rank_factor = p >= 2.0 ? 1.0 : std::pow(n, 1.0 / p - 0.5);
  double tail_p = 0.0;
  std::vector<double> hs(K + 1, 0.0);
  for (int k = k_max + 1; k <= K; ++k) {
    hs[k] = detail::sandwich_from(ga, k, w1, w2, d.value()).norm();
    tail_p += static_cast<double>(dim_harmonics(d, k)) * std::pow(rank_factor * hs[k], p);
  }
  out.k_hs_used = K;
  auto nu = [&](int k) { return SectorOrder(d, k).nu(); };
  bool ok = true;
  const int check_from = k_max + 1 + (K - k_max) / 2;
  for (int k = check_from + 1; k <= K; ++k)
    ok = ok && hs[k] * nu(k) <= hs[k - 1] * nu(k - 1) * (1 + 1e-9);
  out.hs_model_checked = ok;

  // sum_{k>K} dim_k (C / nu_k)^p, C = HS_K nu_K
  if (K > k_max && hs[K] > 0.0) {
    const double C = rank_factor * hs[K] * nu(K);
    if (!(p > d.value() - 1.0))
      throw accuracy_error("HS tail model not summable for p <= d - 1");
    double s = 0.0;
    int k = K + 1;
    for (; k < K + 200000; ++k) {
      const double t = static_cast<double>(dim_harmonics(d, k)) * std::pow(C / nu(k), p);
      s += t;
      if (t < 1e-18 * s && k > K + 1000)
        break;
    }
    // integral remainder: dim_k <= c k^{d-2}, terms ~ k^{d-2-p}
    const double kk = static_cast<double>(k);
    const double dimk = static_cast<double>(dim_harmonics(d, k));
    s += dimk * std::pow(C / nu(k), p) * kk / (p - d.value() + 1.0);
    tail_p += s;
  }
  const double np = std::pow(out.norm, p);
  out.tail_bound = std::pow(np + tail_p, 1.0 / p) - out.norm;
  if (opt.rel_tol > 0.0 && out.tail_bound > opt.rel_tol * out.norm)
    throw accuracy_error("resolvent tail bound " + std::to_string(out.tail_bound / out.norm) +
                         " (relative) above tolerance at k_max = " + std::to_string(k_max));
  return out;
}

// ---------------------------------------------------------------------------
// Uniform bound scan
// ---------------------------------------------------------------------------

struct ScanRow {
  double theta;
  cplx z;
  double norm = 0.0;
  double tail_bound = 0.0;
  int k_max_used = 0;
  double ratio = 0.0;  // norm / (|z|^{d/(2q)-1} ||W1||_{2q} ||W2||_{2q})
  std::string failure; // empty on success
};

struct UniformScan {
  double q, p;
  int d;
  std::vector<ScanRow> rows;
  double max_over_min = 0.0;
  double growth = 0.0;  // ratio at the smallest theta / ratio at the next one
  bool growth_flag = false;
};

/// Ratios along z = e^{i theta}.
inline UniformScan uniform_bound_scan(const RadialProfile &w1, const RadialProfile &w2,
                                      const ExponentConfig &cfg,
                                      const std::vector<double> &theta_grid, int k_max,
                                      ResolventOptions opt = {}) {
  UniformScan s{cfg.q, cfg.p, cfg.d.value(), {}, 0.0, 0.0, false};
  const double wn = lq_norm(w1, 2.0 * cfg.q, cfg.d) * lq_norm(w2, 2.0 * cfg.q, cfg.d);
  for (double th : theta_grid) {
    detail::require(th > 0.0 && th <= std::numbers::pi, "theta must lie in (0, pi]");
    ScanRow row{th, std::polar(1.0, th)};
    if (th == std::numbers::pi)
      row.z = cplx(-1.0, 0.0);
    try {
      const auto est = resolvent_schatten(w1, w2, cfg, SpectralPoint(row.z), k_max, opt);
      row.norm = est.norm;
      row.tail_bound = est.tail_bound;
      row.k_max_used = est.k_max_used;
      row.ratio = est.norm / (std::pow(std::abs(row.z), cfg.d.value() / (2.0 * cfg.q) - 1.0) * wn);
    } catch (const std::exception &e) {
      row.failure = e.what();
    }
    s.rows.push_back(row);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<std::pair<double, double>> ok;
  for (const auto &r : s.rows)
    if (r.failure.empty()) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
      ok.emplace_back(r.theta, r.ratio);
    }
  if (!ok.empty())
    s.max_over_min = hi / lo;
  if (ok.size() >= 2) {
    std::sort(ok.begin(), ok.end());
    s.growth = ok[0].second / ok[1].second;
    s.growth_flag = s.growth > 1.1;
  }
  return s;
}

} // namespace radspec

#endif // RADSPEC_RESOLVENT_HPP
