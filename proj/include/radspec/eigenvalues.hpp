#ifndef RADSPEC_EIGENVALUES_HPP
#define RADSPEC_EIGENVALUES_HPP

//
// Eigenvalues of -Delta + V for radial V via the Birman-Schwinger operator
//   K(z) = sqrt|V| R0(z) sqrt V,   sqrt V = sqrt|V| V/|V|,
// whose sector blocks K_k(z) give det(1 + K_k(z)) = 0 exactly at the sector-k
// eigenvalues. Roots are located by the argument principle on rectangles,
// recursive subdivision and a secant polish on the determinant.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "angular.hpp"
#include "errors.hpp"
#include "radial_core.hpp"
#include "resolvent.hpp"

namespace radspec {

/// Axis-parallel rectangle in the z-plane.
struct SearchBox {
  double re_min, re_max, im_min, im_max;

  bool contains(cplx z, double slack = 0.0) const {
    return z.real() >= re_min - slack && z.real() <= re_max + slack &&
           z.imag() >= im_min - slack && z.imag() <= im_max + slack;
  }
  double width() const { return re_max - re_min; }
  double height() const { return im_max - im_min; }
  double size() const { return std::max(width(), height()); }
  cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
};

struct BSConfig {
  Dimension d{3};
  int k_max = 0;
  SearchBox search_box{-10.0, -1e-3, -1.0, 1.0};
  std::optional<QuadratureRule> grid; // resample v onto this rule when set
  double margin = 1e-3;               // excluded strip around [0, inf), >= 1e-6
  int max_depth = 14;                 // subdivision depth
  double root_tol = 1e-12;            // relative step size of the polish
  double residual_tol = 1e-8;
  bool sector_cap = true;             // stop once ||K_k||_HS < 1/2 on the box boundary
};

struct Eigenvalue {
  cplx z;
  int k;
  double residual;   // smallest |eigenvalue| of 1 + K_k(z)
  int winding;       // multiplicity from the argument principle
  std::uint64_t dim; // dim H_k
};

struct UnresolvedRegion {
  SearchBox box;
  int k;
  std::string reason;
};

struct EigenvalueSet {
  std::vector<Eigenvalue> eigenvalues;
  std::vector<UnresolvedRegion> unresolved;
  std::vector<SearchBox> excluded; // strips around [0, inf) that were not searched
  int k_searched = -1;             // last sector searched
  std::size_t evaluations = 0;     // matrix assemblies
  bool capped = false;             // sector cap reached before k_max
  bool complete() const { return unresolved.empty(); }
};

/// Sector block of sqrt|V| R0(z) sqrt V.
inline SectorOperator bs_matrix(const RadialProfile &v, const SectorOrder &order,
                                const SpectralPoint &zp) {
  const auto w1 = v.mapped([](cplx x) { return cplx(std::sqrt(std::abs(x))); }, "sqrt|v|");
  const auto w2 = v.mapped(
      [](cplx x) { return x == cplx(0.0) ? cplx(0.0) : x / std::sqrt(std::abs(x)); }, "sqrt v");
  return sector_sandwich(w1, w2, order, zp);
}

namespace detail {

struct DetValue {
  double log_abs;
  double phase; // in (-pi, pi]
};

inline DetValue log_det(const Matrix &a) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const auto &m = lu.matrixLU();
  double la = 0.0, ph = lu.permutationP().determinant() < 0 ? std::numbers::pi : 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const cplx u = m(i, i);
    if (u == cplx(0.0))
      return {-std::numeric_limits<double>::infinity(), 0.0};
    la += std::log(std::abs(u));
    ph += std::arg(u);
  }
  return {la, std::remainder(ph, 2.0 * std::numbers::pi)};
}

inline double wrap(double x) { return std::remainder(x, 2.0 * std::numbers::pi); }

// det(1 + K_k(z)) for one sector with a cache over z.
class SectorDeterminant {
public:
  SectorDeterminant(const RadialProfile &w1, const RadialProfile &w2, SectorOrder order)
      : w1_(w1), w2_(w2), order_(order), stencil_(w1_.rule()) {}

  Matrix one_plus_k(cplx z) const {
    ++evaluations_;
    const GreenAssembler ga(w1_.rule(), stencil_, order_.d, SpectralPoint(z).kappa(), order_.k);
    Matrix m = sandwich_from(ga, order_.k, w1_, w2_, order_.d.value());
    m += Matrix::Identity(m.rows(), m.cols());
    return m;
  }

  DetValue operator()(cplx z) {
    const auto key = std::make_pair(z.real(), z.imag());
    auto it = cache_.find(key);
    if (it != cache_.end())
      return it->second;
    const DetValue v = log_det(one_plus_k(z));
    cache_.emplace(key, v);
    return v;
  }

  double hs_norm(cplx z) const {
    ++evaluations_;
    const GreenAssembler ga(w1_.rule(), stencil_, order_.d, SpectralPoint(z).kappa(), order_.k);
    return sandwich_from(ga, order_.k, w1_, w2_, order_.d.value()).norm();
  }

  double residual(cplx z) const {
    Eigen::ComplexEigenSolver<Matrix> es(one_plus_k(z), false);
    return es.eigenvalues().cwiseAbs().minCoeff();
  }

  const SectorOrder &order() const { return order_; }
  std::size_t evaluations() const { return evaluations_; }

private:
  RadialProfile w1_, w2_;
  SectorOrder order_;
  CorrectionStencil stencil_;
  mutable std::size_t evaluations_ = 0;
  std::map<std::pair<double, double>, DetValue> cache_;
};

struct Winding {
  int count = 0;
  bool ok = false;
};

// Phase increment of det along the segment a -> b, refined until every step
// turns by less than pi/3.
inline bool segment_phase(SectorDeterminant &f, cplx a, cplx b, double &acc, int depth = 0) {
  const DetValue fa = f(a), fb = f(b);
  if (!std::isfinite(fa.log_abs) || !std::isfinite(fb.log_abs))
    return false;
  const double dphi = wrap(fb.phase - fa.phase);
  if (std::abs(dphi) < std::numbers::pi / 3) {
    acc += dphi;
    return true;
  }
  if (depth > 40 || std::abs(b - a) < 1e-13 * std::max(1.0, std::abs(a)))
    return false;
  const cplx m = 0.5 * (a + b);
  return segment_phase(f, a, m, acc, depth + 1) && segment_phase(f, m, b, acc, depth + 1);
}

inline Winding box_winding(SectorDeterminant &f, const SearchBox &b, int per_edge = 4) {
  const std::array<cplx, 5> corner{cplx(b.re_min, b.im_min), cplx(b.re_max, b.im_min),
                                   cplx(b.re_max, b.im_max), cplx(b.re_min, b.im_max),
                                   cplx(b.re_min, b.im_min)};
  double acc = 0.0;
  for (int e = 0; e < 4; ++e)
    for (int s = 0; s < per_edge; ++s) {
      const cplx a = corner[e] + (corner[e + 1] - corner[e]) * (double(s) / per_edge);
      const cplx c = s + 1 == per_edge ? corner[e + 1]
                                       : corner[e] + (corner[e + 1] - corner[e]) *
                                                         (double(s + 1) / per_edge);
      if (!segment_phase(f, a, c, acc))
        return {0, false};
    }
  const double w = acc / (2.0 * std::numbers::pi);
  const int n = static_cast<int>(std::lround(w));
  return {n, std::abs(w - n) < 0.05};
}

// Secant iteration on det(1 + K) from inside the box.
inline std::optional<cplx> polish(SectorDeterminant &f, const SearchBox &b, double tol) {
  auto val = [&](cplx z, double ref) {
    const DetValue d = f(z);
    return std::exp(d.log_abs - ref) * std::polar(1.0, d.phase);
  };
  cplx z0 = b.center(), z1 = z0 + cplx(0.1 * b.width(), 0.07 * b.height());
  const double ref = f(z0).log_abs;
  if (!std::isfinite(ref))
    return z0;
  cplx f0 = val(z0, ref), f1 = val(z1, ref);
  const double scale = std::max(1.0, std::abs(z0));
  for (int it = 0; it < 60; ++it) {
    if (f1 == f0)
      break;
    const cplx step = f1 * (z1 - z0) / (f1 - f0);
    z0 = z1;
    f0 = f1;
    z1 = z1 - step;
    if (!b.contains(z1, 0.5 * b.size()) || (z1.imag() == 0.0 && z1.real() >= 0.0))
      return std::nullopt;
    if (std::abs(step) < tol * scale)
      return z1;
    f1 = val(z1, ref);
    if (f1 == cplx(0.0))
      return z1;
  }
  return std::nullopt;
}

inline std::array<SearchBox, 4> quarter(const SearchBox &b, double t) {
  const double xm = b.re_min + t * b.width(), ym = b.im_min + t * b.height();
  return {SearchBox{b.re_min, xm, b.im_min, ym}, SearchBox{xm, b.re_max, b.im_min, ym},
          SearchBox{b.re_min, xm, ym, b.im_max}, SearchBox{xm, b.re_max, ym, b.im_max}};
}

struct RootSearch {
  SectorDeterminant &f;
  const BSConfig &cfg;
  EigenvalueSet &out;

  void accept(cplx z, int winding) {
    const double res = f.residual(z);
    if (res > cfg.residual_tol) {
      out.unresolved.push_back({SearchBox{z.real(), z.real(), z.imag(), z.imag()}, f.order().k,
                                "polished root residual " + std::to_string(res)});
      return;
    }
    for (const auto &e : out.eigenvalues)
      if (e.k == f.order().k && std::abs(e.z - z) < 1e-9 * std::max(1.0, std::abs(z)))
        return;
    out.eigenvalues.push_back({z, f.order().k, res, winding, dim_harmonics(f.order().d, f.order().k)});
  }

  void run(const SearchBox &b, int winding, int depth) {
    if (winding == 0)
      return;
    if (winding == 1) {
      if (auto z = polish(f, b, cfg.root_tol); z && b.contains(*z)) {
        accept(*z, 1);
        return;
      }
    }
    if (depth >= cfg.max_depth) {
      if (auto z = polish(f, b, cfg.root_tol); z && b.contains(*z, 1e-3 * b.size()))
        accept(*z, winding);
      else
        out.unresolved.push_back({b, f.order().k, "winding " + std::to_string(winding) +
                                                      " at maximal subdivision depth"});
      return;
    }
    for (double t : {0.5, 0.47, 0.53, 0.41}) {
      const auto q = quarter(b, t);
      std::array<Winding, 4> w;
      int total = 0;
      bool ok = true;
      for (int i = 0; i < 4 && ok; ++i) {
        w[i] = box_winding(f, q[i]);
        ok = w[i].ok && w[i].count >= 0;
        total += w[i].count;
      }
      if (!ok || total != winding)
        continue;
      for (int i = 0; i < 4; ++i)
        run(q[i], w[i].count, depth + 1);
      return;
    }
    out.unresolved.push_back({b, f.order().k, "inconsistent winding under subdivision"});
  }
};

// Parts of a box at distance >= margin from [0, inf).
inline std::vector<SearchBox> admissible_parts(const SearchBox &b, double m,
                                               std::vector<SearchBox> &excluded) {
  std::vector<SearchBox> parts;
  auto add = [&](SearchBox s) {
    if (s.re_max > s.re_min && s.im_max > s.im_min)
      parts.push_back(s);
  };
  if (b.re_max <= -m || b.im_min >= m || b.im_max <= -m) {
    parts.push_back(b);
    return parts;
  }
  add({b.re_min, std::min(b.re_max, -m), b.im_min, b.im_max});
  const double r0 = std::max(b.re_min, -m);
  add({r0, b.re_max, std::max(b.im_min, m), b.im_max});
  add({r0, b.re_max, b.im_min, std::min(b.im_max, -m)});
  excluded.push_back({r0, b.re_max, std::max(b.im_min, -m), std::min(b.im_max, m)});
  return parts;
}

} // namespace detail

/// All z in cfg.search_box (minus the strip of width cfg.margin around [0, inf)) with
/// det(1 + K_k(z)) = 0, for k = 0..k_max.
inline EigenvalueSet find_eigenvalues(const RadialProfile &v0, const BSConfig &cfg) {
  detail::require(cfg.margin >= 1e-6, "search margin must be >= 1e-6");
  detail::require(cfg.k_max >= 0, "k_max must be >= 0");
  detail::require(cfg.search_box.re_max > cfg.search_box.re_min && cfg.search_box.im_max > cfg.search_box.im_min,
                  "search box must have positive area");
  EigenvalueSet out;
  if (v0.is_zero())
    return out;
  const RadialProfile v = cfg.grid ? v0.resampled(*cfg.grid) : v0;
  const auto parts = detail::admissible_parts(cfg.search_box, cfg.margin, out.excluded);
  const auto w1 = v.mapped([](cplx x) { return cplx(std::sqrt(std::abs(x))); }, "sqrt|v|");
  const auto w2 = v.mapped(
      [](cplx x) { return x == cplx(0.0) ? cplx(0.0) : x / std::sqrt(std::abs(x)); }, "sqrt v");

  for (int k = 0; k <= cfg.k_max; ++k) {
    detail::SectorDeterminant f(w1, w2, SectorOrder(cfg.d, k));
    out.k_searched = k;
    if (cfg.sector_cap && k > 0) {
      // ||K_k(z)|| <= ||K_k||_HS and the norm is subharmonic in z
      double hs = 0.0;
      for (const auto &b : parts)
        for (int s = 0; s <= 4; ++s) {
          const double t = s / 4.0;
          for (cplx z : {cplx(b.re_min + t * b.width(), b.im_min),
                         cplx(b.re_min + t * b.width(), b.im_max),
                         cplx(b.re_min, b.im_min + t * b.height()),
                         cplx(b.re_max, b.im_min + t * b.height())})
            hs = std::max(hs, f.hs_norm(z));
        }
      if (hs < 0.5) {
        out.capped = k < cfg.k_max;
        out.evaluations += f.evaluations();
        break;
      }
    }
    detail::RootSearch search{f, cfg, out};
    for (const auto &b : parts) {
      const auto w = detail::box_winding(f, b, 8);
      if (!w.ok || w.count < 0) {
        out.unresolved.push_back({b, k, "winding on the search box boundary not resolved"});
        continue;
      }
      search.run(b, w.count, 0);
    }
    out.evaluations += f.evaluations();
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](const auto &a, const auto &b) {
    if (a.k != b.k)
      return a.k < b.k;
    if (a.z.real() != b.z.real())
      return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue-sum functionals
// ---------------------------------------------------------------------------

/// ( sum_j delta(z_j) |z_j|^{p(1 - d/(2q)) - 1} )^{q/p}, each z_j counted with
/// winding multiplicity times dim H_k.
inline double theorem1_lhs(const std::vector<Eigenvalue> &eigs, const ExponentConfig &cfg,
                           double beta = 1.0) {
  detail::require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  const double e = beta * cfg.p * (1.0 - cfg.d.value() / (2.0 * cfg.q)) - 1.0;
  double acc = 0.0;
  for (const auto &z : eigs)
    acc += static_cast<double>(z.winding) * static_cast<double>(z.dim) *
           std::pow(delta_dist(z.z), beta) * std::pow(std::abs(z.z), e);
  return std::pow(acc, cfg.q / (beta * cfg.p));
}

struct FrankBoundParams {
  double p, sigma, eps, M;

  FrankBoundParams(double p_, double sigma_, double eps_, double M_)
      : p(p_), sigma(sigma_), eps(eps_), M(M_) {
    detail::require(p >= 1.0, "p must be >= 1");
    detail::require(sigma > 0.0 && eps > 0.0 && M > 0.0, "sigma, eps, M must be positive");
  }
  /// sigma = 1 - d/(2q).
  static FrankBoundParams from_config(const ExponentConfig &cfg, double eps, double M) {
    return {cfg.p, 1.0 - cfg.d.value() / (2.0 * cfg.q), eps, M};
  }
  double gain() const { return std::max(0.0, 2.0 * p * sigma - 1.0 + eps); }
  double lhs_exponent() const { return -0.5 + 0.5 * gain(); }
};

struct FrankFunctional {
  double lhs, rhs;
};

/// lhs = sum delta(z_j)|z_j|^{-1/2 + (2 p sigma - 1 + eps)_+/2},
/// rhs = M^{(1 + (2 p sigma - 1 + eps)_+)/(2 sigma)}.
inline FrankFunctional frank_functional(const std::vector<Eigenvalue> &eigs,
                                        const FrankBoundParams &fp) {
  double lhs = 0.0;
  for (const auto &z : eigs)
    lhs += static_cast<double>(z.winding) * static_cast<double>(z.dim) * delta_dist(z.z) *
           std::pow(std::abs(z.z), fp.lhs_exponent());
  return {lhs, std::pow(fp.M, (1.0 + fp.gain()) / (2.0 * fp.sigma))};
}

// ---------------------------------------------------------------------------
// Sharpness scan
// ---------------------------------------------------------------------------

/// A profile family indexed by a parameter vector, with box constraints and
/// the search box to use for each member.
struct ProfileFamily {
  std::function<RadialProfile(const std::vector<double> &)> make;
  std::function<SearchBox(const std::vector<double> &)> box;
  std::vector<double> lower, upper;
};

struct ScanPoint {
  std::vector<double> params;
  double lhs = 0.0;
  double vq = 0.0;   // int |V|^q
  double ratio = 0.0;
  int eigenvalue_count = 0;
  bool complete = true;
  std::string failure;
};

struct SharpnessReport {
  double beta;
  std::vector<ScanPoint> trace;  // the requested members
  std::vector<ScanPoint> ascent; // evaluations of the local search
  ScanPoint best;
  double max_over_min = 0.0;     // over complete trace points with ratio > 0
  double trend_slope = 0.0;      // d log(ratio) / d log(param[0]) over the trace
};

namespace detail {

inline double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

inline ScanPoint evaluate_member(const ProfileFamily &fam, const std::vector<double> &par,
                                 const ExponentConfig &cfg, BSConfig bs, double beta) {
  ScanPoint s;
  s.params = par;
  try {
    const auto v = fam.make(par);
    bs.search_box = fam.box(par);
    const auto eig = find_eigenvalues(v, bs);
    s.complete = eig.complete();
    if (!s.complete)
      s.failure = eig.unresolved.front().reason;
    s.eigenvalue_count = static_cast<int>(eig.eigenvalues.size());
    s.lhs = theorem1_lhs(eig.eigenvalues, cfg, beta);
    s.vq = std::pow(lq_norm(v, cfg.q, cfg.d), cfg.q);
    s.ratio = s.vq > 0.0 ? s.lhs / s.vq : 0.0;
  } catch (const std::exception &e) {
    s.complete = false;
    s.failure = e.what();
  }
  return s;
}

} // namespace detail

/// Evaluates the beta-modified functional ratio over the listed members, then
/// runs a budgeted Nelder-Mead ascent from the best member.
inline SharpnessReport sharpness_scan(const ProfileFamily &fam,
                                      const std::vector<std::vector<double>> &members,
                                      const ExponentConfig &cfg, const BSConfig &bs, double beta,
                                      int budget = 0) {
  detail::require(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
  detail::require(!members.empty(), "family needs at least one member");
  SharpnessReport rep{beta, {}, {}, {}, 0.0, 0.0};
  std::vector<double> lx, ly;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto &m : members) {
    auto s = detail::evaluate_member(fam, m, cfg, bs, beta);
    if (s.complete && s.ratio > 0.0) {
      lo = std::min(lo, s.ratio);
      hi = std::max(hi, s.ratio);
      if (m[0] > 0.0) {
        lx.push_back(std::log(m[0]));
        ly.push_back(std::log(s.ratio));
      }
    }
    if (s.complete && (rep.best.params.empty() || s.ratio > rep.best.ratio))
      rep.best = s;
    rep.trace.push_back(std::move(s));
  }
  if (hi > 0.0)
    rep.max_over_min = hi / lo;
  if (lx.size() >= 2)
    rep.trend_slope = detail::fit_slope(lx, ly);
  if (budget <= 0 || rep.best.params.empty())
    return rep;

  // Nelder-Mead on -ratio inside the parameter box.
  const std::size_t n = rep.best.params.size();
  auto clamp = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = std::clamp(x[i], fam.lower[i], fam.upper[i]);
    return x;
  };
  int evals = 0;
  auto score = [&](const std::vector<double> &x) {
    auto s = detail::evaluate_member(fam, clamp(x), cfg, bs, beta);
    ++evals;
    const double r = s.complete ? s.ratio : -1.0;
    if (s.complete && s.ratio > rep.best.ratio)
      rep.best = s;
    rep.ascent.push_back(std::move(s));
    return r;
  };
  std::vector<std::vector<double>> simplex{rep.best.params};
  std::vector<double> val{rep.best.ratio};
  for (std::size_t i = 0; i < n && evals < budget; ++i) {
    auto x = rep.best.params;
    x[i] += 0.1 * (fam.upper[i] - fam.lower[i]);
    x = clamp(x);
    if (x == rep.best.params)
      x[i] -= 0.1 * (fam.upper[i] - fam.lower[i]);
    simplex.push_back(clamp(x));
    val.push_back(score(simplex.back()));
  }
  while (evals < budget && simplex.size() == n + 1) {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return val[a] > val[b]; });
    const std::size_t worst = idx[n];
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c[j] += simplex[idx[i]][j] / n;
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j)
        x[j] = c[j] + t * (simplex[worst][j] - c[j]);
      return clamp(x);
    };
    const auto xr = along(-1.0);
    const double fr = score(xr);
    if (fr > val[idx[0]] && evals < budget) {
      const auto xe = along(-2.0);
      const double fe = score(xe);
      simplex[worst] = fe > fr ? xe : xr;
      val[worst] = std::max(fe, fr);
    } else if (fr > val[idx[n - 1]]) {
      simplex[worst] = xr;
      val[worst] = fr;
    } else if (evals < budget) {
      const auto xc = along(0.5);
      const double fc = score(xc);
      if (fc > val[worst]) {
        simplex[worst] = xc;
        val[worst] = fc;
      } else {
        for (std::size_t i = 1; i <= n && evals < budget; ++i) {
          auto &x = simplex[idx[i]];
          for (std::size_t j = 0; j < n; ++j)
            x[j] = simplex[idx[0]][j] + 0.5 * (x[j] - simplex[idx[0]][j]);
          val[idx[i]] = score(x);
        }
      }
    }
  }
  return rep;
}

/// CSV rows "k,re,im,residual,winding".
inline std::string eigenvalues_csv(const EigenvalueSet &s) {
  std::string out = "k,re,im,residual,winding\n";
  char buf[160];
  for (const auto &e : s.eigenvalues) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.6e,%d\n", e.k, e.z.real(), e.z.imag(),
                  e.residual, e.winding);
    out += buf;
  }
  return out;
}

} // namespace radspec

#endif // RADSPEC_EIGENVALUES_HPP
