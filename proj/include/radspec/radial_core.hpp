#ifndef RADSPEC_RADIAL_CORE_HPP
#define RADSPEC_RADIAL_CORE_HPP

//
// Radial profiles on composite Gauss-Legendre grids: quadrature rules,
// L^q and Lorentz norms with respect to d-dimensional measure, dilations
// and a small catalogue of standard potentials.
//

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace radspec {

using cplx = std::complex<double>;

/// Spatial dimension d >= 2.
class Dimension {
public:
  explicit Dimension(int d) : d_(d) {
    detail::require(d >= 2, "dimension must be >= 2, got " + std::to_string(d));
  }
  int value() const noexcept { return d_; }
  operator int() const noexcept { return d_; }

private:
  int d_;
};

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(Dimension d) {
  const double h = 0.5 * d.value();
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

/// Exponent pair (q, p) in dimension d.
///
/// Strict mode requires d/2 <= q < d and p > (d-1)q/(d-q), the range in which
/// the uniform resolvent bound holds. Relaxed mode only asks 1 <= q < d (with
/// the same lower bound on p), which is the range of the spectral measure
/// bound.
struct ExponentConfig {
  enum class Mode { strict, relaxed };

  double q;
  double p;
  Dimension d;
  Mode mode = Mode::strict;

  ExponentConfig(double q_, double p_, Dimension d_, Mode m = Mode::strict)
      : q(q_), p(p_), d(d_), mode(m) {
    const double dd = d.value();
    const double qmin = (mode == Mode::strict) ? dd / 2.0 : 1.0;
    detail::require(q >= qmin && q < dd, "exponent q out of admissible range");
    detail::require(p > critical_p(), "exponent p must exceed (d-1)q/(d-q)");
  }

  /// (d-1) q / (d-q): the summability threshold for the sector series.
  double critical_p() const { return (d.value() - 1.0) * q / (d.value() - q); }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1, 1]
// ---------------------------------------------------------------------------

struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

inline GaussLegendre compute_gauss_legendre(int n) {
  GaussLegendre g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double wt = 2.0 / ((1.0 - x * x) * dp * dp);
    g.x[i] = -x;
    g.x[n - 1 - i] = x;
    g.w[i] = wt;
    g.w[n - 1 - i] = wt;
  }
  if (n % 2 == 1)
    g.x[n / 2] = 0.0;
  return g;
}

} // namespace detail

/// Cached Gauss-Legendre rule with n points on [-1, 1].
inline const GaussLegendre &gauss_legendre(int n) {
  detail::require(n >= 1, "Gauss-Legendre order must be positive");
  static std::mutex mtx;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Integrate f over [a, b] with a composite rule of `panels` equal panels.
template <typename F>
auto integrate_panels(F &&f, double a, double b, int panels, int order = 16) {
  const auto &g = gauss_legendre(order);
  using R = decltype(f(a));
  R acc{};
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    R part{};
    for (int i = 0; i < order; ++i)
      part += g.w[i] * f(mid + 0.5 * h * g.x[i]);
    acc += 0.5 * h * part;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Composite quadrature rule on [0, r_max]
// ---------------------------------------------------------------------------

/// Composite Gauss-Legendre rule on [0, r_max]. Panel edges are stored so that
/// profiles can interpolate locally and jump radii can sit on panel edges.
class QuadratureRule {
public:
  QuadratureRule() = default;

  /// Panels between consecutive breakpoints, `nodes_per_panel` nodes each.
  QuadratureRule(std::vector<double> breakpoints, int nodes_per_panel)
      : edges_(std::move(breakpoints)), npp_(nodes_per_panel) {
    detail::require(edges_.size() >= 2, "rule needs at least one panel");
    detail::require(npp_ >= 2, "nodes_per_panel must be >= 2");
    detail::require(edges_.front() == 0.0, "rule must start at r = 0");
    for (std::size_t i = 1; i < edges_.size(); ++i)
      detail::require(edges_[i] > edges_[i - 1], "breakpoints must increase");
    const auto &g = gauss_legendre(npp_);
    nodes_.reserve(panel_count() * npp_);
    weights_.reserve(panel_count() * npp_);
    for (int p = 0; p < panel_count(); ++p) {
      const double a = edges_[p], b = edges_[p + 1];
      for (int i = 0; i < npp_; ++i) {
        nodes_.push_back(0.5 * (a + b) + 0.5 * (b - a) * g.x[i]);
        weights_.push_back(0.5 * (b - a) * g.w[i]);
      }
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  int panel_count() const noexcept { return static_cast<int>(edges_.size()) - 1; }
  int nodes_per_panel() const noexcept { return npp_; }
  double r_max() const noexcept { return edges_.back(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> breakpoints() const noexcept { return edges_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  bool uniform() const {
    const double h = r_max() / panel_count();
    for (int p = 0; p <= panel_count(); ++p)
      if (std::abs(edges_[p] - p * h) > 1e-14 * r_max())
        return false;
    return true;
  }

  /// Panel index containing r (clamped to the rule's range).
  int panel_of(double r) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
    int p = static_cast<int>(it - edges_.begin()) - 1;
    return std::clamp(p, 0, panel_count() - 1);
  }

  /// Integral of a sampled function (values at the nodes).
  template <typename T> T integrate(std::span<const T> values) const {
    T acc{};
    for (std::size_t i = 0; i < size(); ++i)
      acc += weights_[i] * values[i];
    return acc;
  }

  /// Rule with every panel split so that no panel is wider than max_width.
  QuadratureRule refined(double max_width, int npp = 0) const {
    std::vector<double> e{0.0};
    for (int p = 0; p < panel_count(); ++p) {
      const double a = edges_[p], b = edges_[p + 1];
      const int m = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
      for (int j = 1; j <= m; ++j)
        e.push_back(j == m ? b : a + (b - a) * j / m);
    }
    return QuadratureRule(std::move(e), npp > 0 ? npp : npp_);
  }

  QuadratureRule scaled(double lambda) const {
    std::vector<double> e(edges_);
    for (auto &x : e)
      x *= lambda;
    return QuadratureRule(std::move(e), npp_);
  }

  bool operator==(const QuadratureRule &o) const {
    return npp_ == o.npp_ && edges_ == o.edges_;
  }

private:
  std::vector<double> edges_;
  int npp_ = 0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Uniform composite rule: `panels` equal panels on [0, r_max].
inline QuadratureRule make_rule(double r_max, int panels, int nodes_per_panel) {
  detail::require(r_max > 0.0 && std::isfinite(r_max), "r_max must be positive");
  detail::require(panels >= 1, "panels must be >= 1");
  detail::require(nodes_per_panel >= 2, "nodes_per_panel must be >= 2");
  std::vector<double> e(panels + 1);
  for (int p = 0; p <= panels; ++p)
    e[p] = (p == panels) ? r_max : r_max * p / panels;
  return QuadratureRule(std::move(e), nodes_per_panel);
}

/// Rule whose panel edges include every radius in `jumps` (sorted, inside
/// (0, r_max)), with panels no wider than max_width.
inline QuadratureRule make_rule_with_jumps(double r_max, std::vector<double> jumps,
                                           double max_width, int nodes_per_panel) {
  detail::require(r_max > 0.0, "r_max must be positive");
  std::sort(jumps.begin(), jumps.end());
  std::vector<double> e{0.0};
  for (double j : jumps)
    if (j > e.back() && j < r_max)
      e.push_back(j);
  e.push_back(r_max);
  return QuadratureRule(std::move(e), nodes_per_panel).refined(max_width);
}

namespace detail {

// Lagrange interpolation through the nodes of one panel.
inline cplx interpolate_panel(std::span<const double> x, std::span<const cplx> y, double r) {
  const std::size_t n = x.size();
  for (std::size_t j = 0; j < n; ++j)
    if (r == x[j])
      return y[j];
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double wj = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j)
        wj /= (x[j] - x[k]);
    const double t = wj / (r - x[j]);
    num += t * y[j];
    den += t;
  }
  return num / den;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Radial profile
// ---------------------------------------------------------------------------

/// A complex radial function V(x) = v(|x|) sampled on a quadrature rule.
///
/// Values beyond support_radius are zero. When the profile was built from a
/// closed form, the generator is kept and used for off-node evaluation.
class RadialProfile {
public:
  using Generator = std::function<cplx(double)>;

  RadialProfile() = default;

  RadialProfile(QuadratureRule rule, std::vector<cplx> values, double support_radius,
                std::string label = {}, Generator gen = {})
      : rule_(std::move(rule)), values_(std::move(values)), support_(support_radius),
        label_(std::move(label)), gen_(std::move(gen)) {
    detail::require(values_.size() == rule_.size(), "profile values do not match rule size");
    detail::require(support_ > 0.0, "support radius must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      detail::require(std::isfinite(values_[i].real()) && std::isfinite(values_[i].imag()),
                      "profile values must be finite");
      if (rule_.node(i) > support_)
        values_[i] = 0.0;
    }
  }

  /// Sample a closed form on a rule.
  static RadialProfile from_function(const QuadratureRule &rule, Generator f,
                                     double support_radius, std::string label = {}) {
    std::vector<cplx> v(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i)
      v[i] = rule.node(i) > support_radius ? cplx(0.0) : f(rule.node(i));
    return RadialProfile(rule, std::move(v), support_radius, std::move(label), std::move(f));
  }

  const QuadratureRule &rule() const noexcept { return rule_; }
  std::span<const cplx> values() const noexcept { return values_; }
  cplx value(std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  double support_radius() const noexcept { return support_; }
  const std::string &label() const noexcept { return label_; }
  bool has_generator() const noexcept { return static_cast<bool>(gen_); }

  /// Point evaluation: closed form when available, else panel-local
  /// polynomial interpolation.
  cplx operator()(double r) const {
    if (r < 0.0 || r > support_ || r > rule_.r_max())
      return 0.0;
    if (gen_)
      return gen_(r);
    const int p = rule_.panel_of(r);
    const std::size_t n = rule_.nodes_per_panel();
    return detail::interpolate_panel(rule_.nodes().subspan(p * n, n),
                                     std::span<const cplx>(values_).subspan(p * n, n), r);
  }

  /// The same function sampled on another rule.
  RadialProfile resampled(const QuadratureRule &rule) const {
    std::vector<cplx> v(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i)
      v[i] = (*this)(rule.node(i));
    return RadialProfile(rule, std::move(v), std::min(support_, rule.r_max()), label_, gen_);
  }

  RadialProfile with_label(std::string label) const {
    RadialProfile c(*this);
    c.label_ = std::move(label);
    return c;
  }

  /// Pointwise c * v.
  RadialProfile scaled(cplx c) const {
    std::vector<cplx> v(values_);
    for (auto &x : v)
      x *= c;
    Generator g;
    if (gen_)
      g = [c, f = gen_](double r) { return c * f(r); };
    return RadialProfile(rule_, std::move(v), support_, label_, std::move(g));
  }

  /// Pointwise map of the values (generator composed when present).
  template <typename F> RadialProfile mapped(F f, std::string label) const {
    std::vector<cplx> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = f(values_[i]);
    Generator g;
    if (gen_)
      g = [f, h = gen_](double r) { return f(h(r)); };
    return RadialProfile(rule_, std::move(v), support_, std::move(label), std::move(g));
  }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](cplx x) { return x == cplx(0.0); });
  }

private:
  QuadratureRule rule_;
  std::vector<cplx> values_;
  double support_ = 1.0;
  std::string label_;
  Generator gen_;
};

// ---------------------------------------------------------------------------
// Norms and dilation
// ---------------------------------------------------------------------------

/// ||V||_{L^q(R^d)} for V(x) = v(|x|).
inline double lq_norm(const RadialProfile &v, double q, Dimension d) {
  detail::require(q >= 1.0, "lq_norm requires q >= 1");
  const auto &rule = v.rule();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double a = std::abs(v.value(i));
    if (a > 0.0)
      acc += rule.weight(i) * std::pow(a, q) * std::pow(rule.node(i), d - 1);
  }
  return std::pow(sphere_area(d) * acc, 1.0 / q);
}

/// Lorentz L^{q,r} norm from the decreasing rearrangement,
///   ( int_0^inf (s^{1/q} v*(s))^r ds/s )^{1/r},
/// where each node carries d-dimensional mass sigma_{d-1} w_i r_i^{d-1}.
/// For r = q this reproduces lq_norm.
inline double lorentz_norm(const RadialProfile &v, double q, double r, Dimension d) {
  detail::require(q > 0.0, "lorentz_norm requires q > 0");
  detail::require(r >= 1.0, "lorentz_norm requires r >= 1");
  const auto &rule = v.rule();
  const double sig = sphere_area(d);
  std::vector<std::pair<double, double>> vm; // (|v|, mass)
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double a = std::abs(v.value(i));
    if (a > 0.0)
      vm.emplace_back(a, sig * rule.weight(i) * std::pow(rule.node(i), d - 1));
  }
  std::stable_sort(vm.begin(), vm.end(), [](auto &x, auto &y) { return x.first > y.first; });
  const double e = r / q;
  double acc = 0.0, s0 = 0.0;
  for (auto [a, m] : vm) {
    const double s1 = s0 + m;
    acc += std::pow(a, r) * (q / r) * (std::pow(s1, e) - std::pow(s0, e));
    s0 = s1;
  }
  return std::pow(acc, 1.0 / r);
}

/// r -> v(r / lambda) on the rule scaled by lambda.
inline RadialProfile dilate(const RadialProfile &v, double lambda) {
  detail::require(lambda > 0.0 && std::isfinite(lambda), "dilation factor must be positive");
  if (lambda == 1.0)
    return v;
  RadialProfile::Generator g;
  if (v.has_generator())
    g = [v, lambda](double r) { return v(r / lambda); };
  std::vector<cplx> vals(v.values().begin(), v.values().end());
  return RadialProfile(v.rule().scaled(lambda), std::move(vals), v.support_radius() * lambda,
                       v.label(), std::move(g));
}

// ---------------------------------------------------------------------------
// Standard profiles
// ---------------------------------------------------------------------------

using ParamMap = std::map<std::string, double>;

namespace detail {

inline double param(const ParamMap &m, const std::string &key, double fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

// Platform-independent uniform double in [0, 1) from a 64-bit engine.
inline double unit_uniform(std::mt19937_64 &eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

} // namespace detail

/// Piecewise-constant profile: value[j] on (edges[j], edges[j+1]].
inline RadialProfile step_profile(std::vector<double> edges, std::vector<cplx> levels,
                                  double max_panel_width, int nodes_per_panel,
                                  std::string label) {
  detail::require(edges.size() == levels.size() + 1 && !levels.empty(),
                  "step profile needs one more edge than levels");
  detail::require(edges.front() == 0.0, "step profile must start at 0");
  auto rule = make_rule_with_jumps(edges.back(), {edges.begin() + 1, edges.end() - 1},
                                   max_panel_width, nodes_per_panel);
  auto gen = [edges, levels](double r) -> cplx {
    for (std::size_t j = 0; j < levels.size(); ++j)
      if (r <= edges[j + 1])
        return levels[j];
    return 0.0;
  };
  return RadialProfile::from_function(rule, gen, edges.back(), std::move(label));
}

/// Catalogue of deterministic profiles.
///
///   square_well   depth, radius=1            v = -depth on [0, radius]
///   complex_well  g, alpha, radius=1         v = g e^{i alpha} on [0, radius]
///   gaussian      amplitude=1, width=1, cutoff=6*width
///   random_simple seed, levels=5, radius=1   random nonnegative steps
///
/// Shared keys: panels_per_unit (default 4), nodes_per_panel (default 16).
inline RadialProfile standard_profile(const std::string &name, const ParamMap &params) {
  using detail::param;
  const int npp = static_cast<int>(param(params, "nodes_per_panel", 16));
  const double width = 1.0 / param(params, "panels_per_unit", 4);
  if (name == "square_well") {
    const double R = param(params, "radius", 1.0);
    return step_profile({0.0, R}, {cplx(-param(params, "depth", 1.0))}, width, npp,
                        "square_well");
  }
  if (name == "complex_well") {
    const double R = param(params, "radius", 1.0);
    const cplx c = std::polar(param(params, "g", 1.0), param(params, "alpha", 0.0));
    return step_profile({0.0, R}, {c}, width, npp, "complex_well");
  }
  if (name == "gaussian") {
    const double a = param(params, "amplitude", 1.0);
    const double w = param(params, "width", 1.0);
    const double cut = param(params, "cutoff", 6.0 * w);
    auto rule = make_rule_with_jumps(cut, {}, width, npp);
    return RadialProfile::from_function(
        rule, [a, w](double r) { return cplx(a * std::exp(-(r / w) * (r / w))); }, cut,
        "gaussian");
  }
  if (name == "random_simple") {
    const auto seed = static_cast<std::uint64_t>(param(params, "seed", 0));
    const int levels = static_cast<int>(param(params, "levels", 5));
    const double R = param(params, "radius", 1.0);
    detail::require(levels >= 1, "random_simple needs levels >= 1");
    std::mt19937_64 eng(seed);
    std::vector<double> edges{0.0};
    std::vector<cplx> vals;
    double acc = 0.0;
    std::vector<double> raw(levels);
    for (auto &x : raw) {
      x = 0.25 + detail::unit_uniform(eng);
      acc += x;
    }
    for (int j = 0; j < levels; ++j) {
      edges.push_back(j == levels - 1 ? R : edges.back() + R * raw[j] / acc);
      vals.emplace_back(std::floor(1.0 + 8.0 * detail::unit_uniform(eng)));
    }
    return step_profile(edges, vals, width, npp, "random_simple");
  }
  throw invalid_argument("unknown profile name: " + name);
}

} // namespace radspec

#endif // RADSPEC_RADIAL_CORE_HPP
