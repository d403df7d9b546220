#ifndef RADSPEC_DECOMPOSITION_HPP
#define RADSPEC_DECOMPOSITION_HPP

//
// Horizontal dyadic layers and sparse interval families for nonnegative
// radial simple functions.
//
// Layer i collects the values in (H_{i+1}, H_i], where
//   H_i = inf{ t > 0 : |{W > t}| <= 2^{i-1} }
// and |.| is the d-dimensional measure of the radial set. A layer is cut into
// cells of length c on a fixed grid; the cells are then packed into families
// whose centers are (R N)^gamma separated (R = common radius, N = family size).
//
// Packing uses K rounds. In round m the current balls (radius R_m) are grouped
// by single linkage at distance D_m = (R_m n)^gamma. A group with at most S
// members, S = ceil(n^{1/K}), is dealt out over S families; larger groups are
// merged into one ball of radius R_{m+1} = R_m + (n-1) D_m / 2 for the next
// round. Large groups number fewer than 1/S of the balls, so K rounds suffice.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"
#include "radial_core.hpp"

namespace radspec {

struct Interval {
  double a, b;
};

/// sigma_{d-1} int_a^b r^{d-1} dr.
inline double shell_measure(Dimension d, double a, double b) {
  return sphere_area(d) * (std::pow(b, d.value()) - std::pow(a, d.value())) / d.value();
}

struct Piece {
  double value;
  std::vector<Interval> support; // sorted, disjoint
  double d_measure;
};

/// Nonnegative radial simple function: distinct positive values on disjoint
/// unions of intervals.
class SimpleFunction {
public:
  SimpleFunction() = default;

  SimpleFunction(Dimension d, std::vector<Piece> pieces) : d_(d), pieces_(std::move(pieces)) {
    std::vector<Interval> all;
    std::vector<double> values;
    for (auto &p : pieces_) {
      detail::require(p.value > 0.0 && std::isfinite(p.value), "piece values must be positive");
      detail::require(!p.support.empty(), "piece support must not be empty");
      std::sort(p.support.begin(), p.support.end(),
                [](const Interval &x, const Interval &y) { return x.a < y.a; });
      p.d_measure = 0.0;
      for (const auto &iv : p.support) {
        detail::require(iv.a >= 0.0 && iv.b > iv.a && std::isfinite(iv.b),
                        "intervals must satisfy 0 <= a < b");
        p.d_measure += shell_measure(d, iv.a, iv.b);
        all.push_back(iv);
      }
      values.push_back(p.value);
    }
    std::sort(values.begin(), values.end());
    detail::require(std::adjacent_find(values.begin(), values.end()) == values.end(),
                    "piece values must be distinct");
    std::sort(all.begin(), all.end(), [](const Interval &x, const Interval &y) { return x.a < y.a; });
    for (std::size_t i = 1; i < all.size(); ++i)
      detail::require(all[i - 1].b <= all[i].a, "piece supports must be disjoint");
    std::sort(pieces_.begin(), pieces_.end(),
              [](const Piece &x, const Piece &y) { return x.value > y.value; });
  }

  /// levels[j] on (edges[j], edges[j+1]]; zero levels are dropped and equal
  /// levels share one piece.
  static SimpleFunction from_steps(Dimension d, const std::vector<double> &edges,
                                   const std::vector<double> &levels) {
    detail::require(edges.size() == levels.size() + 1, "need one more edge than levels");
    std::vector<Piece> pieces;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      detail::require(levels[j] >= 0.0, "levels must be nonnegative");
      detail::require(edges[j + 1] > edges[j], "edges must increase");
      if (levels[j] == 0.0)
        continue;
      auto it = std::find_if(pieces.begin(), pieces.end(),
                             [&](const Piece &p) { return p.value == levels[j]; });
      if (it == pieces.end()) {
        pieces.push_back({levels[j], {}, 0.0});
        it = pieces.end() - 1;
      }
      if (!it->support.empty() && it->support.back().b == edges[j])
        it->support.back().b = edges[j + 1];
      else
        it->support.push_back({edges[j], edges[j + 1]});
    }
    return SimpleFunction(d, std::move(pieces));
  }

  Dimension dimension() const noexcept { return d_; }
  const std::vector<Piece> &pieces() const noexcept { return pieces_; }
  bool empty() const noexcept { return pieces_.empty(); }

  double operator()(double r) const {
    for (const auto &p : pieces_)
      for (const auto &iv : p.support)
        if (r > iv.a && r <= iv.b)
          return p.value;
    return 0.0;
  }

  double measure() const {
    double m = 0.0;
    for (const auto &p : pieces_)
      m += p.d_measure;
    return m;
  }

  double max_value() const { return pieces_.empty() ? 0.0 : pieces_.front().value; }

private:
  Dimension d_{3};
  std::vector<Piece> pieces_; // decreasing values
};

/// Seeded simple function with edges on the grid c Z and values 2^{u}, u in [-3, 3).
inline SimpleFunction random_simple_function(Dimension d, std::uint64_t seed, double cell = 1.0 / 16,
                                             int max_runs = 24, int max_levels = 6) {
  std::mt19937_64 eng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return lo + static_cast<int>(detail::unit_uniform(eng) * (hi - lo + 1));
  };
  const int nlev = uniform_int(1, max_levels);
  std::vector<double> level_set(nlev);
  for (auto &v : level_set)
    v = std::exp2(6.0 * detail::unit_uniform(eng) - 3.0);
  const int runs = uniform_int(1, max_runs);
  std::vector<double> edges{0.0};
  std::vector<double> levels;
  long long pos = uniform_int(0, 8);
  if (pos > 0) {
    edges.push_back(pos * cell);
    levels.push_back(0.0);
  }
  for (int j = 0; j < runs; ++j) {
    pos += uniform_int(1, 6);
    edges.push_back(pos * cell);
    levels.push_back(level_set[uniform_int(0, nlev - 1)]);
    if (detail::unit_uniform(eng) < 0.4) {
      pos += uniform_int(1, 40);
      edges.push_back(pos * cell);
      levels.push_back(0.0);
    }
  }
  return SimpleFunction::from_steps(d, edges, levels);
}

// ---------------------------------------------------------------------------
// Horizontal layers
// ---------------------------------------------------------------------------

struct Layer {
  int i;
  double H;      // H_i
  double H_next; // H_{i+1}
  SimpleFunction layer;
};

namespace detail {

// Distinct values (decreasing) and cumulative measures |{W >= v_j}|.
struct Distribution {
  std::vector<double> v, M;

  explicit Distribution(const SimpleFunction &w) {
    double acc = 0.0;
    for (const auto &p : w.pieces()) {
      acc += p.d_measure;
      v.push_back(p.value);
      M.push_back(acc);
    }
  }

  // inf{t > 0 : |{W > t}| <= 2^{i-1}}
  double H(int i) const {
    const double cap = std::ldexp(1.0, i - 1);
    std::size_t j = 0; // number of values whose level set fits under cap
    while (j < M.size() && M[j] <= cap)
      ++j;
    return j == v.size() ? 0.0 : v[j];
  }

  // largest i with 2^{i-1} < |{W = max}|
  int first_index() const {
    int i = std::ilogb(M.front()) + 2;
    while (!(std::ldexp(1.0, i - 1) < M.front()))
      --i;
    return i;
  }
};

} // namespace detail

/// Layers i = i_0, i_0 + 1, ... up to the last nonempty one; i_0 is the first
/// index with a nonempty layer and may be negative. Empty intermediate layers
/// are kept.
inline std::vector<Layer> horizontal_layers(const SimpleFunction &w) {
  std::vector<Layer> out;
  if (w.empty())
    return out;
  const detail::Distribution dist(w);
  for (int i = dist.first_index();; ++i) {
    const double hi = dist.H(i), lo = dist.H(i + 1);
    std::vector<Piece> sel;
    for (const auto &p : w.pieces())
      if (p.value <= hi && p.value > lo)
        sel.push_back(p);
    out.push_back({i, hi, lo, SimpleFunction(w.dimension(), std::move(sel))});
    if (lo == 0.0)
      break;
  }
  return out;
}

struct LorentzCheck {
  double lhs; // || H_i 2^{i/q} ||_{l^r}
  double rhs; // ||W||_{L^{q,r}}
  double ratio;
};

/// Both sides of the dyadic characterisation of L^{q,r}. Indices below i_0
/// (where H_i = max W) are summed in closed form.
inline LorentzCheck lorentz_equivalence_check(const SimpleFunction &w, double q, double r) {
  detail::require(q >= 1.0 && r >= 1.0, "lorentz check needs q, r >= 1");
  if (w.empty())
    return {0.0, 0.0, std::numeric_limits<double>::quiet_NaN()};
  const detail::Distribution dist(w);
  const int i0 = dist.first_index();
  const double x = std::exp2(-r / q);
  double lhs = std::pow(w.max_value(), r) * std::exp2(i0 * r / q) * x / (1.0 - x);
  for (int i = i0;; ++i) {
    const double h = dist.H(i);
    if (h == 0.0)
      break;
    lhs += std::pow(h * std::exp2(static_cast<double>(i) / q), r);
  }
  lhs = std::pow(lhs, 1.0 / r);
  const double e = r / q;
  double acc = 0.0, s0 = 0.0;
  for (const auto &p : w.pieces()) {
    const double s1 = s0 + p.d_measure;
    acc += std::pow(p.value, r) * (q / r) * (std::pow(s1, e) - std::pow(s0, e));
    s0 = s1;
  }
  const double rhs = std::pow(acc, 1.0 / r);
  return {lhs, rhs, lhs / rhs};
}

// ---------------------------------------------------------------------------
// Sparse families
// ---------------------------------------------------------------------------

struct Fragment {
  double value;
  Interval iv;
};

struct Member {
  double center;
  std::vector<Fragment> fragments; // W_{ijk}
};

struct Family {
  int level;          // packing round
  double radius;      // common radius R
  double separation;  // (R n)^gamma used to build it
  std::vector<Member> members;
};

struct SparseCounts {
  std::uint64_t n = 0;      // N_i: cells
  std::uint64_t families = 0; // K_i
  double radius = 0.0;      // R_i: largest family radius
  double C1 = 0.0, C2 = 0.0;
  double N_bound = 0.0;     // C2 2^i
  double K_bound = 0.0;     // C1 K 2^{i/K}
  double R_bound = 0.0;     // rho_{K-1}(C2 2^i)
  double R_reference_scale = 0.0; // R_i / 2^{i gamma^K}, recorded only
  bool n_ok = false, k_ok = false, r_ok = false;
  bool conforms() const { return n_ok && k_ok && r_ok; }
};

struct SparseDecomposition {
  int i;
  int K;
  double gamma;
  double cell;
  std::vector<Family> families;
  SparseCounts counts;
};

namespace detail {

// rho_0 = c/2, rho_{m+1} = rho_m + (n-1)(rho_m n)^gamma / 2.
inline double radius_recursion(double cell, double n, double gamma, int rounds) {
  double rho = 0.5 * cell;
  for (int m = 0; m < rounds; ++m)
    rho += 0.5 * (n - 1.0) * std::pow(rho * n, gamma);
  return rho;
}

inline std::uint64_t family_width(std::uint64_t n, int K) {
  std::uint64_t S = 1;
  auto pow_ge = [&](std::uint64_t s) {
    unsigned __int128 p = 1;
    for (int k = 0; k < K; ++k) {
      p *= s;
      if (p >= n)
        return true;
    }
    return p >= n;
  };
  while (!pow_ge(S))
    ++S;
  return S;
}

} // namespace detail

/// Cells of length `cell` packed into (R N)^gamma-separated families.
inline SparseDecomposition sparse_decompose(const Layer &layer, int K, double gamma,
                                            double cell = 1.0 / 16) {
  detail::require(K >= 1, "K must be >= 1");
  detail::require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  detail::require(cell > 0.0 && std::isfinite(cell), "cell must be positive");
  SparseDecomposition out{layer.i, K, gamma, cell, {}, {}};
  const Dimension d = layer.layer.dimension();

  // cells: grid index -> fragments
  std::vector<std::pair<long long, Fragment>> frags;
  for (const auto &p : layer.layer.pieces())
    for (const auto &iv : p.support) {
      const long long j0 = static_cast<long long>(std::floor(iv.a / cell));
      const long long j1 = static_cast<long long>(std::ceil(iv.b / cell));
      for (long long j = j0; j < j1; ++j) {
        const double a = std::max(iv.a, j * cell), b = std::min(iv.b, (j + 1) * cell);
        if (b > a)
          frags.push_back({j, {p.value, {a, b}}});
      }
    }
  std::sort(frags.begin(), frags.end(), [](const auto &x, const auto &y) {
    return x.first != y.first ? x.first < y.first : x.second.iv.a < y.second.iv.a;
  });
  std::vector<Member> balls;
  for (const auto &[j, f] : frags) {
    const double c = (j + 0.5) * cell;
    if (balls.empty() || balls.back().center != c)
      balls.push_back({c, {}});
    balls.back().fragments.push_back(f);
  }
  const std::uint64_t n = balls.size();
  const double nd = static_cast<double>(n);
  const std::uint64_t S = detail::family_width(n, K);

  double R = 0.5 * cell, Rmax = 0.0;
  for (int m = 0; !balls.empty(); ++m) {
    if (m >= K)
      throw accuracy_error("sparse packing did not finish in K rounds");
    const double D = std::pow(R * nd, gamma);
    std::vector<Family> fams(S, Family{m, R, D, {}});
    std::vector<Member> next;
    std::size_t start = 0;
    for (std::size_t e = 1; e <= balls.size(); ++e) {
      if (e < balls.size() && balls[e].center - balls[e - 1].center < D)
        continue;
      const std::size_t size = e - start;
      if (size <= S) {
        for (std::size_t t = 0; t < size; ++t)
          fams[t].members.push_back(std::move(balls[start + t]));
      } else {
        Member big{0.5 * (balls[start].center + balls[e - 1].center), {}};
        for (std::size_t t = start; t < e; ++t)
          for (auto &f : balls[t].fragments)
            big.fragments.push_back(f);
        next.push_back(std::move(big));
      }
      start = e;
    }
    for (auto &f : fams)
      if (!f.members.empty()) {
        Rmax = std::max(Rmax, R);
        out.families.push_back(std::move(f));
      }
    balls = std::move(next);
    R = R + 0.5 * (nd - 1.0) * D;
  }

  auto &c = out.counts;
  c.n = n;
  c.families = out.families.size();
  c.radius = Rmax;
  c.C2 = d.value() / (sphere_area(d) * std::pow(cell, d.value()));
  c.C1 = 2.0 * std::pow(c.C2, 1.0 / K);
  c.N_bound = c.C2 * std::ldexp(1.0, layer.i);
  c.K_bound = c.C1 * K * std::exp2(static_cast<double>(layer.i) / K);
  c.R_bound = detail::radius_recursion(cell, std::max(c.N_bound, 1.0), gamma, K - 1);
  c.R_reference_scale = Rmax / std::exp2(layer.i * std::pow(gamma, K));
  c.n_ok = static_cast<double>(n) <= c.N_bound;
  c.k_ok = n == 0 || static_cast<double>(c.families) <= c.K_bound;
  c.r_ok = Rmax <= c.R_bound;
  return out;
}

struct SparseCheck {
  bool is_sparse;
  double min_gap; // +inf for a single member
  double required;
};

/// Pairwise center gaps against (R N)^gamma, N = family size.
inline SparseCheck verify_sparse(std::vector<double> centers, double radius, double gamma) {
  detail::require(radius > 0.0 && gamma > 0.0, "radius and gamma must be positive");
  std::sort(centers.begin(), centers.end());
  const double N = static_cast<double>(centers.size());
  const double req = std::pow(radius * N, gamma);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < centers.size(); ++i)
    gap = std::min(gap, centers[i] - centers[i - 1]);
  return {centers.size() <= 1 || gap >= req, gap, req};
}

inline SparseCheck verify_sparse(const Family &f, double gamma) {
  std::vector<double> c;
  for (const auto &m : f.members)
    c.push_back(m.center);
  return verify_sparse(c, f.radius, gamma);
}

struct Ball {
  double center, radius;
};

struct SeparationSum {
  double value;       // sum_k (1 + dist(B_k, B_ref))^{-a}
  double bound;       // 1 + (N-1)(1 + max(0, D/2 - R - R_ref))^{-a}
  double quoted_bound; // 1 + 2N (N R)^{-gamma a}
  bool quoted_form_holds;
  int near_members;   // centers closer than D/2 to the reference center
  double slack;       // bound - value
};

/// Sum over a sparse family of (1 + ball distance to the reference)^{-a}.
/// At most one member can have its center within D/2 = (R N)^gamma / 2 of the
/// reference center; the others are at ball distance >= D/2 - R - R_ref.
inline SeparationSum separation_sum(const std::vector<Ball> &family, double gamma, double a,
                                    const Ball &ref) {
  detail::require(!family.empty(), "family must not be empty");
  detail::require(a > 0.0, "exponent must be positive");
  const double R = family.front().radius;
  std::vector<double> centers;
  for (const auto &b : family) {
    detail::require(b.radius == R, "family radii must be equal");
    centers.push_back(b.center);
  }
  detail::require(verify_sparse(centers, R, gamma).is_sparse, "family is not sparse");
  const double N = static_cast<double>(family.size());
  const double D = std::pow(R * N, gamma);
  SeparationSum s{0.0, 0.0, 0.0, false, 0, 0.0};
  for (const auto &b : family) {
    const double cd = std::abs(b.center - ref.center);
    s.value += std::pow(1.0 + std::max(0.0, cd - b.radius - ref.radius), -a);
    if (cd < 0.5 * D)
      ++s.near_members;
  }
  s.bound = 1.0 + (N - 1.0) * std::pow(1.0 + std::max(0.0, 0.5 * D - R - ref.radius), -a);
  s.quoted_bound = 1.0 + 2.0 * N * std::pow(R * N, -gamma * a);
  s.quoted_form_holds = s.value <= s.quoted_bound;
  s.slack = s.bound - s.value;
  if (s.near_members > 1 || s.value > s.bound * (1 + 1e-14))
    throw accuracy_error("separation estimate violated");
  return s;
}

// ---------------------------------------------------------------------------
// Full tree
// ---------------------------------------------------------------------------

struct DecompositionTree {
  std::vector<Layer> layers;
  std::vector<SparseDecomposition> sparse; // one per layer
  int K;
  double gamma;
  double cell;
};

inline DecompositionTree decompose(const SimpleFunction &w, int K = 3, double gamma = 2.0,
                                   double cell = 1.0 / 16) {
  DecompositionTree t{horizontal_layers(w), {}, K, gamma, cell};
  for (const auto &l : t.layers)
    t.sparse.push_back(sparse_decompose(l, K, gamma, cell));
  return t;
}

struct TreeAudit {
  bool reconstruction = true; // fragments tile the pieces of W exactly
  bool layer_measure = true;  // |supp W_i| <= 2^i
  bool separation = true;     // every family is sparse
  bool counts = true;         // N_i, K_i, R_i within the recorded bounds
  bool all() const { return reconstruction && layer_measure && separation && counts; }
};

/// Exact checks of a decomposition against its source.
inline TreeAudit audit(const SimpleFunction &w, const DecompositionTree &t) {
  TreeAudit a;
  for (const auto &l : t.layers)
    a.layer_measure = a.layer_measure && l.layer.measure() <= std::ldexp(1.0, l.i);

  std::vector<Fragment> frags;
  for (const auto &s : t.sparse) {
    for (const auto &f : s.families) {
      a.separation = a.separation && verify_sparse(f, t.gamma).is_sparse;
      for (const auto &m : f.members)
        for (const auto &fr : m.fragments) {
          a.reconstruction = a.reconstruction && std::abs(fr.iv.a - m.center) <= f.radius &&
                             std::abs(fr.iv.b - m.center) <= f.radius;
          frags.push_back(fr);
        }
    }
    a.counts = a.counts && s.counts.conforms();
  }
  // per piece: fragments with its value must tile its support end to end
  for (const auto &p : w.pieces()) {
    std::vector<Interval> ivs;
    for (const auto &f : frags)
      if (f.value == p.value)
        ivs.push_back(f.iv);
    std::sort(ivs.begin(), ivs.end(), [](const Interval &x, const Interval &y) { return x.a < y.a; });
    std::vector<Interval> merged;
    for (const auto &iv : ivs) {
      if (!merged.empty() && merged.back().b == iv.a)
        merged.back().b = iv.b;
      else
        merged.push_back(iv);
    }
    bool same = merged.size() == p.support.size();
    for (std::size_t k = 0; same && k < merged.size(); ++k)
      same = merged[k].a == p.support[k].a && merged[k].b == p.support[k].b;
    a.reconstruction = a.reconstruction && same;
  }
  std::size_t expected = 0;
  for (const auto &f : frags)
    expected += std::any_of(w.pieces().begin(), w.pieces().end(),
                            [&](const Piece &p) { return p.value == f.value; });
  a.reconstruction = a.reconstruction && expected == frags.size();
  return a;
}

} // namespace radspec

#endif // RADSPEC_DECOMPOSITION_HPP
