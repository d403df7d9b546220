#ifndef RADSPEC_SCHATTEN_HPP
#define RADSPEC_SCHATTEN_HPP

//
// Singular values with multiplicities, Schatten norms and the two weak
// Schatten quasinorms
//   sup-form  sup_n n^{1/r} s_n
//   avg-form  sup_N N^{-1+1/r} sum_{n<=N} s_n
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <boost/math/special_functions/zeta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "errors.hpp"
#include "radial_core.hpp"

namespace radspec {

using Matrix = Eigen::MatrixXcd;

/// Multiset of singular values, stored as (s, mult) runs sorted descending.
class SingularSpectrum {
public:
  struct Entry {
    double s;
    std::uint64_t mult;
    bool operator==(const Entry &) const = default;
  };

  SingularSpectrum() = default;
  explicit SingularSpectrum(std::vector<Entry> entries) {
    for (const auto &e : entries)
      add(e.s, e.mult);
  }

  /// Insert s with multiplicity mult, keeping the run list sorted.
  void add(double s, std::uint64_t mult = 1) {
    detail::require(std::isfinite(s) && s >= 0.0, "singular values must be finite and >= 0");
    detail::require(mult >= 1, "multiplicity must be >= 1");
    auto it = std::lower_bound(entries_.begin(), entries_.end(), s,
                               [](const Entry &e, double v) { return e.s > v; });
    if (it != entries_.end() && it->s == s)
      it->mult += mult;
    else
      entries_.insert(it, Entry{s, mult});
  }

  void merge(const SingularSpectrum &o, std::uint64_t mult = 1) {
    std::vector<Entry> all;
    all.reserve(entries_.size() + o.entries_.size());
    all.insert(all.end(), entries_.begin(), entries_.end());
    for (auto e : o.entries_)
      all.push_back({e.s, e.mult * mult});
    std::stable_sort(all.begin(), all.end(), [](auto &a, auto &b) { return a.s > b.s; });
    entries_.clear();
    for (const auto &e : all) {
      if (!entries_.empty() && entries_.back().s == e.s)
        entries_.back().mult += e.mult;
      else
        entries_.push_back(e);
    }
  }

  const std::vector<Entry> &entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  double largest() const noexcept { return entries_.empty() ? 0.0 : entries_.front().s; }

  /// Number of singular values counted with multiplicity.
  std::uint64_t count() const noexcept {
    std::uint64_t n = 0;
    for (const auto &e : entries_)
      n += e.mult;
    return n;
  }

  /// Expanded list s_1 >= s_2 >= ... (for small spectra and tests).
  std::vector<double> expanded() const {
    std::vector<double> out;
    for (const auto &e : entries_)
      out.insert(out.end(), e.mult, e.s);
    return out;
  }

private:
  std::vector<Entry> entries_;
};

/// Singular values of a dense complex matrix (divide-and-conquer SVD).
inline SingularSpectrum svd_singular_values(const Matrix &m) {
  detail::require(m.allFinite(), "matrix has non-finite entries");
  SingularSpectrum out;
  if (m.size() == 0)
    return out;
  Eigen::BDCSVD<Matrix> svd(m);
  const auto &sv = svd.singularValues();
  std::vector<SingularSpectrum::Entry> e;
  e.reserve(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    e.push_back({sv[i], 1});
  return SingularSpectrum(std::move(e));
}

/// (sum mult * s^p)^{1/p}
inline double schatten_norm(const SingularSpectrum &spec, double p) {
  detail::require(p >= 1.0, "schatten_norm requires p >= 1");
  const double top = spec.largest();
  if (top == 0.0)
    return 0.0;
  double acc = 0.0;
  for (const auto &e : spec.entries())
    acc += static_cast<double>(e.mult) * std::pow(e.s / top, p);
  return top * std::pow(acc, 1.0 / p);
}

namespace detail {
// Suprema are taken in 50 digits and rounded once, so the two weak norms are
// correctly rounded and compare exactly where their true values tie.
using wide = boost::multiprecision::cpp_bin_float_50;
} // namespace detail

/// sup_n n^{1/r} s_n. Inside a run of equal values the product grows with n,
/// so run ends suffice.
inline double weak_schatten_sup(const SingularSpectrum &spec, double r) {
  detail::require(r > 2.0, "weak Schatten norms need r > 2");
  using detail::wide;
  const wide a = wide(1) / wide(r);
  wide best = 0, n = 0;
  for (const auto &e : spec.entries()) {
    n += e.mult;
    best = std::max(best, wide(pow(n, a) * wide(e.s)));
  }
  return best.convert_to<double>();
}

/// sup_N N^{-1+1/r} sum_{n<=N} s_n. Inside a run g(N) = A N^{a-1} + s N^a with
/// A >= 0 has a single interior minimum, so the run endpoints suffice.
inline double weak_schatten_avg(const SingularSpectrum &spec, double r) {
  detail::require(r > 2.0, "weak Schatten norms need r > 2");
  using detail::wide;
  const wide a = wide(1) / wide(r);
  wide best = 0, n0 = 0, sum0 = 0;
  for (const auto &e : spec.entries()) {
    const wide m = e.mult, s = e.s;
    const wide first = n0 + 1, last = n0 + m;
    best = std::max(best, wide(pow(first, a - 1) * (sum0 + s)));
    best = std::max(best, wide(pow(last, a - 1) * (sum0 + m * s)));
    n0 = last;
    sum0 += m * s;
  }
  return best.convert_to<double>();
}

/// C(r, p) = (sum_n n^{-p/r})^{1/p} = zeta(p/r)^{1/p}, so that
/// ||T||_p <= C(r, p) sup_n n^{1/r} s_n for r < p.
inline double weak_embedding_constant(double r, double p) {
  detail::require(r > 0.0 && p > r, "embedding constant needs 0 < r < p");
  return std::pow(boost::math::zeta(p / r), 1.0 / p);
}

/// CSV rows "s,mult".
inline std::string spectrum_csv(const SingularSpectrum &spec) {
  std::string out = "s,mult\n";
  char buf[64];
  for (const auto &e : spec.entries()) {
    std::snprintf(buf, sizeof buf, "%.17g,%llu\n", e.s, static_cast<unsigned long long>(e.mult));
    out += buf;
  }
  return out;
}

} // namespace radspec

#endif // RADSPEC_SCHATTEN_HPP
