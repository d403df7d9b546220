#include <catch_amalgamated.hpp>

#include <radspec/spectral_measure.hpp>

#include <cmath>
#include <numbers>

using namespace radspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kPi = std::numbers::pi;
const Dimension d3(3);

RadialProfile ball(double R = 1.0) {
  return standard_profile("square_well", {{"depth", -1.0}, {"radius", R}});
}

RadialProfile gauss(double width, double amp = 1.0) {
  return standard_profile("gaussian", {{"width", width}, {"amplitude", amp}});
}

// Frequency-lambda Schatten norm assembled directly from dense sector matrices
// (no dilation), on a rule fine enough for the oscillation at lambda.
double dense_norm(const RadialProfile &w1, const RadialProfile &w2, double p, double lambda,
                  int k_max) {
  const auto rule = w1.rule().refined(0.5 / lambda);
  const auto a = w1.resampled(rule), b = w2.resampled(rule);
  double acc = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    const SectorOrder o(d3, k);
    // rank one, so the Frobenius norm is the singular value
    const double s = spectral_sector_matrix(a, b, o, lambda).norm();
    acc += static_cast<double>(dim_harmonics(d3, k)) * std::pow(s, p);
  }
  return std::pow(acc, 1.0 / p);
}

} // namespace

TEST_CASE("sector_singular_value") {
  const SectorOrder s0(d3, 0);
  CHECK(sector_singular_value(ball(), ball().scaled(0.0), s0, 1.0) == 0.0);
  const double closed = 4 * kPi * kPi * (2 - std::sin(2.0)) / std::pow(2 * kPi, 3);
  CHECK_THAT(sector_singular_value(ball(), ball(), s0, 1.0), WithinRel(closed, 1e-9));
  CHECK_THROWS_AS(sector_singular_value(ball(), ball(), s0, 0.0), invalid_argument);

  SECTION("agrees with c_d lambda_k for w = sqrt(v)") {
    const auto v = gauss(0.9, 2.0);
    const auto w = v.mapped([](cplx x) { return std::sqrt(x); }, "sqrt");
    for (int k : {0, 1, 4, 9}) {
      const SectorOrder o(d3, k);
      CHECK_THAT(sector_singular_value(w, w, o, 1.0),
                 WithinRel(spectral_cd(d3) * sector_eigenvalue(v, o).lambda.real(), 1e-9));
    }
  }
  SECTION("symmetric in the two weights") {
    const auto a = gauss(0.7), b = ball(1.5).scaled(cplx(0.0, 2.0));
    for (int k : {0, 3})
      for (double lam : {0.3, 1.0, 5.0})
        CHECK(sector_singular_value(a, b, SectorOrder(d3, k), lam) ==
              sector_singular_value(b, a, SectorOrder(d3, k), lam));
  }
}

TEST_CASE("sector blocks have rank one") {
  const auto w1 = gauss(0.8), w2 = gauss(1.2, 0.5).resampled(w1.rule());
  for (int k : {0, 1, 2, 5})
    for (double lam : {0.5, 1.0, 3.0}) {
      const auto sv = svd_singular_values(spectral_sector_matrix(w1, w2, SectorOrder(d3, k), lam))
                          .expanded();
      CHECK(sv[1] < 1e-10 * sv[0]);
      CHECK_THAT(sv[0], WithinRel(sector_singular_value(w1, w2, SectorOrder(d3, k), lam), 1e-10));
    }
}

TEST_CASE("completeness of the spectral measure (Hankel closure)") {
  // int_0^L c_3 lambda^2 psi_0(lambda r) psi_0(lambda r') dlambda applied to
  // f(r') r'^2 dr' reproduces f for large L.
  auto f = [](double r) { return r < 1.0 ? std::pow(1.0 - r * r, 4) : 0.0; };
  const double L = 100.0;
  const SectorOrder s0(d3, 0);
  const double cd = spectral_cd(d3);
  const auto &gl = gauss_legendre(16);
  std::vector<double> rr, rw;
  for (int p = 0; p < 64; ++p)
    for (int i = 0; i < 16; ++i) {
      rr.push_back((p + 0.5 + 0.5 * gl.x[i]) / 64.0);
      rw.push_back(0.5 * gl.w[i] / 64.0);
    }
  const std::vector<double> probes{0.1, 0.35, 0.6, 0.9};
  std::vector<double> val(probes.size(), 0.0);
  const int panels = 200;
  const double h = L / panels;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < 16; ++i) {
      const double lam = (p + 0.5 + 0.5 * gl.x[i]) * h, wl = 0.5 * h * gl.w[i];
      double inner = 0.0;
      for (std::size_t j = 0; j < rr.size(); ++j)
        inner += rw[j] * psi_k(s0, lam * rr[j]) * f(rr[j]) * rr[j] * rr[j];
      for (std::size_t m = 0; m < probes.size(); ++m)
        val[m] += wl * cd * lam * lam * psi_k(s0, lam * probes[m]) * inner;
    }
  for (std::size_t m = 0; m < probes.size(); ++m)
    CHECK_THAT(val[m], WithinAbs(f(probes[m]), 1e-4));
}

TEST_CASE("sandwich_schatten") {
  CHECK(sandwich_schatten(ball(), ball().scaled(0.0), d3, 3.0, 1.0, 8).norm == 0.0);

  SECTION("frequency scaling through dense assembly") {
    const auto common = make_rule_with_jumps(4.8, {1.2}, 0.25, 16);
    const auto w1 = gauss(0.8).resampled(common), w2 = ball(1.2).resampled(common);
    const double p = 3.5;
    for (double lam : {0.5, 2.0, 4.0}) {
      const auto est = sandwich_schatten(w1, w2, d3, p, lam, 48);
      const double direct = dense_norm(w1, w2, p, lam, est.k_max_used);
      CHECK_THAT(est.norm, WithinRel(direct, 1e-7));
      const auto at1 = sandwich_schatten(dilate(w1, lam), dilate(w2, lam), d3, p, 1.0, 48);
      CHECK_THAT(est.norm, WithinRel(at1.norm / lam, 1e-12));
    }
  }
  SECTION("k_max doubling") {
    const auto a = sandwich_schatten(gauss(0.6), gauss(0.6), d3, 3.0, 1.0, 32);
    const auto b = sandwich_schatten(gauss(0.6), gauss(0.6), d3, 3.0, 1.0, 64);
    CHECK_THAT(b.norm, WithinRel(a.norm, 1e-8));
    CHECK(b.norm <= a.norm + a.tail_bound);
  }
  SECTION("tail bound is certified") {
    TailControl off;
    off.extend = false;
    const auto low = sandwich_schatten(ball(3.0), ball(2.0), d3, 2.5, 1.0, 3, off);
    const auto high = sandwich_schatten(ball(3.0), ball(2.0), d3, 2.5, 1.0, 64);
    CHECK(high.norm <= low.norm + low.tail_bound);
    CHECK(high.norm > low.norm);
  }
}

TEST_CASE("theorem3_certificate") {
  const ExponentConfig cfg(1.5, 3.0, d3, ExponentConfig::Mode::relaxed);
  const auto w = gauss(0.8);
  const auto one = theorem3_certificate(w, w, cfg, {1.0}, 32);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.rows[0].ratio > 0.0);
  CHECK(one.rows[0].ratio == one.rows[0].ratio_alt);

  const auto cov = theorem3_certificate(w, w, cfg, {0.25, 0.5, 1.0, 2.0, 4.0}, 32, true);
  CHECK(cov.variation < 1e-7);
  CHECK_FALSE(cov.flagged);
  // the alternative power is off by exactly one factor of lambda
  for (const auto &r : cov.rows)
    CHECK_THAT(r.ratio_alt / r.ratio, WithinRel(r.lambda, 1e-12));

  SECTION("growing supports stay near the median") {
    std::vector<double> ratios;
    for (double R : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      const auto c = theorem3_certificate(ball(R), ball(R), cfg, {1.0}, 64);
      ratios.push_back(c.rows[0].ratio);
    }
    auto sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[2];
    for (double r : ratios)
      CHECK(r < 10.0 * median);
  }
}
