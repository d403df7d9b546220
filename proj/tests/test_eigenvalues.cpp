#include <catch_amalgamated.hpp>

#include <radspec/eigenvalues.hpp>

#include "well_oracle.hpp"

#include <cmath>
#include <numbers>

using namespace radspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Dimension d3(3);

RadialProfile well(cplx c, double a = 1.0, double width = 0.25, int npp = 16) {
  return step_profile({0.0, a}, {c}, width, npp, "well");
}

Eigenvalue synthetic(cplx z, int k = 0) { return {z, k, 0.0, 1, 1}; }

struct RealCase {
  int d;
  double g, a;
};

// Oracle bound states below -floor, as (k, z), for v = -g 1_{[0,a]}.
std::vector<std::pair<int, double>> oracle_states(const RealCase &c, int k_max, double floor) {
  std::vector<std::pair<int, double>> out;
  for (int k = 0; k <= k_max; ++k)
    for (double z : oracle::real_well_roots(SectorOrder(Dimension(c.d), k).nu(), c.g, c.a)) {
      REQUIRE(std::abs(z + floor) > 0.5 * floor);
      if (z < -floor)
        out.emplace_back(k, z);
    }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST_CASE("bs_matrix of zero potential vanishes", "[eigenvalues]") {
  const auto v = well(0.0);
  const auto m = bs_matrix(v, SectorOrder(d3, 1), SpectralPoint(cplx(-1.0, 0.0)));
  CHECK(m.m.norm() == 0.0);
}

TEST_CASE("bs_matrix of a real attractive well has real spectrum at z = -1", "[eigenvalues]") {
  const auto v = step_profile({0.0, 0.5, 1.5}, {-3.0, -1.0}, 0.25, 16, "v");
  for (int k : {0, 2}) {
    const auto m = bs_matrix(v, SectorOrder(d3, k), SpectralPoint(cplx(-1.0, 0.0)));
    Eigen::ComplexEigenSolver<Matrix> es(m.m, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-8);
      CHECK(es.eigenvalues()[i].real() < 1e-8);
    }
  }
}

TEST_CASE("smallest eigenvalue of 1 + K is stable under refinement", "[eigenvalues]") {
  const auto coarse = well(cplx(-8.0, 2.0), 1.0, 0.25, 16);
  const auto fine = well(cplx(-8.0, 2.0), 1.0, 0.125, 20);
  for (cplx z : {cplx(-1.0, 0.0), cplx(-2.0, 1.5), cplx(1.0, -0.5)}) {
    auto smallest = [&](const RadialProfile &v) {
      const auto m = bs_matrix(v, SectorOrder(d3, 0), SpectralPoint(z));
      Eigen::ComplexEigenSolver<Matrix> es(m.m + Matrix::Identity(m.m.rows(), m.m.cols()), false);
      return es.eigenvalues().cwiseAbs().minCoeff();
    };
    CHECK_THAT(smallest(fine), WithinAbs(smallest(coarse), 1e-7));
  }
}

TEST_CASE("find_eigenvalues on zero potential is empty", "[eigenvalues]") {
  BSConfig cfg;
  const auto s = find_eigenvalues(well(0.0), cfg);
  CHECK(s.eigenvalues.empty());
  CHECK(s.complete());
}

TEST_CASE("find_eigenvalues validates the configuration", "[eigenvalues]") {
  BSConfig cfg;
  cfg.margin = 1e-7;
  CHECK_THROWS_AS(find_eigenvalues(well(-1.0), cfg), invalid_argument);
  cfg = BSConfig{};
  cfg.search_box = {-1.0, -2.0, -1.0, 1.0};
  CHECK_THROWS_AS(find_eigenvalues(well(-1.0), cfg), invalid_argument);
}

TEST_CASE("single s-wave bound state matches the transcendental equation", "[eigenvalues]") {
  const double g = 4.0;
  const auto roots = oracle::real_well_roots(0.5, g, 1.0);
  REQUIRE(roots.size() == 1);
  const double kappa = std::sqrt(-roots[0]), q = std::sqrt(g - kappa * kappa);
  CHECK_THAT(q / std::tan(q), WithinAbs(-kappa, 1e-12));

  BSConfig cfg;
  cfg.d = d3;
  cfg.k_max = 2;
  cfg.search_box = {-g - 1.0, -0.01, -0.5, 0.5};
  const auto s = find_eigenvalues(well(-g), cfg);
  REQUIRE(s.complete());
  REQUIRE(s.eigenvalues.size() == 1);
  const auto &e = s.eigenvalues[0];
  CHECK(e.k == 0);
  CHECK(e.winding == 1);
  CHECK(e.dim == 1);
  CHECK(e.residual <= 1e-8);
  CHECK_THAT(e.z.real(), WithinAbs(roots[0], 1e-8));
  CHECK_THAT(e.z.imag(), WithinAbs(0.0, 1e-8));
}

TEST_CASE("real wells: Birman-Schwinger roots equal the oracle set", "[eigenvalues]") {
  const std::vector<RealCase> cases{{3, 10.0, 1.0}, {3, 30.0, 1.0}, {2, 8.0, 1.0},
                                    {4, 20.0, 1.0}, {3, 12.0, 1.5}};
  const double floor = 0.01;
  for (const auto &c : cases) {
    CAPTURE(c.d, c.g, c.a);
    const auto expect = oracle_states(c, 8, floor);
    BSConfig cfg;
    cfg.d = Dimension(c.d);
    cfg.k_max = 8;
    cfg.search_box = {-c.g - 1.0, -floor, -0.5, 0.5};
    const auto s = find_eigenvalues(well(-c.g, c.a), cfg);
    REQUIRE(s.complete());
    REQUIRE(s.eigenvalues.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(s.eigenvalues[i].k == expect[i].first);
      CHECK_THAT(s.eigenvalues[i].z.real(), WithinAbs(expect[i].second, 1e-8));
      CHECK(std::abs(s.eigenvalues[i].z.imag()) < 1e-8);
      CHECK(s.eigenvalues[i].dim == dim_harmonics(Dimension(c.d), expect[i].first));
    }
  }
}

TEST_CASE("complex wells match the shooting oracle", "[eigenvalues]") {
  const std::vector<std::pair<double, double>> cases{{10.0, 0.5}, {6.0, 0.3}, {15.0, 0.8}};
  for (const auto &[g, alpha] : cases) {
    CAPTURE(g, alpha);
    const cplx c = -g * std::polar(1.0, alpha);
    BSConfig cfg;
    cfg.d = d3;
    cfg.k_max = 6;
    cfg.search_box = {-g - 1.0, g, -g - 0.5, 0.5};
    const auto s = find_eigenvalues(well(c), cfg);
    REQUIRE(s.complete());
    // every bound state continued from the real well is found
    for (int l = 0; l <= 4; ++l)
      for (double z0 : oracle::real_well_roots(l + 0.5, g, 1.0)) {
        const auto z = oracle::complex_well_root(l, g, alpha, z0);
        REQUIRE(z);
        bool hit = false;
        for (const auto &e : s.eigenvalues)
          hit = hit || (e.k == l && std::abs(e.z - *z) < 1e-5 * std::max(1.0, std::abs(*z)));
        CHECK(hit);
      }
    // every reported root is a zero of the Jost function
    for (const auto &e : s.eigenvalues) {
      CAPTURE(e.k, e.z);
      const cplx kappa = SpectralPoint(e.z).kappa();
      const auto k = oracle::jost_root(e.k, c, kappa);
      REQUIRE(k);
      CHECK(std::abs(*k * *k - e.z) < 1e-5 * std::max(1.0, std::abs(e.z)));
    }
  }
}

TEST_CASE("conjugate potential conjugates the eigenvalue set", "[eigenvalues]") {
  const cplx c = -10.0 * std::polar(1.0, 0.5);
  BSConfig cfg;
  cfg.d = d3;
  cfg.k_max = 3;
  cfg.search_box = {-11.0, 10.0, -10.5, 10.5};
  const auto a = find_eigenvalues(well(c), cfg);
  const auto b = find_eigenvalues(well(std::conj(c)), cfg);
  REQUIRE(a.complete());
  REQUIRE(b.complete());
  REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
  REQUIRE(!a.eigenvalues.empty());
  for (const auto &e : a.eigenvalues) {
    bool hit = false;
    for (const auto &f : b.eigenvalues)
      hit = hit || (e.k == f.k && std::abs(std::conj(e.z) - f.z) < 1e-8);
    CHECK(hit);
  }
}

TEST_CASE("eigenvalues move continuously with the coupling", "[eigenvalues]") {
  BSConfig cfg;
  cfg.d = d3;
  cfg.k_max = 0;
  cfg.search_box = {-8.0, 4.0, -8.0, 0.5};
  const double dg = 0.1, alpha = 0.5;
  std::optional<cplx> prev;
  for (int s = 0; s <= 5; ++s) {
    const double g = 10.0 + s * dg;
    const auto set = find_eigenvalues(well(-g * std::polar(1.0, alpha)), cfg);
    REQUIRE(set.complete());
    REQUIRE(set.eigenvalues.size() == 1);
    if (prev)
      CHECK(std::abs(set.eigenvalues[0].z - *prev) <= 10.0 * dg);
    prev = set.eigenvalues[0].z;
  }
}

TEST_CASE("eigenvalues near the positive half-line are excluded and reported", "[eigenvalues]") {
  BSConfig cfg;
  cfg.d = d3;
  cfg.k_max = 0;
  cfg.margin = 0.05;
  cfg.search_box = {-5.0, 5.0, -1.0, 1.0};
  const auto s = find_eigenvalues(well(-4.0), cfg);
  REQUIRE(s.excluded.size() == 1);
  CHECK(s.excluded[0].im_min == -0.05);
  CHECK(s.excluded[0].im_max == 0.05);
  CHECK(s.excluded[0].re_min == -0.05);
  CHECK(s.eigenvalues.size() == 1);
}

TEST_CASE("unresolvable search depth is reported, not dropped", "[eigenvalues]") {
  BSConfig cfg;
  cfg.d = d3;
  cfg.k_max = 0;
  cfg.max_depth = 0;
  cfg.residual_tol = 0.0;
  cfg.search_box = {-11.0, -0.01, -0.5, 0.5};
  const auto s = find_eigenvalues(well(-10.0), cfg);
  CHECK(!s.complete());
  CHECK(s.eigenvalues.empty());
}

TEST_CASE("eigenvalue CSV", "[eigenvalues]") {
  EigenvalueSet s;
  CHECK(eigenvalues_csv(s) == "k,re,im,residual,winding\n");
  s.eigenvalues.push_back({cplx(-0.5, 0.25), 2, 1e-12, 1, 5});
  CHECK(eigenvalues_csv(s) == "k,re,im,residual,winding\n2,-0.5,0.25,1.000000e-12,1\n");
}

TEST_CASE("theorem1_lhs elementary values", "[eigenvalues]") {
  const ExponentConfig cfg(2.0, 4.5, d3);
  CHECK(theorem1_lhs({}, cfg) == 0.0);
  CHECK_THAT(theorem1_lhs({synthetic(-1.0)}, cfg), WithinRel(1.0, 1e-15));
  const std::vector<Eigenvalue> set{synthetic({-2.0, 1.0}), synthetic({3.0, -0.5}),
                                    synthetic({-0.1, -0.3})};
  std::vector<Eigenvalue> conj;
  for (auto e : set) {
    e.z = std::conj(e.z);
    conj.push_back(e);
  }
  CHECK_THAT(theorem1_lhs(conj, cfg), WithinRel(theorem1_lhs(set, cfg), 1e-15));

  // manual sum with the multiplicity dim H_k
  auto e = synthetic({-2.0, 1.0}, 1);
  e.dim = 3;
  const double x = 4.5 * (1.0 - 3.0 / 4.0) - 1.0;
  const double expect = std::pow(3.0 * std::sqrt(5.0) * std::pow(std::sqrt(5.0), x), 2.0 / 4.5);
  CHECK_THAT(theorem1_lhs({e}, cfg), WithinRel(expect, 1e-14));
}

TEST_CASE("theorem1_lhs scaling under z -> lambda^2 z", "[eigenvalues]") {
  const ExponentConfig cfg(2.25, 6.5, d3);
  const std::vector<Eigenvalue> set{synthetic({-2.0, 1.0}), synthetic({3.0, -0.5}),
                                    synthetic({-0.125, -0.375}), synthetic({0.5, 0.25})};
  for (double lambda : {0.5, 2.0, 4.0}) {
    std::vector<Eigenvalue> scaled;
    for (auto e : set) {
      e.z *= lambda * lambda;
      scaled.push_back(e);
    }
    const double sigma = 1.0 - 3.0 / (2.0 * cfg.q);
    const double expect = std::pow(lambda, 2.0 * cfg.p * sigma * cfg.q / cfg.p);
    CHECK_THAT(theorem1_lhs(scaled, cfg) / theorem1_lhs(set, cfg), WithinRel(expect, 1e-13));
    CHECK_THAT(expect, WithinRel(std::pow(lambda, 2.0 * cfg.q - 3.0), 1e-14));
  }
}

TEST_CASE("theorem1_lhs beta modification", "[eigenvalues]") {
  const ExponentConfig cfg(2.0, 4.5, d3);
  const std::vector<Eigenvalue> set{synthetic({-2.0, 1.0}), synthetic({3.0, -0.5})};
  CHECK(theorem1_lhs(set, cfg, 1.0) == theorem1_lhs(set, cfg));
  CHECK_THAT(theorem1_lhs({synthetic(-1.0)}, cfg, 0.5), WithinRel(1.0, 1e-15));
  double acc = 0.0;
  for (const auto &e : set)
    acc += std::pow(delta_dist(e.z), 0.5) * std::pow(std::abs(e.z), 0.5 * 4.5 * 0.25 - 1.0);
  CHECK_THAT(theorem1_lhs(set, cfg, 0.5), WithinRel(std::pow(acc, 2.0 / 2.25), 1e-14));
  CHECK_THROWS_AS(theorem1_lhs(set, cfg, 0.0), invalid_argument);
  CHECK_THROWS_AS(theorem1_lhs(set, cfg, 1.5), invalid_argument);
}

TEST_CASE("frank_functional", "[eigenvalues]") {
  SECTION("z = -1 gives lhs 1 for any exponents") {
    for (double p : {1.0, 3.0, 10.0})
      for (double sigma : {0.05, 0.3, 1.0}) {
        const FrankBoundParams fp(p, sigma, 0.1, 2.0);
        CHECK_THAT(frank_functional({synthetic(-1.0)}, fp).lhs, WithinRel(1.0, 1e-15));
      }
  }
  SECTION("wiring from the exponent pair reproduces the theorem exponent") {
    const ExponentConfig cfg(2.25, 6.5, d3);
    const auto fp = FrankBoundParams::from_config(cfg, 1e-9, 1.0);
    const double sigma = 1.0 - 3.0 / 4.5;
    CHECK_THAT(fp.sigma, WithinRel(sigma, 1e-15));
    REQUIRE(2.0 * fp.p * fp.sigma - 1.0 > 0.0);
    CHECK_THAT(fp.lhs_exponent(), WithinAbs(cfg.p * sigma - 1.0, 1e-9));
  }
  SECTION("negative gain gives exponent -1/2") {
    const FrankBoundParams fp(1.0, 0.2, 0.1, 3.0);
    CHECK(fp.gain() == 0.0);
    CHECK(fp.lhs_exponent() == -0.5);
    const auto f = frank_functional({synthetic({-4.0, 0.0}), synthetic({1.0, 2.0})}, fp);
    CHECK_THAT(f.lhs, WithinRel(4.0 * 0.5 + 2.0 / std::pow(5.0, 0.25), 1e-14));
    CHECK_THAT(f.rhs, WithinRel(std::pow(3.0, 1.0 / 0.4), 1e-14));
  }
  SECTION("positive gain rhs") {
    const FrankBoundParams fp(3.0, 0.5, 0.5, 2.0);
    CHECK_THAT(fp.gain(), WithinRel(2.5, 1e-15));
    CHECK_THAT(frank_functional({}, fp).rhs, WithinRel(std::pow(2.0, 3.5), 1e-14));
  }
  SECTION("validation") {
    CHECK_THROWS_AS(FrankBoundParams(0.5, 1.0, 0.1, 1.0), invalid_argument);
    CHECK_THROWS_AS(FrankBoundParams(2.0, 0.0, 0.1, 1.0), invalid_argument);
    CHECK_THROWS_AS(FrankBoundParams(2.0, 1.0, 0.0, 1.0), invalid_argument);
    CHECK_THROWS_AS(FrankBoundParams(2.0, 1.0, 0.1, -1.0), invalid_argument);
  }
}

TEST_CASE("sharpness_scan", "[eigenvalues]") {
  const ExponentConfig cfg(2.25, 6.5, d3);
  BSConfig bs;
  bs.d = d3;
  bs.k_max = 2;
  const double alpha = 0.5;
  ProfileFamily fam{
      [&](const std::vector<double> &x) { return well(-x[0] * std::polar(1.0, alpha)); },
      [&](const std::vector<double> &x) {
        return SearchBox{-x[0] - 1.0, x[0], -x[0] - 0.5, 0.5};
      },
      {2.0},
      {8.0}};

  SECTION("one member equals direct evaluation") {
    const auto rep = sharpness_scan(fam, {{5.0}}, cfg, bs, 1.0);
    REQUIRE(rep.trace.size() == 1);
    bs.search_box = fam.box({5.0});
    const auto v = fam.make({5.0});
    const auto eig = find_eigenvalues(v, bs);
    const double direct =
        theorem1_lhs(eig.eigenvalues, cfg) / std::pow(lq_norm(v, cfg.q, cfg.d), cfg.q);
    CHECK(rep.trace[0].complete);
    CHECK(rep.trace[0].eigenvalue_count == static_cast<int>(eig.eigenvalues.size()));
    CHECK_THAT(rep.trace[0].ratio, WithinRel(direct, 1e-14));
    CHECK(rep.best.ratio == rep.trace[0].ratio);
    CHECK(rep.max_over_min == 1.0);
  }
  SECTION("ascent respects the budget and never lowers the best ratio") {
    const auto rep = sharpness_scan(fam, {{3.0}, {6.0}}, cfg, bs, 0.5, 5);
    REQUIRE(rep.trace.size() == 2);
    CHECK(rep.ascent.size() <= 5);
    CHECK(rep.best.ratio >= std::max(rep.trace[0].ratio, rep.trace[1].ratio));
    for (const auto &s : rep.ascent) {
      CHECK(s.params[0] >= 2.0);
      CHECK(s.params[0] <= 8.0);
    }
    CHECK(std::isfinite(rep.trend_slope));
  }
  SECTION("failures are flagged rows") {
    ProfileFamily bad = fam;
    bad.box = [](const std::vector<double> &) { return SearchBox{1.0, 0.0, 0.0, 1.0}; };
    const auto rep = sharpness_scan(bad, {{3.0}}, cfg, bs, 1.0);
    REQUIRE(rep.trace.size() == 1);
    CHECK(!rep.trace[0].complete);
    CHECK(!rep.trace[0].failure.empty());
  }
  CHECK_THROWS_AS(sharpness_scan(fam, {{3.0}}, cfg, bs, 0.0), invalid_argument);
}
