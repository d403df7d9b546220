#include <catch_amalgamated.hpp>

#include <radspec/decomposition.hpp>

#include <cmath>
#include <numbers>

using namespace radspec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Dimension d3(3);

// largest radius b with measure(0, a) + measure(a, b) <= total
double radius_for(double a, double total) {
  const double before = a > 0.0 ? shell_measure(d3, 0.0, a) : 0.0;
  double b = std::cbrt(a * a * a + 3.0 * (total - before) / sphere_area(d3)) * (1 + 1e-15);
  while (before + shell_measure(d3, a, b) > total)
    b = std::nextafter(b, 0.0);
  return b;
}

Layer single_layer(const std::vector<double> &edges, const std::vector<double> &levels) {
  const auto w = SimpleFunction::from_steps(d3, edges, levels);
  const auto layers = horizontal_layers(w);
  REQUIRE(layers.size() == 1);
  return layers[0];
}

} // namespace

TEST_CASE("SimpleFunction") {
  const auto w = SimpleFunction::from_steps(d3, {0.0, 1.0, 2.0, 3.0, 4.0}, {2.0, 0.0, 2.0, 5.0});
  REQUIRE(w.pieces().size() == 2);
  CHECK(w.pieces()[0].value == 5.0);
  CHECK(w.pieces()[1].support.size() == 2);
  CHECK_THAT(w.pieces()[0].d_measure, WithinRel(4.0 * std::numbers::pi / 3.0 * (64.0 - 27.0), 1e-15));
  CHECK(w(0.5) == 2.0);
  CHECK(w(1.5) == 0.0);
  CHECK(w(3.5) == 5.0);
  CHECK(w(9.0) == 0.0);
  CHECK_THROWS_AS(SimpleFunction(d3, {{1.0, {{0.0, 1.0}}, 0.0}, {1.0, {{2.0, 3.0}}, 0.0}}),
                  invalid_argument);
  CHECK_THROWS_AS(SimpleFunction(d3, {{1.0, {{0.0, 1.5}}, 0.0}, {2.0, {{1.0, 3.0}}, 0.0}}),
                  invalid_argument);
  CHECK_THROWS_AS(SimpleFunction(d3, {{-1.0, {{0.0, 1.0}}, 0.0}}), invalid_argument);
  // adjacent runs with one level merge into one interval
  const auto m = SimpleFunction::from_steps(d3, {0.0, 1.0, 2.0}, {3.0, 3.0});
  REQUIRE(m.pieces().size() == 1);
  CHECK(m.pieces()[0].support.size() == 1);
}

TEST_CASE("horizontal_layers") {
  SECTION("two-step distribution") {
    // value 4 on measure 1, value 1 on measure 3
    const double r1 = radius_for(0.0, 1.0), r2 = radius_for(r1, 4.0);
    const auto w = SimpleFunction::from_steps(d3, {0.0, r1, r2}, {4.0, 1.0});
    const auto layers = horizontal_layers(w);
    REQUIRE(layers.size() == 3);
    CHECK(layers[0].i == 0);
    CHECK(layers[0].H == 4.0);
    CHECK(layers[1].H == 1.0);
    CHECK(layers[2].H == 1.0);
    CHECK(layers[2].H_next == 0.0);
    CHECK(layers[0].layer.pieces().size() == 1);
    CHECK(layers[0].layer.pieces()[0].value == 4.0);
    CHECK(layers[1].layer.empty());
    CHECK(layers[2].layer.pieces()[0].value == 1.0);
  }
  SECTION("single piece") {
    const auto w = SimpleFunction::from_steps(d3, {0.0, radius_for(0.0, 1.0)}, {1.0});
    const auto layers = horizontal_layers(w);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].i == 0);
    CHECK(layers[0].H == 1.0);
  }
  CHECK(horizontal_layers(SimpleFunction()).empty());

  SECTION("small supports start at negative indices") {
    const auto w = SimpleFunction::from_steps(d3, {0.0, 0.1}, {7.0});
    const auto layers = horizontal_layers(w);
    REQUIRE(layers.size() == 1);
    CHECK(layers[0].i < 0);
    CHECK(w.measure() <= std::ldexp(1.0, layers[0].i));
    CHECK(w.measure() > std::ldexp(1.0, layers[0].i - 1));
  }
  SECTION("layers partition W and respect the measure bound") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto w = random_simple_function(d3, seed);
      const auto layers = horizontal_layers(w);
      std::size_t count = 0;
      for (const auto &l : layers) {
        CHECK(l.layer.measure() <= std::ldexp(1.0, l.i));
        CHECK(l.H >= l.H_next);
        for (const auto &p : l.layer.pieces()) {
          CHECK(p.value <= l.H);
          CHECK(p.value > l.H_next);
        }
        count += l.layer.pieces().size();
      }
      CHECK(count == w.pieces().size());
      // H_i from the definition by scanning t over the values
      for (const auto &l : layers) {
        double brute = 0.0;
        for (auto it = w.pieces().rbegin(); it != w.pieces().rend(); ++it) {
          double above = 0.0;
          for (const auto &p : w.pieces())
            if (p.value > it->value)
              above += p.d_measure;
          if (above <= std::ldexp(1.0, l.i - 1)) {
            brute = it->value;
            break;
          }
        }
        if (w.measure() <= std::ldexp(1.0, l.i - 1))
          brute = 0.0;
        CHECK(l.H == brute);
      }
    }
  }
}

TEST_CASE("lorentz_equivalence_check") {
  const auto one = SimpleFunction::from_steps(d3, {0.0, 1.3}, {2.0});
  const auto c = lorentz_equivalence_check(one, 2.0, 3.0);
  CHECK(c.lhs > 0.0);
  CHECK(c.rhs > 0.0);
  CHECK(std::isfinite(c.ratio));

  const auto w = random_simple_function(d3, 7);
  std::vector<Piece> doubled = w.pieces();
  for (auto &p : doubled)
    p.value *= 2.0;
  const SimpleFunction w2(d3, doubled);
  const auto a = lorentz_equivalence_check(w, 1.5, 2.0), b = lorentz_equivalence_check(w2, 1.5, 2.0);
  CHECK_THAT(b.lhs, WithinRel(2.0 * a.lhs, 1e-14));
  CHECK_THAT(b.rhs, WithinRel(2.0 * a.rhs, 1e-14));
  CHECK_THAT(b.ratio, WithinRel(a.ratio, 1e-14));

  SECTION("ratios stay in a fixed window") {
    for (auto [q, r] : {std::pair{1.5, 1.0}, {2.0, 2.0}, {3.0, 6.0}}) {
      double lo = 1e300, hi = 0.0;
      for (std::uint64_t seed = 100; seed < 150; ++seed) {
        const auto x = lorentz_equivalence_check(random_simple_function(d3, seed), q, r);
        lo = std::min(lo, x.ratio);
        hi = std::max(hi, x.ratio);
      }
      INFO("q=" << q << " r=" << r << " window [" << lo << ", " << hi << "]");
      CHECK(lo > 0.25);
      CHECK(hi < 4.0);
    }
  }
  SECTION("the dyadic sum of a single piece against its closed form") {
    // |{W > t}| = m for t < h: H_i = h while 2^{i-1} < m, then 0
    const double m = one.measure(), h = 2.0, q = 2.0, r = 3.0;
    double lhs = 0.0;
    for (int i = -200; std::ldexp(1.0, i - 1) < m; ++i)
      lhs += std::pow(h * std::exp2(i / q), r);
    CHECK_THAT(c.lhs, WithinRel(std::pow(lhs, 1.0 / r), 1e-13));
    CHECK_THAT(c.rhs, WithinRel(h * std::pow(q / r, 1.0 / r) * std::pow(m, 1.0 / q), 1e-13));
  }
}

TEST_CASE("sparse_decompose") {
  const double c = 1.0 / 16;
  SECTION("one cell") {
    const auto s = sparse_decompose(single_layer({0.0, c}, {1.0}), 3, 2.0);
    REQUIRE(s.families.size() == 1);
    CHECK(s.families[0].members.size() == 1);
  }
  SECTION("two distant cells share a family") {
    const auto s = sparse_decompose(single_layer({0.0, c, 2.0, 2.0 + c}, {1.0, 0.0, 1.0}), 3, 2.0);
    REQUIRE(s.families.size() == 1);
    CHECK(s.families[0].members.size() == 2);
    CHECK(verify_sparse(s.families[0], 2.0).is_sparse);
  }
  SECTION("two close cells are split") {
    const auto s = sparse_decompose(single_layer({0.0, 2.0 * c}, {1.0}), 3, 0.5);
    REQUIRE(s.families.size() == 2);
    CHECK(s.families[0].members.size() == 1);
    CHECK(s.families[1].members.size() == 1);
  }
  SECTION("a dense block is merged into a larger ball") {
    // 64 adjacent cells with gamma = 0.5: one round cannot separate them
    const auto s = sparse_decompose(single_layer({0.0, 4.0}, {1.0}), 2, 0.5);
    CHECK(s.counts.n == 64);
    int max_level = 0;
    for (const auto &f : s.families) {
      CHECK(verify_sparse(f, 0.5).is_sparse);
      max_level = std::max(max_level, f.level);
    }
    CHECK(max_level == 1);
    CHECK(s.counts.conforms());
  }
  CHECK_THROWS_AS(sparse_decompose(single_layer({0.0, c}, {1.0}), 0, 2.0), invalid_argument);
}

TEST_CASE("verify_sparse") {
  CHECK(verify_sparse({3.0}, 1.0, 1.0).is_sparse);
  const auto a = verify_sparse({0.0, 10.0}, 1.0, 1.0);
  CHECK(a.is_sparse);
  CHECK(a.min_gap == 10.0);
  CHECK(a.required == 2.0);
  CHECK_FALSE(verify_sparse({0.0, 1.0}, 1.0, 1.0).is_sparse);
  CHECK_FALSE(verify_sparse({5.0, 0.0, 2.9}, 1.0, 1.0).is_sparse);
}

TEST_CASE("separation_sum") {
  const auto single = separation_sum({{0.0, 1.0}}, 1.0, 1.0, {50.0, 1.0});
  CHECK(single.value <= 1.0);
  CHECK(single.near_members == 0);

  // 10 members, R = 1, gamma = 1: required gap 10
  std::vector<Ball> fam;
  for (int k = 0; k < 10; ++k)
    fam.push_back({25.0 * k, 1.0});
  for (double x : {0.0, 3.0, 110.0, 400.0}) {
    const auto s = separation_sum(fam, 1.0, 1.0, {x, 1.0});
    INFO("reference " << x << " value " << s.value << " slack " << s.slack);
    CHECK(s.value <= s.bound);
    CHECK(s.slack >= 0.0);
    CHECK(s.near_members <= 1);
    CHECK(s.quoted_form_holds);
  }
  // the "all but one" claim, exhaustively over reference positions
  for (double x = -30.0; x <= 260.0; x += 0.5) {
    int near = 0;
    for (const auto &b : fam)
      near += std::abs(b.center - x) < 5.0;
    CHECK(near <= 1);
  }
  CHECK_THROWS_AS(separation_sum({{0.0, 1.0}, {1.0, 1.0}}, 1.0, 1.0, {0.0, 1.0}), invalid_argument);
}

TEST_CASE("decompose and audit") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto w = random_simple_function(d3, seed);
    const auto t = decompose(w, 3, 2.0);
    const auto a = audit(w, t);
    INFO("seed " << seed);
    CHECK(a.reconstruction);
    CHECK(a.layer_measure);
    CHECK(a.separation);
    CHECK(a.counts);
  }
  SECTION("other parameters") {
    for (int K : {1, 2, 4})
      for (double g : {0.5, 1.0, 3.0})
        for (std::uint64_t seed : {3u, 11u, 29u}) {
          const auto w = random_simple_function(Dimension(2), seed);
          CHECK(audit(w, decompose(w, K, g)).all());
        }
  }
  SECTION("a corrupted tree fails the audit") {
    const auto w = random_simple_function(d3, 5);
    auto t = decompose(w, 3, 2.0);
    REQUIRE(!t.sparse.empty());
    REQUIRE(!t.sparse[0].families.empty());
    t.sparse[0].families[0].members[0].fragments.pop_back();
    CHECK_FALSE(audit(w, t).reconstruction);
  }
}
