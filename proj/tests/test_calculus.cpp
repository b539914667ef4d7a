#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <roughfrob/calculus.hpp>
#include <roughfrob/config.hpp>
#include <roughfrob/expr.hpp>
#include <roughfrob/signals.hpp>

using namespace roughfrob;

namespace {

Point random_point(std::uint64_t seed, std::uint64_t k, int dim) {
  Point p{0, 0, 0};
  for (int i = 0; i < dim; ++i) p[i] = counter_uniform(seed, std::uint64_t(i), k);
  return p;
}

}  // namespace

TEST_CASE("grid flat and unflat are inverse") {
  Grid G(Box::unit(3), std::array<int, kMaxDim>{2, 3, 1});
  CHECK(G.size() == std::size_t(5 * 9 * 3));
  for (std::size_t k = 0; k < G.size(); ++k) CHECK(G.flat(G.unflat(k)) == k);
  CHECK(G.min_spacing() == doctest::Approx(0.125));
}

TEST_CASE("box validation rejects empty sides") {
  Box b = Box::unit(2);
  b.upper[1] = 0.0;
  CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("grid samples reproduce multilinear functions") {
  Field f = smooth_field({"1 + 2*x - 3*y + x*y"}, Box::unit(2));
  Field s = sample(f, Grid(Box::unit(2), 3));
  for (std::uint64_t k = 0; k < 50; ++k) {
    Point p = random_point(7, k, 2);
    CHECK(s.scalar(p) == doctest::Approx(f.scalar(p)).epsilon(1e-13));
  }
}

TEST_CASE("evaluation outside the domain is a domain error") {
  Field f = smooth_field({"x"}, Box::unit(1));
  try {
    f(make_point({1.5}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("grid csv round trip") {
  Field f = sample(smooth_field({"sin(x)*y", "x+y"}, Box::unit(2)), Grid(Box::unit(2), 3));
  std::stringstream ss;
  write_grid_csv(f, ss);
  Field back = read_grid_csv(ss, f.exponent());
  REQUIRE(back.rows() == 2);
  CHECK(back.data() == f.data());
}

TEST_CASE("delta2 of a difference germ vanishes") {
  Field f = smooth_field({"exp(x)*cos(y)"}, Box::unit(2));
  TwoPoint w = [&](const Point& p, const Point& q) { return delta(f, p, q); };
  for (std::uint64_t k = 0; k < 40; ++k) {
    Mat r = delta2(w, random_point(1, k, 2), random_point(2, k, 2), random_point(3, k, 2));
    CHECK(std::abs(r(0, 0)) < 1e-14);
  }
}

TEST_CASE("delta2 of the product germ is the increment product") {
  // w(x,y) = f_x (g_y - g_x): delta2 w = w(y,z) - w(x,z) + w(x,y) = (f_y - f_x)(g_z - g_y).
  Field f = smooth_field({"x*x"}, Box::unit(1));
  Field g = smooth_field({"sin(3*x)"}, Box::unit(1));
  TwoPoint w = [&](const Point& p, const Point& q) { return Mat(f.eval(p) * delta(g, p, q)); };
  for (std::uint64_t k = 0; k < 40; ++k) {
    Point x = random_point(4, k, 1), y = random_point(5, k, 1), z = random_point(6, k, 1);
    double expect = delta(f, x, y)(0, 0) * delta(g, y, z)(0, 0);
    CHECK(delta2(w, x, y, z)(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("power law fit recovers slope and intercept") {
  std::vector<double> x, y;
  for (int j = 1; j <= 8; ++j) {
    x.push_back(std::exp2(-j));
    y.push_back(3.0 * std::pow(x.back(), 1.7));
  }
  RateFit fit = fit_power_law(x, y);
  CHECK(fit.slope == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.residual < 1e-12);
}

TEST_CASE("power law fit flags an all-zero table") {
  RateFit fit = fit_power_law({0.5, 0.25, 0.125}, {0.0, 0.0, 0.0}, 1e-14);
  CHECK(fit.exact_zero);
}

TEST_CASE("holder seminorm of a linear map is its slope") {
  Field f = smooth_field({"2.5*x"}, Box::unit(1));
  HolderReport r = holder_seminorm(f, 1.0);
  CHECK(r.seminorm == doctest::Approx(2.5).epsilon(1e-12));
  // Second differences vanish, so the fit reports the smooth cap.
  CHECK(r.fitted_exponent == 1.5);
}

TEST_CASE("holder exponent fit on Weierstrass data") {
  WeierstrassParams wp;
  wp.beta = 0.8;
  wp.seed = 7;
  HolderOptions o;
  o.level = 14;
  HolderReport r = holder_seminorm(gen_weierstrass_1d(wp), 0.8, o);
  CHECK(std::abs(r.fitted_exponent - 0.8) <= 0.05);
}

TEST_CASE("holder seminorm of sqrt at exponent one half") {
  // sup |sqrt(t) - sqrt(s)| / |t-s|^(1/2) = 1, attained at s = 0.
  Field f = smooth_field({"sqrt(x)"}, Box::unit(1));
  HolderReport r = holder_seminorm(f, 0.5);
  CHECK(r.seminorm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("holder seminorm is homogeneous") {
  WeierstrassParams wp;
  wp.beta = 0.7;
  wp.seed = 9;
  Field a = gen_weierstrass_1d(wp);
  wp.amplitude = 3.0;
  Field b = gen_weierstrass_1d(wp);
  HolderOptions o;
  o.level = 10;
  CHECK(holder_seminorm(b, 0.7, o).seminorm ==
        doctest::Approx(3.0 * holder_seminorm(a, 0.7, o).seminorm).epsilon(1e-10));
}

TEST_CASE("expression parser") {
  CHECK(Expr::parse("1 + 2*3")(make_point({0})) == 7.0);
  CHECK(Expr::parse("-2^2")(make_point({0})) == -4.0);
  CHECK(Expr::parse("2^3^2")(make_point({0})) == 512.0);
  CHECK(Expr::parse("sin(pi/2) + x*y")(make_point({2, 3})) == doctest::Approx(7.0));
  CHECK(Expr::parse("t")(make_point({0.25})) == 0.25);
  CHECK(Expr::parse("x + z").arity() == 3);
  CHECK_THROWS_AS(Expr::parse("sin(x"), Error);
  CHECK_THROWS_AS(Expr::parse("foo(x)"), Error);
}

TEST_CASE("config parser") {
  json c = parse_config(
      "# comment\n"
      "command = integrate\n"
      "level = 12\n"
      "[f]\n"
      "kind = \"weierstrass_1d\"\n"
      "beta = 0.8\n"
      "[g.inner]\n"
      "eps = [1, 2]\n");
  CHECK(c["command"] == "integrate");
  CHECK(c["level"] == 12);
  CHECK(c["f"]["beta"] == 0.8);
  CHECK(c["g"]["inner"]["eps"] == json::array({1, 2}));
  CHECK_THROWS_AS(parse_config("a = 1\na = 2\n"), Error);
  CHECK(parse_config(format_config(c)) == c);
}
