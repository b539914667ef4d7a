#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <roughfrob/calculus.hpp>
#include <roughfrob/signals.hpp>

using namespace roughfrob;

TEST_CASE("counter draws are deterministic and in range") {
  for (std::uint64_t c = 0; c < 1000; ++c) {
    double u = counter_uniform(42, 3, c);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == counter_uniform(42, 3, c));
  }
  CHECK(counter_hash(1, 0, 0) != counter_hash(2, 0, 0));
  CHECK(counter_hash(1, 0, 0) != counter_hash(1, 1, 0));
}

TEST_CASE("counter normals have unit variance") {
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = counter_normal(5, 1, std::uint64_t(i));
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Weierstrass values match the series") {
  WeierstrassParams wp;
  wp.beta = 0.7;
  wp.seed = 12;
  wp.n_min = -3;
  wp.n_max = 9;
  wp.amplitude = 1.3;
  Field w = gen_weierstrass_1d(wp);
  const double phi = 2 * std::numbers::pi * counter_uniform(12, 0, 0);
  for (double t : {0.0, 0.123, 0.5, 0.977}) {
    double s = 0.0;
    for (int n = -3; n <= 9; ++n)
      s += 1.3 * std::pow(2.0, -n * 0.7) * (std::cos(2 * std::numbers::pi * std::pow(2.0, n) * t + phi) - std::cos(phi));
    CHECK(w.scalar(make_point({t})) == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK(w.scalar(make_point({0.0})) == 0.0);
  CHECK(w.exponent() == 0.7);
}

TEST_CASE("Weierstrass seeds give distinct reproducible paths") {
  WeierstrassParams a, b;
  b.seed = 2;
  const Point p = make_point({0.3});
  CHECK(gen_weierstrass_1d(a).scalar(p) == gen_weierstrass_1d(a).scalar(p));
  CHECK(gen_weierstrass_1d(a).scalar(p) != gen_weierstrass_1d(b).scalar(p));
}

TEST_CASE("Weierstrass increments scale with beta") {
  WeierstrassParams wp;
  wp.beta = 0.6;
  wp.seed = 8;
  HolderReport r = holder_seminorm(gen_weierstrass_1d(wp), 0.6);
  std::vector<double> xs, ys;
  for (const auto& row : r.table)
    if (row.scale <= 1.0 / 16 && row.scale >= 1.0 / 4096) {
      xs.push_back(row.scale);
      ys.push_back(row.max_ratio * std::pow(row.scale, 0.6));
    }
  CHECK(fit_power_law(xs, ys).slope == doctest::Approx(0.6).epsilon(0.1));
}

TEST_CASE("Weierstrass configuration errors") {
  WeierstrassParams wp;
  wp.beta = 1.5;
  CHECK_THROWS_AS(gen_weierstrass_1d(wp), Error);
  wp.beta = 0.5;
  wp.n_min = 3;
  wp.n_max = 2;
  CHECK_THROWS_AS(gen_weierstrass_1d(wp), Error);
}

TEST_CASE("lacunary modes sit in dyadic annuli") {
  for (int m = 1; m <= 3; ++m) {
    auto modes = lacunary_modes(0.8, 10, 77, m);
    REQUIRE(modes.size() == 10);
    for (int n = 1; n <= 10; ++n) {
      const auto& md = modes[std::size_t(n - 1)];
      double r2 = 0.0;
      for (int i = 0; i < m; ++i) r2 += double(md.k[i]) * md.k[i];
      CHECK(r2 > std::exp2(2 * n));
      CHECK(r2 <= std::exp2(2 * (n + 1)));
      CHECK(md.amplitude == doctest::Approx(std::exp2(-n * 0.8)));
    }
  }
}

TEST_CASE("lacunary field is periodic on the unit box") {
  Field f = gen_lacunary(0.8, 6, 3, 2);
  CHECK(f.scalar(make_point({0.0, 0.3})) == doctest::Approx(f.scalar(make_point({1.0, 0.3}))).epsilon(1e-12));
  CHECK(f.scalar(make_point({0.4, 0.0})) == doctest::Approx(f.scalar(make_point({0.4, 1.0}))).epsilon(1e-12));
}

TEST_CASE("composed, diagonal, axis-sum and stack shapes") {
  Field a = smooth_field({"x^2"}, Box::unit(1));
  Field b = smooth_field({"sin(x)"}, Box::unit(1));
  Field d = gen_diagonal({a, b});
  CHECK(d.rows() == 2);
  CHECK(d.dim() == 2);
  Mat v = d.eval(make_point({0.5, 0.25}));
  CHECK(v(0, 0) == doctest::Approx(0.25));
  CHECK(v(1, 0) == doctest::Approx(std::sin(0.25)));
  Field s = axis_sum({a, b});
  CHECK(s.scalar(make_point({0.5, 0.25})) == doctest::Approx(0.25 + std::sin(0.25)));
  Field c = gen_composed(s, {"id", "cube"});
  Mat cv = c.eval(make_point({0.5, 0.25}));
  CHECK(cv(1, 0) == doctest::Approx(std::pow(cv(0, 0), 3)));
  CHECK_THROWS_AS(stack({a, s}), Error);
}

TEST_CASE("outer maps carry their derivatives") {
  for (const char* name : {"id", "square", "cube", "sin", "cos", "exp"}) {
    OuterMap m = outer_map(name);
    for (double u : {-0.7, 0.2, 1.1}) {
      double fd = (m.f(u + 1e-6) - m.f(u - 1e-6)) / 2e-6;
      CHECK(m.df(u) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(outer_map("tan"), Error);
}

TEST_CASE("fBm starts at zero and is reproducible") {
  Field f = gen_fbm_1d(0.75, 8, 4);
  CHECK(f.data()[0] == 0.0);
  CHECK(f.data() == gen_fbm_1d(0.75, 8, 4).data());
  CHECK(f.data() != gen_fbm_1d(0.75, 8, 5).data());
  CHECK_THROWS_AS(gen_fbm_1d(0.75, 13, 4), Error);
}

TEST_CASE("fBm increment variance scales like h^{2H}") {
  // E |B_{t+h} - B_t|^2 = h^{2H}, averaged over seeds and positions.
  const double H = 0.75;
  const int level = 8, n = 1 << level;
  std::vector<double> xs, ys;
  for (int step : {1, 4, 16}) {
    double acc = 0.0;
    int count = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const auto& d = gen_fbm_1d(H, level, seed).data();
      for (int i = 0; i + step <= n; i += step) {
        double inc = d[std::size_t(i + step)] - d[std::size_t(i)];
        acc += inc * inc;
        ++count;
      }
    }
    xs.push_back(double(step) / n);
    ys.push_back(acc / count);
  }
  CHECK(fit_power_law(xs, ys).slope == doctest::Approx(2 * H).epsilon(0.05));
  CHECK(ys[0] == doctest::Approx(std::pow(1.0 / n, 2 * H)).epsilon(0.1));
}

TEST_CASE("mollification converges to a smooth field") {
  Field f = smooth_field({"sin(3*x) + x"}, Box::unit(1));
  double prev = 1e9;
  for (double eps : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
    Field g = mollify(f, eps, 12);
    double err = 0.0;
    for (double t : {0.3, 0.5, 0.7}) err = std::max(err, std::abs(g.scalar(make_point({t})) - f.scalar(make_point({t}))));
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
  CHECK_THROWS_AS(mollify(f, 1e-5, 8), Error);
}

TEST_CASE("signal shorthand") {
  CHECK(signal_shorthand("poly:t2")["expr"] == "t^2");
  json w = signal_shorthand("weierstrass:beta=0.8,seed=7");
  CHECK(w["kind"] == "weierstrass_1d");
  CHECK(w["beta"] == 0.8);
  CHECK(w["seed"] == 7);
  CHECK(make_signal("identity2d").rows() == 2);
  CHECK(make_signal(signal_shorthand("expr:sin(x);y")).rows() == 2);
  CHECK_THROWS_AS(signal_shorthand("nonsense:1"), Error);
}

TEST_CASE("signal specs rebuild the same field") {
  json spec = {{"kind", "axis_sum"},
               {"axes", {{{"kind", "weierstrass_1d"}, {"beta", 0.8}, {"seed", 3}}, {{"kind", "weierstrass_1d"}, {"beta", 0.7}, {"seed", 4}}}}};
  Field a = make_signal(spec);
  Field b = make_signal(a.spec());
  for (double x : {0.1, 0.6})
    for (double y : {0.2, 0.9}) CHECK(a.scalar(make_point({x, y})) == b.scalar(make_point({x, y})));
  CHECK(a.exponent() == 0.7);
}
