#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <roughfrob/jets.hpp>
#include <roughfrob/signals.hpp>

using namespace roughfrob;

namespace {

Field wm(double beta, std::uint64_t seed, double amplitude = 1.0) {
  WeierstrassParams wp;
  wp.beta = beta;
  wp.seed = seed;
  wp.amplitude = amplitude;
  return gen_weierstrass_1d(wp);
}

Mat random_vec(int n, std::uint64_t seed, std::uint64_t k) {
  Mat v(n, 1);
  for (int i = 0; i < n; ++i) v(i, 0) = 2.0 * counter_uniform(seed, std::uint64_t(i), k) - 1.0;
  return v;
}

}  // namespace

TEST_CASE("driver derivatives match central differences") {
  const char* names[] = {"linear_z", "frob1_u2", "u_component", "cubic_implicit", "linear_implicit",
                         "square_implicit", "rotational", "gradient", "g2_first", "dsin", "identity"};
  for (const char* name : names) {
    CAPTURE(name);
    Driver D = make_driver(json(name));
    for (std::uint64_t t = 0; t < 5; ++t) {
      Mat u = random_vec(D.k, 1, t), z = random_vec(D.zdim, 2, t);
      const double h = 1e-6;
      auto du = D.dF_du(u, z);
      REQUIRE(int(du.size()) == D.k);
      for (int i = 0; i < D.k; ++i) {
        Mat up = u, um = u;
        up(i, 0) += h;
        um(i, 0) -= h;
        Mat fd = (D.F(up, z) - D.F(um, z)) / (2 * h);
        CHECK((fd - du[std::size_t(i)]).norm() < 1e-7);
      }
      auto dz = D.dF_dz(u, z);
      for (int l = 0; l < int(dz.size()); ++l) {
        Mat zp = z, zm = z;
        zp(l, 0) += h;
        zm(l, 0) -= h;
        Mat fd = (D.F(u, zp) - D.F(u, zm)) / (2 * h);
        CHECK((fd - dz[std::size_t(l)]).norm() < 1e-7);
      }
    }
  }
  CHECK_THROWS_AS(make_driver(json("nope")), Error);
}

TEST_CASE("gradient jet vanishes, rotational jet does not") {
  Field id = make_signal("identity2d");
  JetReport grad = jet_test(make_jet(make_driver("gradient"), id));
  JetReport rot = jet_test(make_jet(make_driver("rotational"), id));
  CHECK(grad.vanishes);
  CHECK_FALSE(rot.vanishes);
  // Green: the boundary integral of -u2 du1 + u1 du2 is twice the area.
  CHECK(rot.rows[0].max_ratio == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("integrating a gradient jet recovers the potential") {
  Field id = make_signal("identity2d");
  JetCandidate c = make_jet(make_driver("gradient"), id);
  JetIntegrationOptions o;
  o.level = 6;
  Field theta = integrate_jet(c, make_point({0, 0}), scalar_mat(0.0), o);
  auto phi = [](double a, double b) { return std::sin(a) * b + a * a; };
  double err = 0.0;
  for (std::size_t q = 0; q < theta.grid().size(); ++q) {
    Point p = theta.grid().point(q);
    err = std::max(err, std::abs(theta.data()[q] - phi(p[0], p[1])));
  }
  CHECK(err < 1e-9);
}

TEST_CASE("integration of a non-jet is refused without force") {
  JetCandidate c = make_jet(make_driver("rotational"), make_signal("identity2d"));
  JetIntegrationOptions o;
  o.level = 4;
  try {
    integrate_jet(c, make_point({0, 0}), scalar_mat(0.0), o);
    FAIL("expected a jet error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Jet);
  }
}

TEST_CASE("path order does not matter for rough gradient jets") {
  Field g = axis_sum({wm(0.85, 5, 0.25), wm(0.85, 6, 0.25)});
  JetCandidate c = make_jet(make_driver("dsin"), g);
  const double g0 = g.scalar(make_point({0, 0}));
  auto errors = [&](int sub_level) {
    JetIntegrationOptions o;
    o.level = 7;
    o.sub_level = sub_level;
    o.force = true;
    Field a = integrate_jet(c, make_point({0, 0}), scalar_mat(0.0), o);
    o.order = {1, 0, 2};
    Field b = integrate_jet(c, make_point({0, 0}), scalar_mat(0.0), o);
    double swap = 0.0, oracle = 0.0;
    for (std::size_t q = 0; q < a.data().size(); ++q) {
      swap = std::max(swap, std::abs(a.data()[q] - b.data()[q]));
      oracle = std::max(oracle, std::abs(a.data()[q] - (std::sin(g.scalar(a.grid().point(q))) - std::sin(g0))));
    }
    return std::make_pair(swap, oracle);
  };
  auto [swap0, err0] = errors(0);
  auto [swap2, err2] = errors(2);
  CHECK(swap0 < 1e-5);
  CHECK(err0 < 1e-5);
  CHECK(swap2 < swap0 / 8);
  CHECK(err2 < err0 / 8);
}

TEST_CASE("g-derivative check: correct derivative passes, wrong one fails") {
  Field g = wm(0.8, 3, 0.5);
  Field theta = Field::closed_form(
      Box::unit(1), 1, 1, [g](const Point& p) { return scalar_mat(std::sin(g.scalar(p))); }, 0.8);
  Field right = jet_field(make_driver("dsin"), g);
  Field wrong = Field::closed_form(Box::unit(1), 1, 1, [](const Point&) { return scalar_mat(1.0); }, 1.0);
  GDiffOptions o;
  o.level = 14;
  GDiffReport good = g_derivative_check(theta, right, g, 1.6, o);
  GDiffReport bad = g_derivative_check(theta, wrong, g, 1.6, o);
  CHECK(good.pass);
  CHECK(good.fitted_exponent >= 1.5);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("g-derivative of an affine function of g is exact") {
  Field g = wm(0.7, 9);
  Field theta = Field::closed_form(
      Box::unit(1), 1, 1, [g](const Point& p) { return scalar_mat(3.0 * g.scalar(p) - 1.0); }, 0.7);
  Field v = Field::closed_form(Box::unit(1), 1, 1, [](const Point&) { return scalar_mat(3.0); }, 1.0);
  GDiffReport r = g_derivative_check(theta, v, g, 1.4);
  CHECK(r.exact_zero);
  CHECK(r.pass);
}

TEST_CASE("wedge-null check separates composed from independent components") {
  Field w = axis_sum({wm(0.9, 2), wm(0.9, 9)});
  Field composed = gen_composed(w, {"id", "sin"});
  auto comp = [](const Field& f, int i) {
    return Field::closed_form(f.domain(), 1, 1, [f, i](const Point& p) { return scalar_mat(f.eval(p)(i, 0)); },
                              f.exponent());
  };
  CHECK(wedge_null_check(comp(composed, 0), comp(composed, 1), 3).vanishes);
  Field id = make_signal("identity2d");
  CHECK_FALSE(wedge_null_check(comp(id, 0), comp(id, 1), 3).vanishes);
}

TEST_CASE("wedge-null check needs 2 beta > 1") {
  Field w = axis_sum({wm(0.4, 2), wm(0.4, 9)});
  CHECK_THROWS_AS(wedge_null_check(w, w, 2), Error);
}

TEST_CASE("zust: wedge-null composed signals give vanishing jets") {
  Field w = axis_sum({wm(0.9, 2), wm(0.9, 9)});
  JetCandidate c = make_jet(make_driver("g2_first"), gen_composed(w, {"id", "cube"}));
  ZustReport z = zust_sufficiency_check(c, {ZustMode::WedgeNull});
  CHECK(z.conditions_hold);
  CHECK(z.jet.vanishes);
  CHECK(z.consistent);
}

TEST_CASE("weak Jacobian matches the area integral for smooth maps") {
  // g = (x, y^2): int_dQ x d(y^2) = int_Q 2y = 1 on the unit square.
  Field gi = smooth_field({"x"}, Box::unit(2));
  Field gj = smooth_field({"y^2"}, Box::unit(2));
  WeakJacobianReport r = weak_jacobian_check(gi, gj, Rectangle::of_box(Box::unit(2)));
  CHECK(r.boundary == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.area == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.relative < 1e-4);
}

TEST_CASE("corrector turns a non-jet into a jet") {
  Field s = smooth_field({"x"}, Box::unit(2));
  Field w = gen_lacunary(0.85, 6, 3, 2);
  JetCandidate c = make_jet(make_driver("g2_first"), stack({s, w}));
  CorrectorOptions o;
  o.level = 8;
  CorrectorResult r = corrector(c, o);
  CHECK_FALSE(r.raw.vanishes);
  CHECK(r.result.vanishes);
  CHECK(r.sign == "plus");
}
