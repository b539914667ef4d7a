#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <roughfrob/signals.hpp>
#include <roughfrob/solvers.hpp>

using namespace roughfrob;

namespace {

Field wm(double beta, std::uint64_t seed, double amplitude = 1.0, int n_min = -16) {
  WeierstrassParams wp;
  wp.beta = beta;
  wp.seed = seed;
  wp.amplitude = amplitude;
  wp.n_min = n_min;
  return gen_weierstrass_1d(wp);
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double mid = 0.5 * (lo + hi);
    if ((f(lo) < 0) == (f(mid) < 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double sup_abs_diff(const Field& a, const std::function<double(const Point&)>& oracle) {
  double err = 0.0;
  for (std::size_t q = 0; q < a.grid().size(); ++q)
    err = std::max(err, std::abs(a.data()[q] - oracle(a.grid().point(q))));
  return err;
}

}  // namespace

TEST_CASE("linear YDE follows the Young chain rule") {
  // d theta = theta dy  =>  theta_t = theta_0 exp(y_t - y_0).
  Field y = wm(0.7, 4, 0.5, 0);
  Driver F = make_driver({{"name", "linear_z"}, {"lambda", {1.0}}});
  YdeOptions o;
  o.level = 14;
  SolveResult r = solve_yde(F, y, scalar_mat(2.0), 0.0, 1.0, o);
  const double y0 = y.scalar(make_point({0.0}));
  double err = sup_abs_diff(r.theta, [&](const Point& p) { return 2.0 * std::exp(y.scalar(p) - y0); });
  CHECK(err < 5e-4);
}

TEST_CASE("YDE error shrinks under refinement") {
  Field y = wm(0.7, 5, 0.5, 0);
  Driver F = make_driver({{"name", "linear_z"}, {"lambda", {1.0}}});
  const double y0 = y.scalar(make_point({0.0})), y1 = y.scalar(make_point({1.0}));
  double prev = 1e9;
  for (int level : {8, 11, 14}) {
    YdeOptions o;
    o.level = level;
    SolveResult r = solve_yde(F, y, scalar_mat(1.0), 0.0, 1.0, o);
    double err = std::abs(r.theta.scalar(make_point({1.0})) - std::exp(y1 - y0));
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("YDE rejects data with beta(1+gamma) <= 1") {
  Driver F = make_driver({{"name", "linear_z"}, {"lambda", {1.0}}, {"gamma", 0.5}});
  try {
    solve_yde(F, wm(0.6, 1), scalar_mat(1.0), 0.0, 1.0);
    FAIL("expected a regularity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Regularity);
  }
}

TEST_CASE("exponent condition") {
  CHECK(yde_exponent_condition(0.9, 0.9, 1.0));
  CHECK_FALSE(yde_exponent_condition(0.3, 0.3, 0.5));
  // Monotone in every exponent.
  for (double a = 0.1; a < 1.0; a += 0.1)
    for (double b = 0.1; b < 1.0; b += 0.1)
      if (yde_exponent_condition(a, b, 0.8)) {
        CHECK(yde_exponent_condition(std::min(1.0, a + 0.1), b, 0.8));
        CHECK(yde_exponent_condition(a, std::min(1.0, b + 0.1), 0.8));
        CHECK(yde_exponent_condition(a, b, 1.0));
      }
}

TEST_CASE("wedge-null Pfaff solve matches exp of the signal increment") {
  PfaffProblem P;
  P.g = axis_sum({wm(0.9, 4, 0.5, 0), wm(0.9, 8, 0.5, 0)});
  P.F = make_driver({{"name", "linear_z"}, {"lambda", {1.0}}});
  P.beta = 0.9;
  P.theta0 = scalar_mat(1.0);
  PfaffOptions o;
  o.level = 8;
  SolveResult r = solve_frobenius_wedge_null(P, o);
  const double g0 = P.g.scalar(make_point({0, 0}));
  CHECK(sup_abs_diff(r.theta, [&](const Point& p) { return std::exp(P.g.scalar(p) - g0); }) < 5e-3);
  CHECK(r.diagnostics["path_independence"].get<double>() < 1e-10);
}

TEST_CASE("diagonal solve reproduces exp(x + y)") {
  PfaffProblem P;
  P.g = make_signal("identity2d");
  P.F = make_driver({{"name", "linear_z"}, {"lambda", {1.0, 1.0}}});
  P.theta0 = scalar_mat(1.0);
  std::vector<double> errs;
  for (int level : {4, 6, 8}) {
    DiagonalOptions o;
    o.level = level;
    SolveResult r = solve_frobenius_diagonal(P, o);
    errs.push_back(sup_abs_diff(r.theta, [](const Point& p) { return std::exp(p[0] + p[1]); }));
  }
  CHECK(errs[2] < 1e-3);
  // Second order: each two-level refinement cuts the error about 16 times.
  CHECK(errs[0] / errs[1] > 10.0);
  CHECK(errs[1] / errs[2] > 10.0);
}

TEST_CASE("diagonal sweeps commute on rough data") {
  PfaffProblem P;
  P.g = gen_diagonal({wm(0.9, 12, 0.5, 0), wm(0.9, 13, 0.5, 0)});
  P.F = make_driver({{"name", "linear_z"}, {"lambda", {1.0, 1.0}}});
  P.beta = 0.9;
  P.theta0 = scalar_mat(1.0);
  DiagonalOptions o;
  o.level = 8;
  SolveResult r = solve_frobenius_diagonal(P, o);
  CHECK(r.diagnostics["sweep_order_diff"].get<double>() < 1e-10);
}

TEST_CASE("involutivity holds for linear drivers and fails otherwise") {
  PfaffProblem P;
  P.g = make_signal("identity2d");
  P.F = make_driver({{"name", "linear_z"}, {"lambda", {1.0, 2.0}}});
  P.theta0 = scalar_mat(0.5);
  CHECK(check_involutivity(P, 5).holds);
  // F = (u2, 1): d/du1 of the second column minus d/du2 of the first is -1.
  P.F = make_driver("frob1_u2");
  InvolutivityReport r = check_involutivity(P, 5);
  CHECK_FALSE(r.holds);
  CHECK(r.max_residual == doctest::Approx(1.0));
  try {
    solve_frobenius_diagonal(P);
    FAIL("expected an involutivity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Involutivity);
  }
}

TEST_CASE("implicit cubic matches bisection") {
  ImplicitProblem P;
  P.g = smooth_field({"sin(x)"}, Box::unit(1));
  P.F = make_driver("cubic_implicit");
  P.x0n = scalar_mat(0.0);
  ImplicitOptions o;
  o.level = 8;
  SolveResult r = solve_implicit(P, o);
  double err = sup_abs_diff(r.theta, [](const Point& p) {
    const double s = std::sin(p[0]);
    return bisect([s](double y) { return y * y * y + y - s; }, -2.0, 2.0);
  });
  CHECK(err < 1e-10);
  // D_g theta = -A^{-1} B = 1 / (3 theta^2 + 1), compared at the grid nodes.
  Field D = implicit_g_derivative(P, r.theta);
  for (std::size_t q = 0; q < r.theta.grid().size(); q += 17) {
    const double th = r.theta.data()[q];
    CHECK(D.data()[q] == doctest::Approx(1.0 / (3 * th * th + 1)).epsilon(1e-12));
  }
}

TEST_CASE("implicit solve on rough data stays on the level set") {
  ImplicitProblem P;
  P.g = wm(0.8, 21, 0.3, 0);
  P.beta = 0.8;
  P.F = make_driver("cubic_implicit");
  P.x0n = scalar_mat(0.0);
  SolveResult r = solve_implicit(P);
  double worst = 0.0;
  for (std::size_t q = 0; q < r.theta.grid().size(); ++q) {
    const double th = r.theta.data()[q];
    worst = std::max(worst, std::abs(th * th * th + th - P.g.scalar(r.theta.grid().point(q))));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("degenerate implicit problem raises degeneracy") {
  ImplicitProblem P;
  P.g = smooth_field({"sin(x)"}, Box::unit(1));
  P.F = make_driver("square_implicit");
  P.x0n = scalar_mat(0.0);
  try {
    solve_implicit(P);
    FAIL("expected a degeneracy error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degeneracy);
  }
}

TEST_CASE("level-set composition check") {
  ImplicitProblem P;
  P.g = smooth_field({"sin(x)"}, Box::unit(1));
  P.F = make_driver("cubic_implicit");
  P.x0n = scalar_mat(0.0);
  auto phi = [](const Point& p, const Mat& th) {
    const double y = th(0, 0);
    return y * y * y + y - std::sin(p[0]);
  };
  CHECK(level_set_composition_check(phi, P, 1e-8, {6, 8}).pass);
}

TEST_CASE("Young-Gronwall ratio is stable across levels") {
  // a = exp(t) solves a = a0 + int a dt with u = 1, b = 0, y = t.
  Field a = smooth_field({"exp(t)"}, Box::unit(1));
  Field b = smooth_field({"0"}, Box::unit(1));
  Field u = smooth_field({"1"}, Box::unit(1));
  Field y = smooth_field({"t"}, Box::unit(1));
  GronwallReport r = verify_gronwall(a, b, u, y, 0.9, 0.9, {10, 12});
  CHECK(r.finite);
  CHECK(r.variation < 0.05);
  CHECK(r.rows.front().residual < 1e-6);
}

TEST_CASE("Gronwall rejects data that do not solve the equation") {
  Field a = smooth_field({"exp(2*t)"}, Box::unit(1));
  Field b = smooth_field({"0"}, Box::unit(1));
  Field u = smooth_field({"1"}, Box::unit(1));
  Field y = smooth_field({"t"}, Box::unit(1));
  try {
    verify_gronwall(a, b, u, y, 0.9, 0.9, {10});
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("parametrised YDE g-derivative") {
  // F((y, g), theta) = g: theta(t, p) = g_p (1 + y_t - y_0), D_g theta = 1 + y_t - y_0.
  Field y = wm(0.8, 31, 0.5, 0);
  Field g = wm(0.8, 32, 0.5, 0);
  Driver F = make_driver({{"name", "u_component"}, {"k", 2}, {"index", 1}});
  Field one = smooth_field({"1"}, Box::unit(1));
  YdeGDerivOptions o;
  o.level_t = 10;
  o.level_p = 8;
  YdeGDerivResult r = yde_g_derivative(F, y, g, g, one, o);
  const double y0 = y.scalar(make_point({0.0}));
  for (double t : {0.25, 1.0})
    for (double p : {0.25, 0.75}) {
      const Point tp = make_point({t, p});
      const double dy = y.scalar(make_point({t})) - y0;
      CHECK(r.theta.scalar(tp) == doctest::Approx(g.scalar(make_point({p})) * (1 + dy)).epsilon(1e-8));
      CHECK(r.dtheta.scalar(tp) == doctest::Approx(1 + dy).epsilon(1e-8));
    }
  CHECK(r.check.pass);
}

TEST_CASE("wedge-null Pfaff solve with a composed signal") {
  // g = (w, w^3), F(u, z) = (u2, 1): theta = theta0 + int (w^3 dw + dw^3) along any path.
  PfaffProblem P;
  P.g = gen_composed(axis_sum({wm(0.9, 4, 0.5, 0), wm(0.9, 8, 0.5, 0)}), {"id", "cube"});
  P.F = make_driver("frob1_u2");
  P.beta = 0.9;
  P.theta0 = scalar_mat(0.0);
  PfaffOptions o;
  o.level = 10;
  SolveResult r = solve_frobenius_wedge_null(P, o);
  CHECK(r.diagnostics["germ_rate_ok"].get<bool>());
  CHECK(r.diagnostics["path_independence"].get<double>() < 1e-3);
  // Closed form: w^4 / 4 + w^3, relative to the base point.
  auto phi = [](double w) { return 0.25 * w * w * w * w + w * w * w; };
  const double w0 = P.g.eval(make_point({0, 0}))(0, 0);
  CHECK(sup_abs_diff(r.theta, [&](const Point& p) { return phi(P.g.eval(p)(0, 0)) - phi(w0); }) < 1e-3);
}
