// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include <roughfrob/commands.hpp>
#include <roughfrob/jets.hpp>
#include <roughfrob/signals.hpp>
#include <roughfrob/solvers.hpp>

using namespace roughfrob;

namespace {

constexpr double kYoungTol = 1e-8;
constexpr double kYoungSeconds = 0.1;
constexpr double kRateSlack = 0.1;
constexpr double kSewingSeconds = 5.0;
constexpr double kPartsTol = 1e-6;
constexpr double kPathSwapTol = 1e-6;
constexpr double kRotationalRatio = 2.0;
constexpr double kRotationalRel = 0.10;
constexpr double kExp2dTol = 1e-4;
constexpr double kExp2dOrder = 0.9;
constexpr double kExp2dSeconds = 10.0;
constexpr double kFrob1Tol = 1e-3;
constexpr double kSweepTol = 1e-3;
constexpr double kImplicitTol = 1e-8;
constexpr double kGronwallVariation = 0.05;

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int n, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(int n, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

json wm(double beta, int seed, double amplitude = 1.0) {
  return {{"kind", "weierstrass_1d"}, {"beta", beta}, {"seed", seed}, {"amplitude", amplitude}};
}

json axis_sum(const json& a, const json& b) { return {{"kind", "axis_sum"}, {"axes", {a, b}}}; }

// Midpoint rule for int_a^b h(t) dt.
double midpoint(const std::function<double(double)>& h, double a, double b, int n) {
  double s = 0.0, dt = (b - a) / n;
  for (int i = 0; i < n; ++i) s += h(a + (i + 0.5) * dt);
  return s * dt;
}

double bisect(const std::function<double(double)>& F, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double mid = 0.5 * (lo + hi);
    ((F(lo) < 0) == (F(mid) < 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void young_oracle() {
  const Field f = make_signal("poly:t"), g = make_signal("poly:t2");
  IntegrationOptions o;
  o.max_level = 14;
  auto t0 = std::chrono::steady_clock::now();
  IntegralResult r = young_integral_1d(f, g, 0.0, 1.0, o);
  const double secs = seconds_since(t0);
  const double oracle = midpoint([](double t) { return 2 * t * t; }, 0.0, 1.0, 1 << 20);
  const double err = std::abs(r.value(0, 0) - oracle);
  report(1, "young oracle", err < kYoungTol && secs < kYoungSeconds,
         fmt("|I - 2/3| = %.3e", err) + fmt(", %.4f s", secs));
}

void sewing_rate() {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  for (double b : {0.6, 0.8}) {
    json cfg = {{"preset", "sewing"}, {"f", wm(b, 1)}, {"g", wm(b, 11)}};
    CommandOutput out = run_command("converge", cfg);
    const double slope = out.result["fitted_exponent"].get<double>();
    ok = ok && slope >= 2 * b - kRateSlack;
    detail += fmt("(%.1f,", b) + fmt("%.1f) slope ", b) + fmt("%.3f; ", slope);
  }
  const double secs = seconds_since(t0);
  report(2, "sewing rate", ok && secs < kSewingSeconds, detail + fmt("%.2f s", secs));
}

void parts_identity() {
  double worst = 0.0;
  const Rectangle Q = Rectangle::of_box(Box::unit(2));
  for (int i = 0; i < 20; ++i) {
    const double c1 = counter_uniform(99, 1, std::uint64_t(i)) * 3, c2 = counter_uniform(99, 2, std::uint64_t(i)) * 3;
    json smooth = {{"kind", "smooth_named"},
                   {"expr", "sin(" + std::to_string(c1) + "*x + " + std::to_string(c2) + "*y) + x*y"}};
    json rough = axis_sum(wm(0.8, 100 + i), wm(0.8, 200 + i));
    json rough2 = axis_sum(wm(0.75, 300 + i), wm(0.75, 400 + i));
    const Field f = make_signal(i % 2 ? smooth : rough2), g = make_signal(rough);
    const double s = (boundary_sum(f, g, Q, 12) + boundary_sum(g, f, Q, 12))(0, 0);
    worst = std::max(worst, std::abs(s));
  }
  report(3, "stokes/parts identity", worst < kPartsTol, fmt("max residual %.3e over 20 pairs", worst));
}

void jet_roundtrip() {
  CommandOutput out = run_command("check-jet", {{"preset", "jet_roundtrip"}});
  const json& rt = out.result["roundtrip"];
  const double beta = 0.85;
  const json& fe = rt["g_derivative"]["fitted_exponent"];
  const double slope = fe.is_null() ? 99.0 : fe.get<double>();
  const double swap = rt["path_order_diff"].get<double>();
  // Composition oracle: theta = sin(g) - sin(g(p0)).
  const Field g = make_signal(preset("jet_roundtrip")["g"]);
  const double th = rt["theta_end"].get<double>();
  const double oracle = std::sin(g.scalar(make_point({1, 1}))) - std::sin(g.scalar(make_point({0, 0})));
  const bool ok = out.exit_code == 0 && slope >= 2 * beta - kRateSlack && swap < kPathSwapTol;
  report(4, "jet round trip", ok,
         fmt("remainder exponent %.3f", slope) + fmt(", path swap %.3e", swap) +
             fmt(", |theta(1,1) - oracle| %.2e", std::abs(th - oracle)));
}

void zust_consistency() {
  const Field id = make_signal("identity2d");
  JetTestOptions o;
  JetReport grad = jet_test(make_jet(make_driver("gradient"), id), o);
  JetReport rot = jet_test(make_jet(make_driver("rotational"), id), o);
  const double ratio = rot.rows[0].max_ratio;
  CommandOutput wedge = run_command("check-jet", {{"preset", "zust"}});
  const bool ok = grad.vanishes && !rot.vanishes && std::abs(ratio - kRotationalRatio) <= kRotationalRel * kRotationalRatio &&
                  wedge.exit_code == 0;
  report(5, "zust consistency", ok,
         std::string("gradient ") + (grad.vanishes ? "vanishes" : "fails") + fmt(", rotational ratio %.4f", ratio) +
             ", composed wedge-null " + (wedge.exit_code == 0 ? "passes" : "fails"));
}

void corrector_check() {
  CommandOutput out = run_command("corrector", {{"preset", "corrector"}});
  const bool raw_fails = out.result["raw"]["verdict"] == "does not vanish";
  const bool corrected = out.result["corrected"]["verdict"] == "vanishes";
  report(6, "corrector", raw_fails && corrected,
         "raw " + out.result["raw"]["verdict"].get<std::string>() + ", corrected " +
             out.result["corrected"]["verdict"].get<std::string>() + ", sign " + out.result["sign"].get<std::string>());
}

void frobenius_smooth() {
  auto t0 = std::chrono::steady_clock::now();
  CommandOutput out = run_command("solve-pfaff", {{"preset", "exp2d"}, {"diagnostics", false}});
  const double secs = seconds_since(t0);
  const double err = std::abs(out.result["theta_end"].get<double>() - std::exp(2.0));
  json study = preset("exp2d");
  study.erase("command");
  study["study"] = "pfaff";
  study["levels"] = {4, 8};
  study["reference"] = std::exp(2.0);
  const double order = run_command("converge", study).result["fitted_order"].get<double>();
  report(7, "frobenius smooth consistency", err < kExp2dTol && order >= kExp2dOrder && secs < kExp2dSeconds,
         fmt("|theta(1,1) - e^2| = %.3e", err) + fmt(", order %.2f", order) + fmt(", %.2f s", secs));
}

const Field& grid_named(const CommandOutput& out, const std::string& name) {
  for (const auto& [n, f] : out.grids)
    if (n == name) return f;
  throw std::runtime_error("missing grid " + name);
}

void frobenius_rough() {
  const json cfg = preset("frob1_weierstrass");
  CommandOutput out = run_command("solve-pfaff", cfg);
  const Field& theta = grid_named(out, "theta");
  const Field g = make_signal(cfg["g"]);
  // Young chain rule: theta = theta0 exp(g - g(p0)).
  const double g0 = g.scalar(make_point({0, 0}));
  double err = 0.0;
  const Grid& G = theta.grid();
  for (std::size_t q = 0; q < G.size(); ++q)
    err = std::max(err, std::abs(theta.data()[q] - std::exp(g.scalar(G.point(q)) - g0)));
  json study = cfg;
  study.erase("command");
  study["study"] = "mollify";
  study["eps"] = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  CommandOutput st = run_command("converge", study);
  std::string errs;
  for (const auto& e : st.result["errors"]) errs += fmt(" %.2e", e.get<double>());
  const bool ok = out.exit_code == 0 && err < kFrob1Tol && st.result["monotone"].get<bool>();
  report(8, "frobenius rough well-posedness", ok,
         fmt("iterations %.0f", out.result["iterations"].get<double>()) + fmt(", |theta - exp(dg)| = %.3e", err) +
             ", mollified errors" + errs);
}

void frob2_sweep() {
  json cfg = preset("frob2_weierstrass");
  cfg["level"] = 12;
  CommandOutput out = run_command("solve-pfaff", cfg);
  const double diff = out.result["diagnostics"]["sweep_order_diff"].get<double>();
  report(9, "frob-2 path independence", diff < kSweepTol, fmt("sweep order difference %.3e at level 12", diff));
}

void implicit_function() {
  CommandOutput out = run_command("solve-implicit", {{"preset", "implicit_cubic"}});
  const Field& theta = grid_named(out, "theta");
  double err = 0.0;
  const Grid& G = theta.grid();
  for (std::size_t q = 0; q < G.size(); ++q) {
    const double x = G.point(q)[0];
    const double root = bisect([x](double y) { return y * y * y + y - std::sin(x); }, -2.0, 2.0);
    err = std::max(err, std::abs(theta.data()[q] - root));
  }
  const json& gd = out.result["g_derivative"];
  const bool rate_ok = gd["pass"].get<bool>();
  CommandOutput deg = run_command_safe("solve-implicit", {{"preset", "implicit_degenerate"}});
  const bool degenerate = deg.exit_code == kExitCheckFailed && deg.result["error"]["kind"] == "degeneracy";
  const std::string slope = gd["fitted_exponent"].is_null() ? "exact" : fmt("%.3f", gd["fitted_exponent"].get<double>());
  report(10, "implicit function", err < kImplicitTol && rate_ok && degenerate,
         fmt("max |theta - bisection| = %.3e", err) + ", g-derivative exponent " + slope +
             ", degenerate preset " + (degenerate ? "raises degeneracy" : "does not raise degeneracy"));
}

void gronwall() {
  CommandOutput out = run_command("converge", {{"preset", "gronwall"}});
  const double var = out.result["variation"].get<double>();
  const bool finite = out.result["finite"].get<bool>();
  std::string ratios;
  for (const auto& r : out.result["rows"]) ratios += fmt(" %.5f", r["ratio"].get<double>());
  report(11, "young-gronwall", finite && var < kGronwallVariation, fmt("variation %.3e, ratios", var) + ratios);
}

void determinism() {
  int mismatched = 0;
  std::string which;
  for (const auto& name : preset_names()) {
    const std::string cmd = preset(name)["command"].get<std::string>();
    const std::string a = run_command_safe(cmd, {{"preset", name}}).result.dump();
    const std::string b = run_command_safe(cmd, {{"preset", name}}).result.dump();
    if (a != b) {
      ++mismatched;
      which += " " + name;
    }
  }
  report(12, "determinism", mismatched == 0,
         std::to_string(preset_names().size()) + " presets rerun, " + std::to_string(mismatched) + " differ" + which);
}

}  // namespace

int main() {
  guarded(1, "young oracle", young_oracle);
  guarded(2, "sewing rate", sewing_rate);
  guarded(3, "stokes/parts identity", parts_identity);
  guarded(4, "jet round trip", jet_roundtrip);
  guarded(5, "zust consistency", zust_consistency);
  guarded(6, "corrector", corrector_check);
  guarded(7, "frobenius smooth consistency", frobenius_smooth);
  guarded(8, "frobenius rough well-posedness", frobenius_rough);
  guarded(9, "frob-2 path independence", frob2_sweep);
  guarded(10, "implicit function", implicit_function);
  guarded(11, "young-gronwall", gronwall);
  guarded(12, "determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
