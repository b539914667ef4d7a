// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/commands.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <roughfrob/config.hpp>
#include <roughfrob/expr.hpp>
#include <roughfrob/jets.hpp>
#include <roughfrob/signals.hpp>
#include <roughfrob/solvers.hpp>

namespace roughfrob {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Jet:
    case ErrorKind::Involutivity:
    case ErrorKind::Degeneracy:
    case ErrorKind::Corrector:
    case ErrorKind::Precondition:
      return kExitCheckFailed;
    case ErrorKind::Convergence:
      return kExitNonconvergence;
    default:
      return kExitConfig;
  }
}

json error_record(const Error& e) {
  return {{"status", "error"},
          {"error", {{"kind", error_kind_name(e.kind())}, {"message", e.what()}, {"detail", e.detail()}}},
          {"exit_code", exit_code_for(e.kind())}};
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "integrate",  "boundary",  "check-jet",      "check-wedge", "check-involutivity", "corrector",
      "solve-yde",  "solve-pfaff", "solve-implicit", "gen-signal", "converge"};
  return names;
}

namespace {

// ---------------------------------------------------------------- presets

json weierstrass(double beta, int seed, double amplitude = 1.0, int N = 14) {
  return {{"kind", "weierstrass_1d"}, {"beta", beta}, {"seed", seed}, {"amplitude", amplitude}, {"N", N}};
}

// No sub-unit frequencies: bounded range, so exponential solutions stay moderate.
json weierstrass_classic(double beta, int seed, double amplitude) {
  json w = weierstrass(beta, seed, amplitude);
  w["n_min"] = 0;
  return w;
}

const std::map<std::string, json>& preset_table() {
  static const std::map<std::string, json> table = [] {
    std::map<std::string, json> t;
    t["young_poly"] = {{"command", "integrate"}, {"f", "poly:t"}, {"g", "poly:t2"}, {"a", 0.0},
                       {"b", 1.0},            {"level", 14}};
    t["sewing"] = {{"command", "converge"},
                   {"study", "germ"},
                   {"f", weierstrass(0.6, 1)},
                   {"g", weierstrass(0.6, 11)},
                   {"fine_level", 16},
                   {"scales", {4, 12}}};
    t["parts"] = {{"command", "boundary"},
                  {"f", "expr:sin(x+2*y)"},
                  {"g", {{"kind", "axis_sum"}, {"axes", {weierstrass(0.8, 3), weierstrass(0.8, 4)}}}},
                  {"parts", true},
                  {"level", 12}};
    t["jet_roundtrip"] = {
        {"command", "check-jet"},
        {"v", "dsin"},
        {"g", {{"kind", "axis_sum"}, {"axes", {weierstrass(0.85, 5, 0.25), weierstrass(0.85, 6, 0.25)}}}},
        {"depth", 4},
        {"roundtrip", true},
        {"level", 10}};
    t["zust"] = {{"command", "check-jet"},
                 {"v", "g2_first"},
                 {"g", {{"kind", "composed"},
                        {"core", {{"kind", "axis_sum"}, {"axes", {weierstrass(0.9, 2), weierstrass(0.9, 9)}}}},
                        {"outer", {"id", "cube"}}}},
                 {"zust", {"wedge"}},
                 {"depth", 4}};
    t["corrector"] = {{"command", "corrector"},
                      {"v", "g2_first"},
                      {"g", {{"kind", "stack"},
                             {"components",
                              {{{"kind", "smooth_named"}, {"exprs", {"x"}}, {"dim", 2}},
                               {{"kind", "lacunary_md"}, {"m", 2}, {"beta", 0.85}, {"N", 7}, {"seed", 3}}}}}},
                      {"sign", "auto"},
                      {"level", 10},
                      {"depth", 4}};
    t["exp2d"] = {{"command", "solve-pfaff"}, {"mode", "diagonal"},      {"g", "identity2d"},
                  {"driver", {{"name", "linear_z"}, {"lambda", {1.0, 1.0}}}},
                  {"theta0", 1.0},          {"level", 12}};
    t["frob1_weierstrass"] = {
        {"command", "solve-pfaff"},
        {"mode", "wedge_null"},
        {"g", {{"kind", "axis_sum"}, {"axes", {weierstrass_classic(0.9, 4, 0.5), weierstrass_classic(0.9, 8, 0.5)}}}},
        {"driver", {{"name", "linear_z"}, {"lambda", {1.0}}}},
        {"theta0", 1.0},
        {"level", 10}};
    t["frob2_weierstrass"] = {
        {"command", "solve-pfaff"},
        {"mode", "diagonal"},
        {"g", {{"kind", "diagonal"}, {"axes", {weierstrass_classic(0.9, 12, 0.5), weierstrass_classic(0.9, 13, 0.5)}}}},
        {"driver", {{"name", "linear_z"}, {"lambda", {1.0, 1.0}}}},
        {"theta0", 1.0},
        {"level", 12}};
    t["implicit_cubic"] = {{"command", "solve-implicit"}, {"g", "expr:sin(x)"}, {"driver", "cubic_implicit"},
                           {"x0m", {0.0}},               {"x0n", 0.0},         {"level", 10}};
    t["implicit_degenerate"] = {{"command", "solve-implicit"}, {"g", "expr:sin(x)"}, {"driver", "square_implicit"},
                                {"x0m", {0.0}},               {"x0n", 0.0},         {"level", 8}};
    t["gronwall"] = {{"command", "converge"}, {"study", "gronwall"}, {"a", "expr:exp(t)"}, {"b", "const:0"},
                     {"u", "const:1"},        {"y", "poly:t"},        {"alpha", 0.9},        {"beta", 0.9},
                     {"levels", {10, 14}}};
    return t;
  }();
  return table;
}

// ---------------------------------------------------------------- config helpers

Mat to_mat(const json& j) {
  if (j.is_number()) return scalar_mat(j.get<double>());
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::Config, "expected a number or an array, got " + j.dump());
  if (j[0].is_array()) {
    const int r = int(j.size()), c = int(j[0].size());
    if (r > 4 || c > 4) throw Error(ErrorKind::Size, "matrices are limited to 4x4");
    Mat m(r, c);
    for (int i = 0; i < r; ++i) {
      if (int(j[i].size()) != c) throw Error(ErrorKind::Config, "ragged matrix " + j.dump());
      for (int k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
  }
  if (j.size() > 4) throw Error(ErrorKind::Size, "vectors are limited to 4 entries");
  Mat m(int(j.size()), 1);
  for (int i = 0; i < int(j.size()); ++i) m(i, 0) = j[i].get<double>();
  return m;
}

json from_mat(const Mat& m) {
  if (m.rows() == 1 && m.cols() == 1) return m(0, 0);
  if (m.cols() == 1) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back(m(i, 0));
    return a;
  }
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    a.push_back(r);
  }
  return a;
}

Point to_point(const json& j, int dim) {
  Point p{0, 0, 0};
  if (j.is_number()) {
    if (dim != 1) throw Error(ErrorKind::Config, "point needs " + std::to_string(dim) + " coordinates");
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || int(j.size()) != dim)
    throw Error(ErrorKind::Config, "point needs " + std::to_string(dim) + " coordinates, got " + j.dump());
  for (int i = 0; i < dim; ++i) p[i] = j[i].get<double>();
  return p;
}

json point_json(const Point& p, int dim) { return std::vector<double>(p.begin(), p.begin() + dim); }

Point corner(const Box& b, bool upper) {
  Point p{0, 0, 0};
  for (int i = 0; i < b.dim; ++i) p[i] = upper ? b.upper[i] : b.lower[i];
  return p;
}

Field signal(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw Error(ErrorKind::Config, "missing signal '" + key + "'");
  json spec = cfg[key].is_string() ? signal_shorthand(cfg[key].get<std::string>()) : cfg[key];
  // A top-level seed fills in random signals that do not pin their own.
  if (spec.is_object() && cfg.contains("seed") && !spec.contains("seed")) {
    const std::string kind = spec.value("kind", "");
    if (kind == "weierstrass_1d" || kind == "lacunary_md" || kind == "fbm_1d") spec["seed"] = cfg["seed"];
  }
  return make_signal(spec);
}

int get_int(const json& cfg, const std::string& key, int def) {
  if (!cfg.contains(key)) return def;
  const json& v = cfg[key];
  if (!v.is_number_integer()) {
    if (v.is_number() && std::floor(v.get<double>()) == v.get<double>()) return int(v.get<double>());
    throw Error(ErrorKind::Config, "'" + key + "' must be an integer");
  }
  return v.get<int>();
}

double get_num(const json& cfg, const std::string& key, double def) {
  if (!cfg.contains(key)) return def;
  if (!cfg[key].is_number()) throw Error(ErrorKind::Config, "'" + key + "' must be a number");
  return cfg[key].get<double>();
}

bool get_bool(const json& cfg, const std::string& key, bool def) {
  if (!cfg.contains(key)) return def;
  if (!cfg[key].is_boolean()) throw Error(ErrorKind::Config, "'" + key + "' must be true or false");
  return cfg[key].get<bool>();
}

/// [lo, hi] pair or explicit list.
std::vector<int> get_levels(const json& cfg, const std::string& key, std::vector<int> def) {
  if (!cfg.contains(key)) return def;
  auto v = cfg[key].get<std::vector<int>>();
  if (v.size() == 2 && v[0] < v[1] && v[1] - v[0] > 1) {
    std::vector<int> out;
    for (int l = v[0]; l <= v[1]; ++l) out.push_back(l);
    return out;
  }
  return v;
}

JetTestOptions jet_options(const json& cfg) {
  JetTestOptions o;
  o.depth = get_int(cfg, "depth", o.depth);
  o.tol = get_num(cfg, "tol", o.tol);
  o.cells_level = get_int(cfg, "cells_level", o.cells_level);
  return o;
}

std::array<int, kMaxDim> axis_order(const json& cfg, int m, bool reversed = false) {
  std::array<int, kMaxDim> order{0, 1, 2};
  if (cfg.contains("order")) {
    auto v = cfg["order"].get<std::vector<int>>();
    if (int(v.size()) != m) throw Error(ErrorKind::Config, "axis order needs one entry per axis");
    for (int i = 0; i < m; ++i) order[i] = v[std::size_t(i)];
  }
  if (reversed) std::reverse(order.begin(), order.begin() + m);
  return order;
}

Rectangle rectangle(const json& cfg, const Box& box) {
  if (!cfg.contains("rect")) return Rectangle::of_box(box, 0, 1);
  const json& r = cfg["rect"];
  Rectangle Q;
  Q.p = to_point(r.at("p"), box.dim);
  Q.axis1 = r.value("axis1", 0);
  Q.axis2 = r.value("axis2", 1);
  Q.len1 = r.value("len1", 1.0);
  Q.len2 = r.value("len2", 1.0);
  if (Q.axis1 == Q.axis2 || Q.axis1 < 0 || Q.axis2 < 0 || Q.axis1 >= box.dim || Q.axis2 >= box.dim)
    throw Error(ErrorKind::Config, "rectangle sides must lie along two distinct axes");
  for (int k = 0; k < 4; ++k)
    if (!box.contains(Q.vertex(k))) throw Error(ErrorKind::Domain, "rectangle leaves the signal domain");
  return Q;
}

double sup_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

PfaffProblem pfaff_problem(const json& cfg) {
  PfaffProblem P;
  P.g = signal(cfg, "g");
  if (!cfg.contains("driver")) throw Error(ErrorKind::Config, "missing 'driver'");
  P.F = make_driver(cfg["driver"]);
  P.beta = get_num(cfg, "beta", P.g.exponent());
  P.gamma = get_num(cfg, "gamma", P.F.gamma);
  P.p0 = cfg.contains("p0") ? to_point(cfg["p0"], P.g.dim()) : corner(P.g.domain(), false);
  P.theta0 = cfg.contains("theta0") ? to_mat(cfg["theta0"]) : Mat(Mat::Zero(P.F.rows, 1));
  if (cfg.contains("z_range"))
    for (const auto& r : cfg["z_range"]) P.z_range.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
  return P;
}

SolveResult solve_pfaff(const PfaffProblem& P, const json& cfg, int level, bool diagnostics = true) {
  const std::string mode = cfg.value("mode", "wedge_null");
  if (mode == "diagonal") {
    DiagonalOptions o;
    o.level = level;
    o.tol = get_num(cfg, "tol", o.tol);
    o.order = axis_order(cfg, P.g.dim());
    o.diagnostics = diagnostics && get_bool(cfg, "diagnostics", true);
    return solve_frobenius_diagonal(P, o);
  }
  if (mode == "wedge_null") {
    PfaffOptions o;
    o.level = level;
    o.tol = get_num(cfg, "tol", o.tol);
    o.max_iter = get_int(cfg, "max_iter", o.max_iter);
    o.max_split_depth = get_int(cfg, "max_split_depth", o.max_split_depth);
    o.zero_start = get_bool(cfg, "zero_start", false);
    o.wedge_depth = get_int(cfg, "depth", o.wedge_depth);
    o.seed = std::uint64_t(get_int(cfg, "seed", 1));
    return solve_frobenius_wedge_null(P, o);
  }
  throw Error(ErrorKind::Config, "unknown solve-pfaff mode '" + mode + "' (wedge_null or diagonal)");
}

ImplicitProblem implicit_problem(const json& cfg) {
  ImplicitProblem P;
  P.g = signal(cfg, "g");
  if (!cfg.contains("driver")) throw Error(ErrorKind::Config, "missing 'driver'");
  P.F = make_driver(cfg["driver"]);
  P.beta = get_num(cfg, "beta", P.g.exponent());
  P.gamma = get_num(cfg, "gamma", P.F.gamma);
  P.x0m = cfg.contains("x0m") ? to_point(cfg["x0m"], P.g.dim()) : corner(P.g.domain(), false);
  P.x0n = cfg.contains("x0n") ? to_mat(cfg["x0n"]) : Mat(Mat::Zero(P.F.rows, 1));
  return P;
}

// ---------------------------------------------------------------- commands

CommandOutput cmd_integrate(const json& cfg) {
  Field f = signal(cfg, "f"), g = signal(cfg, "g");
  IntegrationOptions o;
  o.max_level = get_int(cfg, "level", o.max_level);
  o.min_level = std::min(get_int(cfg, "min_level", o.min_level), o.max_level);
  o.tol = get_num(cfg, "tol", o.tol);
  CommandOutput out;
  IntegralResult r;
  if (f.dim() == 1 && !cfg.contains("p")) {
    double a = get_num(cfg, "a", f.domain().lower[0]), b = get_num(cfg, "b", f.domain().upper[0]);
    r = young_integral_1d(f, g, a, b, o);
  } else {
    Segment s{cfg.contains("p") ? to_point(cfg["p"], f.dim()) : corner(f.domain(), false),
              cfg.contains("q") ? to_point(cfg["q"], f.dim()) : corner(f.domain(), true)};
    r = young_integral_segment(f, g, s, o);
  }
  out.result = r.to_json();
  return out;
}

CommandOutput cmd_boundary(const json& cfg) {
  Field f = signal(cfg, "f"), g = signal(cfg, "g");
  IntegrationOptions o;
  o.max_level = get_int(cfg, "level", 12);
  o.min_level = std::min(get_int(cfg, "min_level", o.min_level), o.max_level);
  o.tol = get_num(cfg, "tol", o.tol);
  Rectangle Q = rectangle(cfg, f.domain());
  IntegralResult r = boundary_integral(f, g, Q, o);
  CommandOutput out;
  out.result = {{"integral", r.to_json()}, {"diam", Q.diam()}, {"area", Q.area()}};
  if (get_bool(cfg, "parts", false)) {
    IntegralResult s = boundary_integral(g, f, Q, o);
    out.result["swapped"] = s.to_json();
    out.result["parts_residual"] = from_mat(r.value + s.value);
  }
  return out;
}

CommandOutput cmd_check_jet(const json& cfg) {
  Field g = signal(cfg, "g");
  if (!cfg.contains("v")) throw Error(ErrorKind::Config, "missing jet driver 'v'");
  Driver V = make_driver(cfg["v"]);
  JetCandidate c = make_jet(V, g);
  JetTestOptions topt = jet_options(cfg);
  CommandOutput out;
  bool ok = true;
  if (cfg.contains("zust")) {
    std::vector<ZustMode> modes;
    for (const auto& m : cfg["zust"]) {
      const std::string s = m.get<std::string>();
      if (s == "curl" || s == "curl_condition") modes.push_back(ZustMode::CurlCondition);
      else if (s == "wedge" || s == "wedge_null") modes.push_back(ZustMode::WedgeNull);
      else throw Error(ErrorKind::Config, "unknown condition '" + s + "' (curl or wedge)");
    }
    ZustReport z = zust_sufficiency_check(c, modes, topt, get_int(cfg, "grid_level", 6));
    out.result["zust"] = z.to_json();
    out.result["jet_test"] = z.jet.to_json();
    ok = z.jet.vanishes && z.consistent;
  } else {
    JetReport jr = jet_test(c, topt);
    out.result["jet_test"] = jr.to_json();
    ok = jr.vanishes;
  }
  if (ok && get_bool(cfg, "roundtrip", false)) {
    JetIntegrationOptions io;
    io.level = get_int(cfg, "level", io.level);
    io.sub_level = get_int(cfg, "sub_level", 0);
    io.force = true;
    io.order = axis_order(cfg, g.dim());
    const Point p0 = cfg.contains("p0") ? to_point(cfg["p0"], g.dim()) : corner(g.domain(), false);
    const Mat th0 = cfg.contains("theta0") ? to_mat(cfg["theta0"]) : Mat(Mat::Zero(V.rows, 1));
    Field theta = integrate_jet(c, p0, th0, io);
    json rt;
    if (g.dim() >= 2) {
      io.order = axis_order(cfg, g.dim(), true);
      rt["path_order_diff"] = sup_diff(theta, integrate_jet(c, p0, th0, io));
    }
    GDiffReport gd = g_derivative_check(theta, c.v, c.g, get_num(cfg, "target", c.v.exponent() + g.exponent()));
    rt["g_derivative"] = gd.to_json();
    rt["theta_end"] = from_mat(theta(corner(g.domain(), true)));
    out.result["roundtrip"] = rt;
    out.grids.push_back({"theta", theta});
    ok = gd.pass;
  }
  out.result["status"] = ok ? "pass" : "fail";
  out.exit_code = ok ? kExitOk : kExitCheckFailed;
  return out;
}

CommandOutput cmd_check_wedge(const json& cfg) {
  Field g = signal(cfg, "g");
  if (g.cols() != 1 || g.rows() < 2) throw Error(ErrorKind::Config, "wedge check needs a vector signal with >= 2 components");
  const int depth = get_int(cfg, "depth", 4), cells = get_int(cfg, "cells_level", 8);
  const double tol = get_num(cfg, "tol", -1.0);
  auto comp = [&g](int i) {
    return Field::closed_form(g.domain(), 1, 1, [g, i](const Point& p) { return scalar_mat(g.eval(p)(i, 0)); },
                              g.exponent());
  };
  std::vector<std::pair<int, int>> pairs;
  if (cfg.contains("pairs")) {
    for (const auto& p : cfg["pairs"]) pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  } else {
    for (int i = 0; i < g.rows(); ++i)
      for (int j = i + 1; j < g.rows(); ++j) pairs.push_back({i, j});
  }
  CommandOutput out;
  json rows = json::array();
  bool ok = true;
  for (auto [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= g.rows() || j >= g.rows()) throw Error(ErrorKind::Config, "component index out of range");
    AdditivityReport w = wedge_null_check(comp(i), comp(j), depth, tol, cells);
    json r = {{"i", i}, {"j", j}, {"report", w.to_json()}};
    if (get_bool(cfg, "weak_jacobian", false))
      r["weak_jacobian"] = weak_jacobian_check(comp(i), comp(j), rectangle(cfg, g.domain())).to_json();
    rows.push_back(r);
    ok = ok && w.vanishes;
  }
  out.result = {{"pairs", rows}, {"status", ok ? "pass" : "fail"}};
  out.exit_code = ok ? kExitOk : kExitCheckFailed;
  return out;
}

CommandOutput cmd_check_involutivity(const json& cfg) {
  PfaffProblem P = pfaff_problem(cfg);
  InvolutivityReport r = check_involutivity(P, get_int(cfg, "lattice", 17));
  CommandOutput out;
  out.result = r.to_json();
  out.result["status"] = r.holds ? "pass" : "fail";
  out.exit_code = r.holds ? kExitOk : kExitCheckFailed;
  return out;
}

CommandOutput cmd_corrector(const json& cfg) {
  Field g = signal(cfg, "g");
  if (!cfg.contains("v")) throw Error(ErrorKind::Config, "missing jet driver 'v'");
  JetCandidate c = make_jet(make_driver(cfg["v"]), g);
  CorrectorOptions o;
  const std::string sign = cfg.value("sign", "auto");
  if (sign == "plus") o.sign = CorrectorSign::Plus;
  else if (sign == "minus") o.sign = CorrectorSign::Minus;
  else if (sign == "auto") o.sign = CorrectorSign::Auto;
  else throw Error(ErrorKind::Config, "sign must be plus, minus or auto");
  o.level = get_int(cfg, "level", o.level);
  o.sub_level = get_int(cfg, "sub_level", 0);
  o.test = jet_options(cfg);
  CorrectorResult r = corrector(c, o);
  CommandOutput out;
  out.result = r.to_json();
  out.result["status"] = "pass";
  out.grids.push_back({"corrector", r.corrector});
  return out;
}

CommandOutput cmd_solve_yde(const json& cfg) {
  Field y = signal(cfg, "y");
  if (!cfg.contains("driver")) throw Error(ErrorKind::Config, "missing 'driver'");
  Driver F = make_driver(cfg["driver"]);
  YdeOptions o;
  o.level = get_int(cfg, "level", o.level);
  o.tol = get_num(cfg, "tol", o.tol);
  o.max_iter = get_int(cfg, "max_iter", o.max_iter);
  const double a = get_num(cfg, "a", y.domain().lower[0]), b = get_num(cfg, "b", y.domain().upper[0]);
  const Mat th0 = cfg.contains("theta0") ? to_mat(cfg["theta0"]) : Mat(Mat::Zero(F.rows, 1));
  SolveResult r = solve_yde(F, y, th0, a, b, o);
  CommandOutput out;
  out.result = r.to_json();
  out.result["theta_end"] = from_mat(r.theta(make_point({b})));
  out.grids.push_back({"theta", r.theta});
  return out;
}

json probes(const Field& theta, const json& cfg) {
  json out = json::array();
  if (!cfg.contains("probes")) return out;
  for (const auto& p : cfg["probes"]) {
    Point x = to_point(p, theta.dim());
    out.push_back({{"point", point_json(x, theta.dim())}, {"theta", from_mat(theta(x))}});
  }
  return out;
}

CommandOutput cmd_solve_pfaff(const json& cfg) {
  PfaffProblem P = pfaff_problem(cfg);
  SolveResult r = solve_pfaff(P, cfg, get_int(cfg, "level", 8));
  CommandOutput out;
  out.result = r.to_json();
  out.result["mode"] = cfg.value("mode", "wedge_null");
  out.result["theta_end"] = from_mat(r.theta(corner(P.g.domain(), true)));
  out.result["probes"] = probes(r.theta, cfg);
  out.grids.push_back({"theta", r.theta});
  return out;
}

CommandOutput cmd_solve_implicit(const json& cfg) {
  ImplicitProblem P = implicit_problem(cfg);
  ImplicitOptions o;
  o.level = get_int(cfg, "level", o.level);
  o.tol = get_num(cfg, "tol", o.tol);
  o.max_iter = get_int(cfg, "max_iter", o.max_iter);
  o.max_halvings = get_int(cfg, "max_halvings", o.max_halvings);
  SolveResult r = solve_implicit(P, o);
  Field D = implicit_g_derivative(P, r.theta);
  const Field g_grid = sample(P.g, r.theta.grid());
  GDiffReport gd = g_derivative_check(r.theta, D, g_grid, get_num(cfg, "target", P.beta * (1.0 + P.gamma)));
  CommandOutput out;
  out.result = r.to_json();
  out.result["theta_end"] = from_mat(r.theta(corner(P.g.domain(), true)));
  out.result["probes"] = probes(r.theta, cfg);
  out.result["g_derivative"] = gd.to_json();
  if (cfg.contains("phi")) {
    if (P.g.dim() != 1 || P.F.rows != 1) throw Error(ErrorKind::Config, "phi is supported for one x and one y");
    Expr e = Expr::parse(cfg["phi"].get<std::string>());
    auto phi = [e](const Point& p, const Mat& th) { return e(Point{p[0], th(0, 0), 0.0}); };
    LevelSetReport ls = level_set_composition_check(phi, P, get_num(cfg, "phi_tol", 1e-6),
                                                    get_levels(cfg, "phi_levels", {o.level}));
    out.result["level_set"] = ls.to_json();
  }
  const bool ok = gd.pass && (!out.result.contains("level_set") || out.result["level_set"]["pass"].get<bool>());
  out.result["status"] = ok ? "pass" : "fail";
  out.exit_code = ok ? kExitOk : kExitCheckFailed;
  out.grids.push_back({"theta", r.theta});
  out.grids.push_back({"dtheta", D});
  return out;
}

CommandOutput cmd_gen_signal(const json& cfg) {
  Field f = signal(cfg, cfg.contains("signal") ? "signal" : "g");
  const int dim = f.dim();
  const int level = get_int(cfg, "level", dim == 1 ? 12 : dim == 2 ? 8 : 5);
  Field s = sample(f, Grid(f.domain(), level));
  HolderOptions ho;
  HolderReport h = holder_seminorm(s, std::min(1.0, f.exponent()), ho);
  CommandOutput out;
  out.result = {{"dim", dim},     {"rows", f.rows()},          {"cols", f.cols()},
                {"level", level}, {"points", s.grid().size()}, {"exponent", f.exponent()},
                {"spec", f.spec()}, {"holder", h.to_json()}};
  out.grids.push_back({"signal", s});
  return out;
}

// ---------------------------------------------------------------- convergence studies

json fit_json(const RateFit& f) {
  return {{"slope", f.slope}, {"residual", f.residual}, {"points", f.points}, {"exact_zero", f.exact_zero}};
}

CommandOutput study_integral(const json& cfg) {
  Field f = signal(cfg, "f"), g = signal(cfg, "g");
  check_young_pair(f, g);
  const auto levels = get_levels(cfg, "levels", {4, 12});
  if (levels.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least 3 levels");
  const double a = get_num(cfg, "a", f.domain().lower[0]), b = get_num(cfg, "b", f.domain().upper[0]);
  Segment s{make_point({a}), make_point({b})};
  std::vector<double> vals;
  for (int L : levels) vals.push_back(segment_sum(f, g, s, L)(0, 0));
  double ref;
  std::size_t n = levels.size();
  if (cfg.contains("reference")) {
    ref = get_num(cfg, "reference", 0.0);
  } else {
    ref = vals.back();
    --n;
  }
  std::vector<double> xs, es;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = std::abs(vals[i] - ref);
    xs.push_back(std::exp2(-levels[i]));
    es.push_back(err);
    rows.push_back({double(levels[i]), xs.back(), err});
  }
  RateFit fit = fit_power_law(xs, es, 1e-15);
  CommandOutput out;
  out.result = {{"study", "integral"}, {"reference", ref}, {"fit", fit_json(fit)}, {"fitted_order", fit.slope}};
  out.table_csv = csv_table({"level", "h", "error"}, rows);
  return out;
}

CommandOutput study_germ(const json& cfg) {
  Field f = signal(cfg, "f"), g = signal(cfg, "g");
  check_young_pair(f, g);
  if (f.dim() != 1) throw Error(ErrorKind::Config, "germ study takes one-dimensional signals");
  const int Lf = get_int(cfg, "fine_level", 16);
  const auto sc = get_levels(cfg, "scales", {4, 12});
  if (sc.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least 3 levels");
  if (sc.back() > Lf - 2) throw Error(ErrorKind::Config, "finest scale must stay 2 levels above fine_level");
  Grid G(f.domain(), Lf);
  const std::size_t n = G.size();
  std::vector<double> fs(n), gs(n), S(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    fs[i] = f(G.point(i))(0, 0);
    gs[i] = g(G.point(i))(0, 0);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) S[i + 1] = S[i] + 0.5 * (fs[i] + fs[i + 1]) * (gs[i + 1] - gs[i]);
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> rows;
  for (int j : sc) {
    const std::size_t step = std::size_t(1) << (Lf - j);
    double mx = 0.0;
    for (std::size_t i = 0; i + step < n; ++i)
      mx = std::max(mx, std::abs(S[i + step] - S[i] - fs[i] * (gs[i + step] - gs[i])));
    const double ell = G.spacing(0) * double(step);
    xs.push_back(ell);
    ys.push_back(mx);
    rows.push_back({double(j), ell, mx});
  }
  RateFit fit = fit_power_law(xs, ys, 1e-15);
  const double target = f.exponent() + g.exponent();
  CommandOutput out;
  out.result = {{"study", "germ"},       {"fit", fit_json(fit)},          {"fitted_exponent", fit.slope},
                {"target", target},      {"pass", fit.slope >= target - 0.1}};
  out.table_csv = csv_table({"level", "scale", "remainder"}, rows);
  return out;
}

CommandOutput study_mollify(const json& cfg) {
  PfaffProblem P = pfaff_problem(cfg);
  const int level = get_int(cfg, "level", 8);
  if (!cfg.contains("eps")) throw Error(ErrorKind::Config, "mollification study needs an 'eps' list");
  auto eps = cfg["eps"].get<std::vector<double>>();
  if (eps.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least 3 levels");
  SolveResult ref = solve_pfaff(P, cfg, level, false);
  std::vector<std::vector<double>> rows;
  std::vector<double> errs;
  for (double e : eps) {
    PfaffProblem Q = P;
    Q.g = mollify(P.g, e, get_int(cfg, "mollify_level", level)).with_exponent(P.g.exponent());
    SolveResult r = solve_pfaff(Q, cfg, level, false);
    errs.push_back(sup_diff(r.theta, ref.theta));
    rows.push_back({e, errs.back()});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] <= 1.1 * errs[i - 1];
  RateFit fit = fit_power_law(eps, errs, 1e-15);
  CommandOutput out;
  out.result = {{"study", "mollify"}, {"errors", errs}, {"monotone", monotone}, {"fit", fit_json(fit)}};
  out.table_csv = csv_table({"eps", "error"}, rows);
  out.exit_code = monotone ? kExitOk : kExitCheckFailed;
  return out;
}

CommandOutput study_pfaff(const json& cfg) {
  PfaffProblem P = pfaff_problem(cfg);
  const auto levels = get_levels(cfg, "levels", {5, 9});
  if (levels.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least 3 levels");
  if (!cfg.contains("reference")) throw Error(ErrorKind::Config, "pfaff study needs a 'reference' value at 'point'");
  const Mat ref = to_mat(cfg["reference"]);
  const Point x = cfg.contains("point") ? to_point(cfg["point"], P.g.dim()) : corner(P.g.domain(), true);
  std::vector<double> hs, es;
  std::vector<std::vector<double>> rows;
  for (int L : levels) {
    SolveResult r = solve_pfaff(P, cfg, L, false);
    const double e = (r.theta(x) - ref).cwiseAbs().maxCoeff();
    hs.push_back(std::exp2(-L));
    es.push_back(e);
    rows.push_back({double(L), hs.back(), e});
  }
  RateFit fit = fit_power_law(hs, es, 1e-15);
  CommandOutput out;
  out.result = {{"study", "pfaff"}, {"errors", es}, {"fit", fit_json(fit)}, {"fitted_order", fit.slope}};
  out.table_csv = csv_table({"level", "h", "error"}, rows);
  return out;
}

CommandOutput study_gronwall(const json& cfg) {
  Field a = signal(cfg, "a"), b = signal(cfg, "b"), u = signal(cfg, "u"), y = signal(cfg, "y");
  const auto levels = get_levels(cfg, "levels", {10, 14});
  if (levels.size() < 3) throw Error(ErrorKind::Config, "a convergence study needs at least 3 levels");
  GronwallReport r = verify_gronwall(a, b, u, y, get_num(cfg, "alpha", b.exponent()), get_num(cfg, "beta", a.exponent()),
                                     levels, get_num(cfg, "residual_tol", 1e-6));
  std::vector<std::vector<double>> rows;
  for (const auto& x : r.rows) rows.push_back({double(x.level), x.norm_a, x.norm_b, x.a0, x.ratio});
  CommandOutput out;
  out.result = r.to_json();
  out.result["study"] = "gronwall";
  out.table_csv = csv_table({"level", "norm_a", "norm_b", "a0", "ratio"}, rows);
  return out;
}

CommandOutput cmd_converge(const json& cfg) {
  const std::string study = cfg.value("study", "integral");
  if (study == "integral") return study_integral(cfg);
  if (study == "germ") return study_germ(cfg);
  if (study == "mollify") return study_mollify(cfg);
  if (study == "pfaff") return study_pfaff(cfg);
  if (study == "gronwall") return study_gronwall(cfg);
  throw Error(ErrorKind::Config, "unknown study '" + study + "' (integral, germ, mollify, pfaff, gronwall)");
}

/// Grid fields and tables go beside the result; file names are recorded relative to out_dir.
void write_outputs(CommandOutput& out, const json& cfg) {
  const std::string dir = cfg["out_dir"].get<std::string>();
  const std::string stem = cfg.value("out_stem", "result");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  json files = json::object();
  for (const auto& [name, field] : out.grids) {
    const std::string file = stem + "." + name + ".csv";
    write_grid_csv(field, dir + "/" + file);
    files[name] = file;
  }
  if (!out.table_csv.empty()) {
    const std::string file = stem + ".table.csv";
    std::ofstream o(dir + "/" + file);
    o << out.table_csv;
    if (!o) throw Error(ErrorKind::Config, "cannot write " + dir + "/" + file);
    files["table"] = file;
  }
  out.result["files"] = files;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : preset_table()) n.push_back(k);
    return n;
  }();
  return names;
}

json preset(const std::string& name) {
  auto it = preset_table().find(name);
  if (it == preset_table().end()) throw Error(ErrorKind::Config, "unknown preset '" + name + "'");
  return it->second;
}

json resolve_config(const json& cfg) {
  if (!cfg.is_object()) throw Error(ErrorKind::Config, "config must be a table");
  if (!cfg.contains("preset")) return cfg;
  json out = preset(cfg["preset"].get<std::string>());
  for (auto it = cfg.begin(); it != cfg.end(); ++it) out[it.key()] = it.value();
  return out;
}

CommandOutput run_command(const std::string& command, const json& cfg_in) {
  const json cfg = resolve_config(cfg_in);
  if (cfg.contains("command") && cfg["command"].get<std::string>() != command)
    throw Error(ErrorKind::Config, "config is for '" + cfg["command"].get<std::string>() + "', not '" + command + "'");
  CommandOutput out;
  if (command == "integrate") out = cmd_integrate(cfg);
  else if (command == "boundary") out = cmd_boundary(cfg);
  else if (command == "check-jet") out = cmd_check_jet(cfg);
  else if (command == "check-wedge") out = cmd_check_wedge(cfg);
  else if (command == "check-involutivity") out = cmd_check_involutivity(cfg);
  else if (command == "corrector") out = cmd_corrector(cfg);
  else if (command == "solve-yde") out = cmd_solve_yde(cfg);
  else if (command == "solve-pfaff") out = cmd_solve_pfaff(cfg);
  else if (command == "solve-implicit") out = cmd_solve_implicit(cfg);
  else if (command == "gen-signal") out = cmd_gen_signal(cfg);
  else if (command == "converge") out = cmd_converge(cfg);
  else throw Error(ErrorKind::Config, "unknown command '" + command + "'");
  out.result["command"] = command;
  if (!out.result.contains("status")) out.result["status"] = out.exit_code == kExitOk ? "pass" : "fail";
  out.result["exit_code"] = out.exit_code;
  if (cfg.contains("out_dir")) write_outputs(out, cfg);
  return out;
}

CommandOutput run_command_safe(const std::string& command, const json& cfg) {
  CommandOutput out;
  try {
    return run_command(command, cfg);
  } catch (const Error& e) {
    out.result = error_record(e);
    out.exit_code = exit_code_for(e.kind());
  } catch (const json::exception& e) {
    out.result = error_record(Error(ErrorKind::Config, std::string("bad config value: ") + e.what()));
    out.exit_code = kExitConfig;
  } catch (const std::bad_alloc&) {
    out.result = error_record(Error(ErrorKind::Size, "out of memory"));
    out.exit_code = kExitConfig;
  } catch (const std::exception& e) {
    out.result = error_record(Error(ErrorKind::Config, e.what()));
    out.exit_code = kExitConfig;
  }
  out.result["command"] = command;
  return out;
}

}  // namespace roughfrob
