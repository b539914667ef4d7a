// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/jets.hpp>

#include <algorithm>
#include <cmath>

namespace roughfrob {

JetCandidate make_jet(const Driver& V, const Field& g) { return {jet_field(V, g), g, V}; }

json JetReport::to_json() const {
  json r = json::array();
  for (const auto& a : rows) r.push_back(a.to_json());
  return {{"verdict", vanishes ? "vanishes" : "does not vanish"},
          {"scale", scale},
          {"cells_level", cells_level},
          {"rows", r}};
}

double seminorm_scale(const Field& v, const Field& g, int level) {
  auto semi = [level](const Field& f) {
    HolderOptions o;
    o.level = f.is_grid() && level < 0 ? -1 : (level < 0 ? (f.dim() == 1 ? 12 : f.dim() == 2 ? 8 : 5) : level);
    return holder_seminorm(f, std::min(1.0, f.exponent()), o).seminorm;
  };
  return semi(v) * semi(g);
}

namespace {

std::vector<Rectangle> base_rectangles(const Box& box) {
  std::vector<Rectangle> out;
  for (int a = 0; a < box.dim; ++a)
    for (int b = a + 1; b < box.dim; ++b) out.push_back(Rectangle::of_box(box, a, b));
  return out;
}

int finest_grid_level(const Field& f) {
  if (!f.is_grid()) return -1;
  int L = 24;
  for (int i = 0; i < f.dim(); ++i) L = std::min(L, f.grid().levels[i]);
  return L;
}

}  // namespace

JetReport jet_test(const JetCandidate& c, const JetTestOptions& opt) {
  check_young_pair(c.v, c.g);
  if (c.g.dim() < 2) throw Error(ErrorKind::Config, "jet test needs at least two parameters");
  if (opt.depth < 2) throw Error(ErrorKind::Config, "jet test depth must be at least 2");
  JetReport rep;
  int cells = opt.cells_level;
  if (cells < 0) {
    int L = std::max(finest_grid_level(c.v), finest_grid_level(c.g));
    int Lv = finest_grid_level(c.v), Lg = finest_grid_level(c.g);
    if (Lv >= 0 && Lg >= 0) L = std::min(Lv, Lg);
    cells = L >= 0 ? std::max(1, L - opt.depth) : 8;
  }
  rep.cells_level = cells;
  rep.scale = 1.0 + seminorm_scale(c.v, c.g, opt.seminorm_level);
  const int d = c.v.rows();
  rep.rows.resize(std::size_t(d));
  for (auto& r : rep.rows) {
    r.k = 2;
    r.tol = opt.tol * rep.scale;
  }
  std::vector<Rectangle> level = base_rectangles(c.g.domain());
  const double diam0 = level.front().diam();
  for (int j = 0; j <= opt.depth; ++j) {
    std::vector<Mat> vals(level.size());
    parallel_for(level.size(), [&](std::size_t i) { vals[i] = boundary_sum(c.v, c.g, level[i], cells); });
    const double dj = diam0 / std::exp2(j);
    for (int r = 0; r < d; ++r) {
      double mx = 0.0;
      for (const auto& v : vals) mx = std::max(mx, std::abs(v(r, 0)));
      rep.rows[std::size_t(r)].table.push_back({j, dj, mx / (dj * dj), level.size()});
    }
    if (j == opt.depth) break;
    std::vector<Rectangle> next;
    next.reserve(level.size() * 4);
    for (const auto& q : level)
      for (const auto& ch : q.children()) next.push_back(ch);
    level = std::move(next);
  }
  rep.vanishes = true;
  for (auto& r : rep.rows) {
    finish_additivity(r);
    rep.vanishes = rep.vanishes && r.vanishes;
  }
  return rep;
}

namespace {

std::array<int, kMaxDim> snap(const Grid& G, const Point& p) {
  std::array<int, kMaxDim> idx{0, 0, 0};
  for (int i = 0; i < G.box.dim; ++i) {
    double u = (p[i] - G.box.lower[i]) / G.spacing(i);
    int k = int(std::lround(u));
    if (std::abs(u - k) > 1e-9 || k < 0 || k >= G.count(i))
      throw Error(ErrorKind::Config, "base point is not a grid point at the requested level");
    idx[i] = k;
  }
  return idx;
}

}  // namespace

Field integrate_jet(const JetCandidate& c, const Point& p0, const Mat& theta0,
                    const JetIntegrationOptions& opt) {
  check_young_pair(c.v, c.g);
  const int d = c.v.rows(), k = c.v.cols();
  if (theta0.rows() != d || theta0.cols() != 1)
    throw Error(ErrorKind::Config, "initial value shape does not match the jet rows");
  const Box& box = c.g.domain();
  const int m = box.dim;
  {
    std::array<bool, kMaxDim> seen{false, false, false};
    for (int s = 0; s < m; ++s) {
      int a = opt.order[s];
      if (a < 0 || a >= m || seen[a]) throw Error(ErrorKind::Config, "axis order is not a permutation");
      seen[a] = true;
    }
  }
  if (!opt.force && m >= 2) {
    JetReport jr = jet_test(c, opt.test);
    if (!jr.vanishes)
      throw Error(ErrorKind::Jet, "candidate fails the jet test; pass force to integrate anyway",
                  jr.to_json());
  }
  Grid G(box, opt.level);
  const auto idx0 = snap(G, p0);
  const std::size_t N = G.size();
  std::vector<double> th(N * std::size_t(d), 0.0);
  store(th, G.flat(idx0), theta0);

  std::vector<double> vs, gs;
  if (opt.sub_level == 0) {
    vs = sample(c.v, G).data();
    gs = sample(c.g, G).data();
  }
  const int sub = 1 << opt.sub_level;
  // Integral over the cell from node a to node b (adjacent along one axis).
  // With a model v = F(g), trapezoid plus the endpoint correction -(dv_b - dv_a)[dg, dg] / 12.
  const bool corrected = opt.corrected && c.model.has_value();
  const Mat no_z(0, 1);
  auto piece = [&](const Mat& ga, const Mat& gb, double* out) {
    const Driver& V = *c.model;
    const Mat va = V.F(ga, no_z), vb = V.F(gb, no_z);
    const auto da = V.dF_du(ga, no_z), db = V.dF_du(gb, no_z);
    const Mat dg = gb - ga;
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int l = 0; l < k; ++l) {
        s += 0.5 * (va(r, l) + vb(r, l)) * dg(l, 0);
        for (int lp = 0; lp < k; ++lp)
          s -= (db[std::size_t(lp)](r, l) - da[std::size_t(lp)](r, l)) * dg(l, 0) * dg(lp, 0) / 12.0;
      }
      out[r] += s;
    }
  };
  auto cell = [&](std::size_t a, std::size_t b, double* out) {
    for (int r = 0; r < d; ++r) out[r] = 0.0;
    if (corrected) {
      const Point pa = G.point(a), pb = G.point(b);
      Mat prev = opt.sub_level == 0 ? Mat(Eigen::Map<const Mat>(&gs[a * std::size_t(k)], k, 1)) : c.g.eval(pa);
      for (int s = 1; s <= sub; ++s) {
        Mat next;
        if (s == sub && opt.sub_level == 0) {
          next = Eigen::Map<const Mat>(&gs[b * std::size_t(k)], k, 1);
        } else {
          Point x = pa;
          const double t = double(s) / sub;
          for (int i = 0; i < m; ++i) x[i] = pa[i] + t * (pb[i] - pa[i]);
          next = c.g.eval(x);
        }
        piece(prev, next, out);
        prev = std::move(next);
      }
      return;
    }
    if (opt.sub_level == 0) {
      const double* va = &vs[a * std::size_t(d * k)];
      const double* vb = &vs[b * std::size_t(d * k)];
      const double* ga = &gs[a * std::size_t(k)];
      const double* gb = &gs[b * std::size_t(k)];
      for (int l = 0; l < k; ++l) {
        double dg = gb[l] - ga[l];
        for (int r = 0; r < d; ++r) out[r] += 0.5 * (va[l * d + r] + vb[l * d + r]) * dg;
      }
      return;
    }
    Point pa = G.point(a), pb = G.point(b);
    Mat acc = segment_sum(c.v, c.g, Segment{pa, pb}, opt.sub_level);
    for (int r = 0; r < d; ++r) out[r] = acc(r, 0);
  };

  std::array<bool, kMaxDim> done{false, false, false};
  for (int s = 0; s < m; ++s) {
    const int a = opt.order[s];
    std::vector<std::size_t> bases;
    for (std::size_t q = 0; q < N; ++q) {
      auto idx = G.unflat(q);
      bool ok = true;
      for (int b = 0; b < m; ++b)
        if (!done[b] && idx[b] != idx0[b]) ok = false;
      if (ok) bases.push_back(q);
    }
    const std::size_t st = G.stride(a);
    const int n = G.count(a);
    parallel_for(bases.size(), [&](std::size_t bi) {
      std::size_t q = bases[bi];
      std::vector<double> inc(static_cast<std::size_t>(d));
      for (int i = idx0[a]; i + 1 < n; ++i) {
        std::size_t cur = q + std::size_t(i - idx0[a]) * st;
        cell(cur, cur + st, inc.data());
        for (int r = 0; r < d; ++r) th[(cur + st) * d + r] = th[cur * d + r] + inc[r];
      }
      for (int i = idx0[a]; i > 0; --i) {
        std::size_t cur = q - std::size_t(idx0[a] - i) * st;
        cell(cur - st, cur, inc.data());
        for (int r = 0; r < d; ++r) th[(cur - st) * d + r] = th[cur * d + r] - inc[r];
      }
    });
    done[a] = true;
  }
  json spec = {{"kind", "integrated_jet"}, {"level", opt.level}};
  return Field::samples(G, d, 1, std::move(th), c.g.exponent(), spec);
}

json GDiffReport::to_json() const {
  json t = json::array();
  for (const auto& r : table) t.push_back({{"scale", r.scale}, {"remainder", r.remainder}});
  json fe = exact_zero ? json(nullptr) : json(fitted_exponent);
  return {{"fitted_exponent", fe}, {"fit_residual", fit_residual}, {"target", target},
          {"exact_zero", exact_zero}, {"pass", pass}, {"table", t}};
}

GDiffReport g_derivative_check(const Field& theta, const Field& v, const Field& g, double target,
                               const GDiffOptions& opt) {
  const int m = theta.dim();
  if (v.dim() != m || g.dim() != m) throw Error(ErrorKind::Config, "fields must share a domain");
  const int d = theta.rows(), k = g.rows();
  if (v.rows() != d || v.cols() != k || theta.cols() != 1 || g.cols() != 1)
    throw Error(ErrorKind::Config, "g-derivative shape mismatch");
  Grid G = theta.is_grid() && opt.level < 0
               ? theta.grid()
               : Grid(theta.domain(), opt.level < 0 ? (m == 1 ? 14 : m == 2 ? 10 : 6) : opt.level);
  const auto ts = sample(theta, G).data();
  const auto vs = sample(v, G).data();
  const auto gs = sample(g, G).data();
  const std::size_t N = G.size();
  int Lmin = 24;
  for (int i = 0; i < m; ++i) Lmin = std::min(Lmin, G.levels[i]);

  auto remainder = [&](std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (int r = 0; r < d; ++r) {
      double e = ts[q * d + r] - ts[p * d + r];
      for (int l = 0; l < k; ++l) e -= vs[p * std::size_t(d * k) + std::size_t(l * d + r)] * (gs[q * k + l] - gs[p * k + l]);
      acc += e * e;
    }
    return std::sqrt(acc);
  };

  GDiffReport rep;
  rep.target = target;
  std::vector<double> xs, ys;
  double peak_theta = 0.0;
  for (double x : ts) peak_theta = std::max(peak_theta, std::abs(x));
  // Directions: each axis, plus the main diagonal when m >= 2.
  const int ndir = m >= 2 ? m + 1 : 1;
  for (int j = 0; j < Lmin; ++j) {
    const int step = 1 << j;
    double ell = step * G.min_spacing();
    std::vector<double> best(N, 0.0);
    parallel_for(N, [&](std::size_t p) {
      auto idx = G.unflat(p);
      double mx = 0.0;
      for (int dir = 0; dir < ndir; ++dir) {
        auto jdx = idx;
        bool ok = true;
        for (int a = 0; a < m; ++a)
          if (dir == m || dir == a) {
            jdx[a] += step;
            if (jdx[a] >= G.count(a)) ok = false;
          }
        if (ok) mx = std::max(mx, remainder(p, G.flat(jdx)));
      }
      best[p] = mx;
    });
    double mx = 0.0;
    for (double b : best) mx = std::max(mx, b);
    rep.table.push_back({ell, mx});
  }
  const double h = G.min_spacing(), diam = G.box.diam();
  auto collect = [&](double lo, double hi) {
    xs.clear();
    ys.clear();
    for (const auto& r : rep.table)
      if (r.scale >= lo * (1 - 1e-12) && r.scale <= hi * (1 + 1e-12)) {
        xs.push_back(r.scale);
        ys.push_back(r.remainder);
      }
  };
  collect(opt.min_scale_factor * h, opt.max_scale_fraction * diam);
  if (xs.size() < 3) collect(h, diam / 2);
  const double floor = 1e-11 * std::max(1.0, peak_theta);
  bool all_small = true;
  for (double y : ys) all_small = all_small && y <= floor;
  if (all_small) {
    rep.exact_zero = true;
    rep.pass = true;
    return rep;
  }
  RateFit fit = fit_power_law(xs, ys, 0.0);
  rep.fitted_exponent = fit.slope;
  rep.fit_residual = fit.residual;
  rep.pass = fit.slope >= target - 0.1;
  return rep;
}

AdditivityReport wedge_null_check(const Field& gi, const Field& gj, int depth, double tol,
                                  int cells_level) {
  if (gi.rows() != 1 || gj.rows() != 1 || gi.cols() != 1 || gj.cols() != 1)
    throw Error(ErrorKind::Config, "wedge-null check takes scalar components");
  if (gi.dim() < 2 || gj.dim() != gi.dim()) throw Error(ErrorKind::Config, "wedge-null check needs a common domain of dimension >= 2");
  const double beta = std::min(gi.exponent(), gj.exponent());
  if (!(2 * beta > 1.0))
    throw Error(ErrorKind::Regularity, "wedge-null check needs 2 beta > 1", {{"beta", beta}});
  if (tol < 0.0) tol = 1e-3 * (1.0 + seminorm_scale(gi, gj));
  Rectangle Q = Rectangle::of_box(gi.domain(), 0, 1);
  return check_dyadic_additivity(
      RectFunctional([&](const Rectangle& r) { return boundary_sum(gi, gj, r, cells_level)(0, 0); }), Q,
      depth, tol);
}

json ZustReport::to_json() const {
  json p = json::array();
  for (const auto& x : pairs)
    p.push_back({{"i", x.i}, {"j", x.j},
                 {"mode", x.mode == ZustMode::CurlCondition ? "curl_condition" : "wedge_null"},
                 {"residual", x.residual}, {"holds", x.holds}});
  return {{"pairs", p}, {"conditions_hold", conditions_hold}, {"jet_test", jet.to_json()},
          {"consistent", consistent}};
}

namespace {

Field component(const Field& g, int i) {
  return Field::closed_form(
      g.domain(), 1, 1, [g, i](const Point& p) { return scalar_mat(g.eval(p)(i, 0)); }, g.exponent(),
      json{{"kind", "component"}, {"index", i}, {"of", g.spec()}});
}

}  // namespace

ZustReport zust_sufficiency_check(const JetCandidate& c, const std::vector<ZustMode>& modes,
                                  const JetTestOptions& opt, int grid_level) {
  if (!c.model) throw Error(ErrorKind::Config, "structured g-derivative of v is required");
  const double alpha = c.v.exponent(), beta = c.g.exponent();
  if (!(alpha + 2 * beta > 2.0))
    throw Error(ErrorKind::Regularity, "condition alpha + 2 beta > 2 fails", {{"alpha", alpha}, {"beta", beta}});
  const Driver& V = *c.model;
  const int k = V.k, d = V.rows;
  const std::size_t npairs = std::size_t(k * (k - 1) / 2);
  if (!modes.empty() && modes.size() != npairs && modes.size() != 1)
    throw Error(ErrorKind::Config, "need one mode per component pair");
  ZustReport rep;
  Grid G(c.g.domain(), grid_level);
  const auto gs = sample(c.g, G).data();
  Mat empty(0, 1);
  std::size_t pi = 0;
  rep.conditions_hold = true;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j, ++pi) {
      ZustMode mode = modes.empty() ? ZustMode::CurlCondition : modes[modes.size() == 1 ? 0 : pi];
      ZustReport::Pair pr{i, j, mode, 0.0, false};
      if (mode == ZustMode::CurlCondition) {
        double sup = 0.0, scale = 0.0;
        for (std::size_t q = 0; q < G.size(); ++q) {
          Mat u(k, 1);
          for (int l = 0; l < k; ++l) u(l, 0) = gs[q * k + l];
          auto dv = V.dF_du(u, empty);
          for (int r = 0; r < d; ++r) {
            sup = std::max(sup, std::abs(dv[std::size_t(i)](r, j) - dv[std::size_t(j)](r, i)));
            scale = std::max({scale, std::abs(dv[std::size_t(i)](r, j)), std::abs(dv[std::size_t(j)](r, i))});
          }
        }
        pr.residual = sup;
        pr.holds = sup <= 1e-8 * (1.0 + scale);
      } else {
        AdditivityReport w = wedge_null_check(component(c.g, i), component(c.g, j), opt.depth);
        pr.residual = w.max_ratio;
        pr.holds = w.vanishes;
      }
      rep.conditions_hold = rep.conditions_hold && pr.holds;
      rep.pairs.push_back(pr);
    }
  rep.jet = jet_test(c, opt);
  rep.consistent = !rep.conditions_hold || rep.jet.vanishes;
  return rep;
}

json CorrectorResult::to_json() const {
  json t = json::array();
  for (const auto& [s, r] : tried) t.push_back({{"sign", s}, {"jet_test", r.to_json()}});
  return {{"sign", sign},
          {"raw", raw.to_json()},
          {"corrected", result.to_json()},
          {"tried", t},
          {"t_exponent", t_exponent},
          {"s_exponent", s_exponent},
          {"anisotropic_ok", anisotropic_ok},
          {"raw_residual", raw_residual},
          {"corrector_boundary", corrector_boundary}};
}

CorrectorResult corrector(const JetCandidate& c, const CorrectorOptions& opt) {
  if (!c.model) throw Error(ErrorKind::Config, "structured g-derivative of v is required");
  const Driver& V = *c.model;
  if (c.g.dim() != 2 || V.k != 2 || V.rows != 1)
    throw Error(ErrorKind::Config, "corrector needs m = 2, two signal components and a row jet");
  const double alpha = c.v.exponent(), beta = c.g.exponent();
  if (!(alpha + 2 * beta > 2.0))
    throw Error(ErrorKind::Regularity, "condition alpha + 2 beta > 2 fails", {{"alpha", alpha}, {"beta", beta}});
  Grid G(c.g.domain(), opt.level);
  const int n0 = G.count(0), n1 = G.count(1);
  const auto gs = sample(c.g, G).data();
  // First component must not depend on t.
  for (int i = 0; i < n0; ++i) {
    double ref = gs[G.flat({i, 0, 0}) * 2];
    for (int j = 1; j < n1; ++j)
      if (std::abs(gs[G.flat({i, j, 0}) * 2] - ref) > 1e-12 * (1.0 + std::abs(ref)))
        throw Error(ErrorKind::Config, "first signal component must depend on the first coordinate only");
  }
  Mat empty(0, 1);
  auto curl = [&](const Point& p) {
    auto dv = V.dF_du(c.g.eval(p), empty);
    return dv[0](0, 1) - dv[1](0, 0);
  };
  const Field curl_field = Field::closed_form(
      c.g.domain(), 1, 1, [curl](const Point& p) { return scalar_mat(curl(p)); }, c.v.exponent());
  const Field g2 = component(c.g, 1);
  std::vector<double> corr(G.size(), 0.0);
  parallel_for(std::size_t(n0), [&](std::size_t i) {
    double acc = 0.0;
    for (int j = 0; j + 1 < n1; ++j) {
      std::size_t a = G.flat({int(i), j, 0}), b = G.flat({int(i), j + 1, 0});
      if (opt.sub_level == 0) {
        double ca = curl(G.point(a)), cb = curl(G.point(b));
        acc += 0.5 * (ca + cb) * (gs[b * 2 + 1] - gs[a * 2 + 1]);
      } else {
        acc += segment_sum(curl_field, g2, Segment{G.point(a), G.point(b)}, opt.sub_level)(0, 0);
      }
      corr[b] = acc;
    }
  });
  CorrectorResult res;
  res.corrector = Field::samples(G, 1, 1, corr, beta, json{{"kind", "corrector"}});

  // Grid versions so that every rectangle edge runs through sample nodes.
  const Field g_grid = sample(c.g, G);
  const auto vs = sample(c.v, G).data();
  auto candidate = [&](double sigma) {
    std::vector<double> out(vs);
    for (std::size_t q = 0; q < G.size(); ++q) out[q * 2] += sigma * corr[q];
    return JetCandidate{Field::samples(G, 1, 2, std::move(out), c.v.exponent()), g_grid, std::nullopt};
  };
  JetTestOptions topt = opt.test;
  JetCandidate raw = candidate(0.0);
  res.raw = jet_test(raw, topt);

  // Residual relation on the full box.
  Rectangle Q = Rectangle::of_box(c.g.domain(), 0, 1);
  const int full = opt.level;
  res.raw_residual = boundary_sum(raw.v, raw.g, Q, full)(0, 0);
  res.corrector_boundary = boundary_sum(res.corrector, component(g_grid, 0), Q, full)(0, 0);

  std::vector<std::pair<std::string, double>> signs;
  if (opt.sign == CorrectorSign::Minus || opt.sign == CorrectorSign::Auto) signs.push_back({"minus", -1.0});
  if (opt.sign == CorrectorSign::Plus || opt.sign == CorrectorSign::Auto) signs.push_back({"plus", 1.0});
  double best = INFINITY;
  for (const auto& [name, sigma] : signs) {
    JetCandidate cand = candidate(sigma);
    JetReport r = jet_test(cand, topt);
    res.tried.push_back({name, r});
    double resid = r.rows.front().max_ratio;
    if (r.vanishes && resid < best) {
      best = resid;
      res.sign = name;
      res.result = r;
      res.corrected = cand;
    }
  }
  if (res.sign.empty())
    throw Error(ErrorKind::Corrector, "no corrector sign yields a vanishing jet test", res.to_json());

  HolderOptions ht;
  ht.axes = 0x2;
  res.t_exponent = holder_seminorm(res.corrector, std::min(1.0, beta), ht).fitted_exponent;
  HolderOptions hs;
  hs.axes = 0x1;
  res.s_exponent = holder_seminorm(res.corrector, std::min(1.0, beta), hs).fitted_exponent;
  res.anisotropic_ok = res.t_exponent >= beta - 0.1 && res.s_exponent >= alpha + beta - 1.0 - 0.1;
  return res;
}

Field compose_g_derivative(const Field& Dh_f, const Field& Dg) {
  if (Dh_f.cols() != Dg.rows()) throw Error(ErrorKind::Config, "shape mismatch in chain rule");
  if (Dh_f.dim() != Dg.dim()) throw Error(ErrorKind::Config, "chain rule fields differ in domain");
  return Field::closed_form(
      Dg.domain(), Dh_f.rows(), Dg.cols(),
      [Dh_f, Dg](const Point& p) { return Mat(Dh_f.eval(p) * Dg.eval(p)); },
      std::min(Dh_f.exponent(), Dg.exponent()));
}

Field compose_graph_derivative(const Field& Dg_f, const Field& Dxn_f, const Field& Dg_theta) {
  if (Dxn_f.cols() != Dg_theta.rows() || Dxn_f.rows() != Dg_f.rows() || Dg_f.cols() != Dg_theta.cols())
    throw Error(ErrorKind::Config, "shape mismatch in graph chain rule");
  return Field::closed_form(
      Dg_f.domain(), Dg_f.rows(), Dg_f.cols(),
      [Dg_f, Dxn_f, Dg_theta](const Point& p) {
        return Mat(Dg_f.eval(p) + Dxn_f.eval(p) * Dg_theta.eval(p));
      },
      std::min({Dg_f.exponent(), Dxn_f.exponent(), Dg_theta.exponent()}));
}

json WeakJacobianReport::to_json() const {
  return {{"boundary", boundary}, {"area", area}, {"discrepancy", discrepancy}, {"relative", relative}};
}

WeakJacobianReport weak_jacobian_check(const Field& gi, const Field& gj, const Rectangle& Q, int cells,
                                       int boundary_level) {
  if (gi.rows() != 1 || gj.rows() != 1) throw Error(ErrorKind::Config, "weak Jacobian takes scalar fields");
  if (cells < 2) throw Error(ErrorKind::Config, "need at least two cells per side");
  WeakJacobianReport rep;
  rep.boundary = boundary_sum(gi, gj, Q, boundary_level)(0, 0);
  const double h1 = Q.len1 / cells, h2 = Q.len2 / cells;
  const double e1 = std::abs(h1) / 4, e2 = std::abs(h2) / 4;
  std::vector<double> rowsum(std::size_t(cells), 0.0);
  parallel_for(std::size_t(cells), [&](std::size_t a) {
    double acc = 0.0;
    for (int b = 0; b < cells; ++b) {
      Point x = Q.p;
      x[Q.axis1] += (double(a) + 0.5) * h1;
      x[Q.axis2] += (b + 0.5) * h2;
      auto d = [&](const Field& f, int ax, double e) {
        Point lo = x, hi = x;
        lo[ax] -= e;
        hi[ax] += e;
        return (f.eval(hi)(0, 0) - f.eval(lo)(0, 0)) / (2 * e);
      };
      double J = d(gi, Q.axis1, e1) * d(gj, Q.axis2, e2) - d(gi, Q.axis2, e2) * d(gj, Q.axis1, e1);
      acc += J;
    }
    rowsum[a] = acc * h1 * h2;
  });
  for (double r : rowsum) rep.area += r;
  rep.discrepancy = std::abs(rep.boundary - rep.area);
  rep.relative = rep.discrepancy / std::max({std::abs(rep.boundary), std::abs(rep.area), 1e-12});
  return rep;
}

}  // namespace roughfrob
