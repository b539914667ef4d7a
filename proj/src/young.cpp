// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/young.hpp>

#include <algorithm>
#include <cmath>

namespace roughfrob {

Rectangle Rectangle::of_box(const Box& b, int axis1, int axis2) {
  Rectangle r;
  for (int i = 0; i < b.dim; ++i) r.p[i] = b.lower[i];
  r.axis1 = axis1;
  r.axis2 = axis2;
  r.len1 = b.width(axis1);
  r.len2 = b.width(axis2);
  return r;
}

Point Rectangle::vertex(int k) const {
  Point v = p;
  if (k == 1 || k == 2) v[axis1] += len1;
  if (k == 2 || k == 3) v[axis2] += len2;
  return v;
}

double Rectangle::diam() const { return std::max(std::abs(len1), std::abs(len2)); }

std::array<Rectangle, 4> Rectangle::children() const {
  std::array<Rectangle, 4> out;
  for (int c = 0; c < 4; ++c) {
    Rectangle r = *this;
    r.len1 = len1 / 2;
    r.len2 = len2 / 2;
    if (c == 1 || c == 3) r.p[axis1] += len1 / 2;
    if (c == 2 || c == 3) r.p[axis2] += len2 / 2;
    out[c] = r;
  }
  return out;
}

std::array<Segment, 4> Rectangle::edges() const {
  return {Segment{vertex(0), vertex(1)}, Segment{vertex(1), vertex(2)},
          Segment{vertex(2), vertex(3)}, Segment{vertex(3), vertex(0)}};
}

json IntegralResult::to_json() const {
  auto mat = [](const Mat& m) {
    if (m.size() == 1) return json(m(0, 0));
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      a.push_back(m.cols() == 1 ? json(m(i, 0)) : row);
    }
    return a;
  };
  json t = json::array();
  for (const auto& [lv, v] : table) t.push_back({{"level", lv}, {"value", mat(v)}});
  return {{"value", mat(value)},   {"error", error},      {"germ_remainder", germ_remainder},
          {"level", level},        {"converged", converged}, {"warnings", warnings},
          {"table", t}};
}

Mat sample_sum(const std::vector<Mat>& f, const std::vector<Mat>& g, std::size_t stride) {
  Mat acc = Mat::Zero(f.front().rows(), g.front().cols());
  for (std::size_t i = 0; i + stride < f.size(); i += stride)
    acc.noalias() += 0.5 * (f[i] + f[i + stride]) * (g[i + stride] - g[i]);
  return acc;
}

Mat path_sum(const std::function<Mat(double)>& f, const std::function<Mat(double)>& g, int level) {
  const std::size_t n = std::size_t(1) << level;
  Mat fa = f(0.0), ga = g(0.0);
  Mat acc = Mat::Zero(fa.rows(), ga.cols());
  for (std::size_t i = 1; i <= n; ++i) {
    double t = i == n ? 1.0 : double(i) / double(n);
    Mat fb = f(t), gb = g(t);
    acc.noalias() += 0.5 * (fa + fb) * (gb - ga);
    fa = std::move(fb);
    ga = std::move(gb);
  }
  return acc;
}

void check_young_pair(const Field& f, const Field& g) {
  if (f.cols() != g.rows() || g.cols() != 1)
    throw Error(ErrorKind::Config, "integrand shape does not contract with integrator");
  if (!(f.exponent() + g.exponent() > 1.0))
    throw Error(ErrorKind::Regularity,
                "Young integration needs alpha + beta > 1",
                {{"alpha", f.exponent()}, {"beta", g.exponent()}});
}

namespace {

using PathFn = std::function<Mat(double)>;

/// Samples of one path, refined by halving and reusing earlier values.
struct PathSamples {
  PathFn f, g;
  std::vector<Mat> fs, gs;

  void init(int level) {
    const std::size_t n = std::size_t(1) << level;
    fs.resize(n + 1);
    gs.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      double t = i == n ? 1.0 : double(i) / double(n);
      fs[i] = f(t);
      gs[i] = g(t);
    }
  }
  void refine() {
    const std::size_t n = fs.size() - 1;
    std::vector<Mat> nf(2 * n + 1), ng(2 * n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      nf[2 * i] = std::move(fs[i]);
      ng[2 * i] = std::move(gs[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double t = double(2 * i + 1) / double(2 * n);
      nf[2 * i + 1] = f(t);
      ng[2 * i + 1] = g(t);
    }
    fs = std::move(nf);
    gs = std::move(ng);
  }
  Mat sum() const { return sample_sum(fs, gs); }
};

IntegralResult refine_paths(std::vector<PathSamples>& paths, const IntegrationOptions& opt) {
  if (opt.min_level < 0 || opt.max_level < opt.min_level || opt.max_level > 24)
    throw Error(ErrorKind::Config, "invalid refinement levels");
  IntegralResult r;
  for (auto& p : paths) p.init(opt.min_level);
  std::vector<double> diffs;
  for (int L = opt.min_level;; ++L) {
    Mat total = paths.front().sum();
    for (std::size_t e = 1; e < paths.size(); ++e) total += paths[e].sum();
    r.table.emplace_back(L, total);
    r.value = total;
    r.level = L;
    if (r.table.size() >= 2) {
      double d = norm(total - r.table[r.table.size() - 2].second);
      diffs.push_back(d);
      r.error = d;
      if (d <= opt.tol * std::max(1.0, norm(total))) {
        r.converged = true;
        break;
      }
    }
    if (L >= opt.max_level) break;
    for (auto& p : paths) p.refine();
  }
  if (diffs.size() >= 4) {
    std::size_t n = diffs.size();
    if (diffs[n - 1] >= diffs[n - 2] && diffs[n - 2] >= diffs[n - 3] && diffs[n - 3] >= diffs[n - 4])
      r.warnings.push_back("refinement differences not decreasing over 3 levels");
  }
  if (!r.converged && r.warnings.empty())
    r.warnings.push_back("tolerance not reached by max_level");
  return r;
}

PathFn along(const Field& f, const Segment& s) {
  return [f, s](double t) {
    Point x = s.p;
    for (int i = 0; i < kMaxDim; ++i) x[i] = s.p[i] + t * (s.q[i] - s.p[i]);
    if (t == 1.0) x = s.q;
    return f(x);
  };
}

}  // namespace

Mat segment_sum(const Field& f, const Field& g, const Segment& s, int level) {
  return path_sum(along(f, s), along(g, s), level);
}

Mat boundary_sum(const Field& f, const Field& g, const Rectangle& Q, int level) {
  auto e = Q.edges();
  Mat acc = segment_sum(f, g, e[0], level);
  for (int i = 1; i < 4; ++i) acc += segment_sum(f, g, e[i], level);
  return acc;
}

IntegralResult young_integral_segment(const Field& f, const Field& g, const Segment& s,
                                      const IntegrationOptions& opt) {
  if (opt.check_regularity) check_young_pair(f, g);
  if (!f.domain().contains(s.p) || !f.domain().contains(s.q) || !g.domain().contains(s.p) ||
      !g.domain().contains(s.q))
    throw Error(ErrorKind::Domain, "segment leaves the field domain");
  std::vector<PathSamples> paths(1);
  paths[0].f = along(f, s);
  paths[0].g = along(g, s);
  IntegralResult r = refine_paths(paths, opt);
  r.germ_remainder = norm(r.value - f(s.p) * (g(s.q) - g(s.p)));
  return r;
}

IntegralResult young_integral_1d(const Field& f, const Field& g, double a, double b,
                                 const IntegrationOptions& opt) {
  if (f.dim() != 1 || g.dim() != 1)
    throw Error(ErrorKind::Config, "young_integral_1d needs one-dimensional fields");
  return young_integral_segment(f, g, Segment{make_point({a}), make_point({b})}, opt);
}

IntegralResult boundary_integral(const Field& f, const Field& g, const Rectangle& Q,
                                 const IntegrationOptions& opt) {
  if (opt.check_regularity) check_young_pair(f, g);
  if (Q.axis1 == Q.axis2 || Q.axis1 >= f.dim() || Q.axis2 >= f.dim())
    throw Error(ErrorKind::Config, "rectangle sides must follow two distinct axes");
  for (int k = 0; k < 4; ++k)
    if (!f.domain().contains(Q.vertex(k)) || !g.domain().contains(Q.vertex(k)))
      throw Error(ErrorKind::Domain, "rectangle leaves the field domain");
  auto edges = Q.edges();
  std::vector<PathSamples> paths(4);
  for (int e = 0; e < 4; ++e) {
    paths[e].f = along(f, edges[e]);
    paths[e].g = along(g, edges[e]);
  }
  IntegralResult r = refine_paths(paths, opt);
  // The germ over a closed loop is f_p times a zero increment.
  r.germ_remainder = norm(r.value);
  return r;
}

json AdditivityReport::to_json() const {
  json t = json::array();
  for (const auto& r : table)
    t.push_back({{"level", r.level}, {"diam", r.diam}, {"max_ratio", r.max_ratio},
                 {"objects", r.objects}});
  return {{"k", k},
          {"max_ratio", max_ratio},
          {"level_slope", level_slope},
          {"decay_exponent", decay_exponent},
          {"tol", tol},
          {"verdict", vanishes ? "vanishes" : "does not vanish"},
          {"table", t}};
}

void finish_additivity(AdditivityReport& rep) {
  std::vector<double> xs, ys;
  bool all_small = true;
  for (const auto& r : rep.table) {
    xs.push_back(std::exp2(-double(r.level)));
    ys.push_back(r.max_ratio);
    if (!(r.max_ratio < rep.tol)) all_small = false;
  }
  RateFit fit = fit_power_law(xs, ys, 1e-300);
  rep.decay_exponent = fit.exact_zero ? 0.0 : fit.slope;
  rep.level_slope = -rep.decay_exponent;
  rep.max_ratio = rep.table.empty() ? 0.0 : rep.table.back().max_ratio;
  rep.vanishes = rep.max_ratio < rep.tol && (rep.level_slope < -0.1 || all_small);
}

AdditivityReport check_dyadic_additivity(const RectFunctional& F, const Rectangle& Q, int depth,
                                         double tol) {
  if (depth < 2) throw Error(ErrorKind::Config, "additivity depth must be at least 2");
  if (depth > 10) throw Error(ErrorKind::Config, "additivity depth above 10 is not supported");
  AdditivityReport rep;
  rep.k = 2;
  rep.tol = tol;
  std::vector<Rectangle> level{Q};
  for (int j = 0; j <= depth; ++j) {
    std::vector<double> vals(level.size());
    parallel_for(level.size(), [&](std::size_t i) { vals[i] = std::abs(F(level[i])); });
    const double d = Q.diam() / std::exp2(j);
    double mx = 0.0;
    for (double v : vals) mx = std::max(mx, v);
    rep.table.push_back({j, d, mx / (d * d), level.size()});
    if (j == depth) break;
    std::vector<Rectangle> next;
    next.reserve(level.size() * 4);
    for (const auto& r : level)
      for (const auto& c : r.children()) next.push_back(c);
    level = std::move(next);
  }
  finish_additivity(rep);
  return rep;
}

AdditivityReport check_dyadic_additivity(const SegFunctional& F, const Segment& s, int depth,
                                         double tol) {
  if (depth < 2) throw Error(ErrorKind::Config, "additivity depth must be at least 2");
  if (depth > 20) throw Error(ErrorKind::Config, "additivity depth above 20 is not supported");
  AdditivityReport rep;
  rep.k = 1;
  rep.tol = tol;
  const double len = dist(s.p, s.q, kMaxDim);
  for (int j = 0; j <= depth; ++j) {
    const std::size_t n = std::size_t(1) << j;
    std::vector<double> vals(n);
    parallel_for(n, [&](std::size_t i) {
      Segment c;
      for (int a = 0; a < kMaxDim; ++a) {
        c.p[a] = s.p[a] + (s.q[a] - s.p[a]) * double(i) / double(n);
        c.q[a] = s.p[a] + (s.q[a] - s.p[a]) * double(i + 1) / double(n);
      }
      vals[i] = std::abs(F(c));
    });
    const double d = len / double(n);
    double mx = 0.0;
    for (double v : vals) mx = std::max(mx, v);
    rep.table.push_back({j, d, mx / d, n});
  }
  finish_additivity(rep);
  return rep;
}

}  // namespace roughfrob
