// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/calculus.hpp>

#include <algorithm>
#include <cmath>

namespace roughfrob {

Mat delta(const Field& f, const Point& p, const Point& q) { return f(q) - f(p); }

Mat delta2(const TwoPoint& w, const Point& x, const Point& y, const Point& z) {
  return w(y, z) - w(x, z) + w(x, y);
}

RateFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, double floor) {
  RateFit r;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (x[i] > 0.0 && y[i] > floor && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  r.points = int(lx.size());
  if (lx.empty()) {
    r.exact_zero = true;
    return r;
  }
  if (lx.size() == 1) {
    r.intercept = ly[0];
    return r;
  }
  const double n = double(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  r.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double e = ly[i] - (r.intercept + r.slope * lx[i]);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  return r;
}

json HolderReport::to_json() const {
  json rows = json::array();
  for (const auto& r : table) rows.push_back({{"scale", r.scale}, {"max_ratio", r.max_ratio}});
  return {{"alpha", alpha},
          {"seminorm", seminorm},
          {"fitted_exponent", fitted_exponent},
          {"fit_residual", fit_residual},
          {"table", rows}};
}

namespace {

int default_level(int dim) { return dim == 1 ? 14 : dim == 2 ? 9 : 6; }

}  // namespace

HolderReport holder_seminorm(const Field& f, double alpha, const HolderOptions& opt) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::Config, "Holder exponent must lie in (0,1]");
  Grid grid = f.is_grid() && opt.level < 0
                  ? f.grid()
                  : Grid(f.domain(), opt.level < 0 ? default_level(f.dim()) : opt.level);
  const std::size_t n = grid.size();
  if (n < 2) throw Error(ErrorKind::Config, "grid has fewer than two points");
  const Field s = sample(f, grid);
  const auto& d = s.data();
  const int sz = s.rows() * s.cols();
  const int m = grid.box.dim;

  auto diff_norm = [&](std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (int e = 0; e < sz; ++e) {
      double t = d[b * sz + e] - d[a * sz + e];
      acc += t * t;
    }
    return std::sqrt(acc);
  };
  auto second_norm = [&](std::size_t a, std::size_t b, std::size_t c) {
    double acc = 0.0;
    for (int e = 0; e < sz; ++e) {
      double t = d[c * sz + e] - 2.0 * d[b * sz + e] + d[a * sz + e];
      acc += t * t;
    }
    return std::sqrt(acc);
  };

  HolderReport rep;
  rep.alpha = alpha;
  int max_level = 0;
  for (int i = 0; i < m; ++i) max_level = std::max(max_level, grid.levels[i]);

  // First and second differences at dyadic separations 2^j cells along each probed axis.
  std::vector<double> first(std::size_t(max_level), 0.0), second(std::size_t(max_level), 0.0);
  std::vector<double> scale(std::size_t(max_level), 0.0);
  for (int ax = 0; ax < m; ++ax) {
    if (!(opt.axes & (1u << ax))) continue;
    const std::size_t st = grid.stride(ax);
    const int cnt = grid.count(ax);
    for (int j = 0; j < grid.levels[ax]; ++j) {
      const int step = 1 << j;
      const double ell = step * grid.spacing(ax);
      double mx1 = 0.0, mx2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        int i = grid.unflat(k)[ax];
        if (i + step < cnt) mx1 = std::max(mx1, diff_norm(k, k + step * st));
        if (i + 2 * step < cnt) mx2 = std::max(mx2, second_norm(k, k + step * st, k + 2 * step * st));
      }
      first[j] = std::max(first[j], mx1);
      second[j] = std::max(second[j], mx2);
      scale[j] = std::max(scale[j], ell);
      rep.seminorm = std::max(rep.seminorm, mx1 / std::pow(ell, alpha));
    }
  }
  for (int j = 0; j < max_level; ++j)
    if (scale[j] > 0.0) rep.table.push_back({scale[j], first[j] / std::pow(scale[j], alpha)});

  if (opt.scheme == PairScheme::AllPairs) {
    if (n > 1024) throw Error(ErrorKind::Config, "all_pairs scheme is limited to 1024 grid points");
    for (std::size_t a = 0; a < n; ++a) {
      Point pa = grid.point(a);
      for (std::size_t b = a + 1; b < n; ++b) {
        double r = dist(pa, grid.point(b), m);
        if (r > 0.0) rep.seminorm = std::max(rep.seminorm, diff_norm(a, b) / std::pow(r, alpha));
      }
    }
  }

  // Exponent fit on second differences over [2h, diam/16]; widen if too few scales.
  const double h = grid.min_spacing();
  const double diam = grid.box.diam();
  auto collect = [&](double lo, double hi) {
    std::vector<double> xs, ys;
    for (int j = 0; j < max_level; ++j)
      if (scale[j] >= lo * (1 - 1e-12) && scale[j] <= hi * (1 + 1e-12) && scale[j] > 0.0) {
        xs.push_back(scale[j]);
        ys.push_back(second[j]);
      }
    return std::make_pair(xs, ys);
  };
  auto [xs, ys] = collect(2 * h, diam / 16);
  if (xs.size() < 3) std::tie(xs, ys) = collect(h, diam / 2);
  double peak = 0.0;
  for (double y : ys) peak = std::max(peak, y);
  RateFit fit = fit_power_law(xs, ys, 1e-13 * std::max(1.0, peak));
  if (fit.exact_zero || fit.points < 2) {
    rep.fitted_exponent = 1.5;
  } else {
    rep.fitted_exponent = std::clamp(fit.slope, 1e-3, 1.5);
    rep.fit_residual = fit.residual;
  }
  return rep;
}

}  // namespace roughfrob
