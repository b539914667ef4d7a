// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/solvers.hpp>

#include <algorithm>
#include <cmath>

#include <roughfrob/signals.hpp>

namespace roughfrob {

json SolveResult::to_json() const {
  return {{"iterations", iterations}, {"residual", residual}, {"diagnostics", diagnostics},
          {"patching", patching}};
}

namespace {

using Line = std::vector<Mat>;
using Coef = std::function<Mat(std::size_t, const Mat&)>;

double sup_norm(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Heun step for d theta = c(i, theta) dy along samples ys, starting from theta0 at index 0.
Line heun(const std::vector<double>& ys, const Coef& c, const Mat& theta0) {
  Line th(ys.size());
  th[0] = theta0;
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    const double dy = ys[i + 1] - ys[i];
    Mat k1 = c(i, th[i]);
    Mat pred = th[i] + k1 * dy;
    Mat k2 = c(i + 1, pred);
    th[i + 1] = th[i] + 0.5 * (k1 + k2) * dy;
  }
  return th;
}

/// One Picard pass with the trapezoid germ: theta0 + sum 1/2 (c_i + c_{i+1}) dy_i.
Line picard(const std::vector<double>& ys, const Coef& c, const Line& th) {
  Line out(th.size());
  out[0] = th[0];
  Mat prev = c(0, th[0]);
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    Mat next = c(i + 1, th[i + 1]);
    out[i + 1] = out[i] + 0.5 * (prev + next) * (ys[i + 1] - ys[i]);
    prev = std::move(next);
  }
  return out;
}

bool stalled(const std::vector<double>& changes) {
  const std::size_t n = changes.size();
  if (n && !std::isfinite(changes.back())) return true;
  if (n && changes.back() > 1e150) return true;
  return n >= 4 && changes[n - 1] >= changes[n - 2] && changes[n - 2] >= changes[n - 3] &&
         changes[n - 3] >= changes[n - 4];
}

void check_driver_for_pfaff(const PfaffProblem& P) {
  if (P.g.cols() != 1) throw Error(ErrorKind::Config, "signal must be a column vector");
  if (P.F.k != P.g.rows() || P.F.cols != P.g.rows())
    throw Error(ErrorKind::Config, "driver columns and arguments must match the signal components");
  if (P.theta0.rows() != P.F.rows || P.theta0.cols() != 1 || P.F.zdim != P.F.rows)
    throw Error(ErrorKind::Config, "initial value does not match the driver");
  if (!(P.beta * (2.0 + P.gamma) > 2.0))
    throw Error(ErrorKind::Regularity, "solvability needs beta (2 + gamma) > 2",
                {{"beta", P.beta}, {"gamma", P.gamma}});
}

std::array<int, kMaxDim> snap_index(const Grid& G, const Point& p) {
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

Mat col_of(const std::vector<double>& data, std::size_t q, int n) {
  Mat m(n, 1);
  for (int i = 0; i < n; ++i) m(i, 0) = data[q * std::size_t(n) + std::size_t(i)];
  return m;
}

struct IndexBox {
  std::array<int, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
  bool contains(const std::array<int, kMaxDim>& idx, int m) const {
    for (int a = 0; a < m; ++a)
      if (idx[a] < lo[a] || idx[a] > hi[a]) return false;
    return true;
  }
  json to_json(int m) const {
    return {{"lo", std::vector<int>(lo.begin(), lo.begin() + m)},
            {"hi", std::vector<int>(hi.begin(), hi.begin() + m)}};
  }
};

/// Nodes of the box, in flat order.
std::vector<std::size_t> box_nodes(const Grid& G, const IndexBox& B) {
  std::vector<std::size_t> out;
  const int m = G.box.dim;
  std::array<int, kMaxDim> idx = B.lo;
  for (;;) {
    out.push_back(G.flat(idx));
    int a = m - 1;
    while (a >= 0) {
      if (++idx[a] <= B.hi[a]) break;
      idx[a] = B.lo[a];
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

/// Polygonal trapezoid integration of v dg inside B from base, axis order given.
void sweep_integrate(const Grid& G, const IndexBox& B, const std::array<int, kMaxDim>& base,
                     const std::vector<double>& vs, const std::vector<double>& gs, int d, int k,
                     const std::array<int, kMaxDim>& order, std::vector<double>& th) {
  const int m = G.box.dim;
  std::array<bool, kMaxDim> done{false, false, false};
  const auto nodes = box_nodes(G, B);
  for (int s = 0; s < m; ++s) {
    const int a = order[s];
    std::vector<std::size_t> bases;
    for (std::size_t q : nodes) {
      auto idx = G.unflat(q);
      bool ok = true;
      for (int b = 0; b < m; ++b)
        if (!done[b] && idx[b] != base[b]) ok = false;
      if (ok) bases.push_back(q);
    }
    const std::size_t st = G.stride(a);
    auto cell = [&](std::size_t p, std::size_t q, double* out) {
      for (int r = 0; r < d; ++r) out[r] = 0.0;
      for (int l = 0; l < k; ++l) {
        double dg = gs[q * k + l] - gs[p * k + l];
        for (int r = 0; r < d; ++r)
          out[r] += 0.5 * (vs[p * std::size_t(d * k) + std::size_t(l * d + r)] +
                           vs[q * std::size_t(d * k) + std::size_t(l * d + r)]) *
                    dg;
      }
    };
    parallel_for(bases.size(), [&](std::size_t bi) {
      const std::size_t q = bases[bi];
      double inc[4];
      for (int i = base[a]; i < B.hi[a]; ++i) {
        std::size_t cur = q + std::size_t(i - base[a]) * st;
        cell(cur, cur + st, inc);
        for (int r = 0; r < d; ++r) th[(cur + st) * d + r] = th[cur * d + r] + inc[r];
      }
      for (int i = base[a]; i > B.lo[a]; --i) {
        std::size_t cur = q - std::size_t(base[a] - i) * st;
        cell(cur - st, cur, inc);
        for (int r = 0; r < d; ++r) th[(cur - st) * d + r] = th[cur * d + r] - inc[r];
      }
    });
    done[a] = true;
  }
}

}  // namespace

SolveResult solve_yde(const Driver& F, const Field& y, const Mat& theta0, double a, double b,
                      const YdeOptions& opt) {
  if (y.dim() != 1 || y.rows() != 1) throw Error(ErrorKind::Config, "YDE driver signal must be scalar and 1D");
  if (F.k != 1 || F.cols != 1 || F.zdim != F.rows || theta0.rows() != F.rows)
    throw Error(ErrorKind::Config, "YDE driver must map (y, z) to a column of the state size");
  const double beta = y.exponent();
  if (!(beta * (1.0 + F.gamma) > 1.0))
    throw Error(ErrorKind::Regularity, "YDE needs beta (1 + gamma) > 1", {{"beta", beta}, {"gamma", F.gamma}});
  if (!(a < b)) throw Error(ErrorKind::Config, "YDE interval must satisfy a < b");
  Box box;
  box.dim = 1;
  box.lower[0] = a;
  box.upper[0] = b;
  if (!y.domain().contains(make_point({a})) || !y.domain().contains(make_point({b})))
    throw Error(ErrorKind::Domain, "YDE interval leaves the signal domain");

  auto solve_level = [&](int L, std::vector<double>& ys) {
    Grid G(box, L);
    ys.resize(G.size());
    for (std::size_t i = 0; i < G.size(); ++i) ys[i] = y(G.point(i))(0, 0);
    Coef c = [&F, &ys](std::size_t i, const Mat& z) { return F.F(scalar_mat(ys[i]), z); };
    return heun(ys, c, theta0);
  };
  std::vector<double> ys, ys_coarse;
  Line th = solve_level(opt.level, ys);
  Coef c = [&F, &ys](std::size_t i, const Mat& z) { return F.F(scalar_mat(ys[i]), z); };

  SolveResult res;
  std::vector<double> changes;
  double change = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    Line next = picard(ys, c, th);
    change = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
      change = std::max(change, sup_norm(next[i] - th[i]));
      scale = std::max(scale, sup_norm(next[i]));
    }
    th = std::move(next);
    res.iterations = it + 1;
    changes.push_back(change);
    if (change <= opt.tol * scale) break;
    if (stalled(changes) || it + 1 == opt.max_iter)
      throw Error(ErrorKind::Convergence, "Picard refinement of the YDE solution does not settle",
                  {{"changes", changes}, {"level", opt.level}});
  }
  res.residual = change;
  if (opt.level >= 2) {
    Line coarse = solve_level(opt.level - 1, ys_coarse);
    double diff = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) diff = std::max(diff, sup_norm(coarse[i] - th[2 * i]));
    res.diagnostics["richardson_diff"] = diff;
  }
  std::vector<double> data(th.size() * std::size_t(F.rows));
  for (std::size_t i = 0; i < th.size(); ++i) store(data, i, th[i]);
  res.diagnostics["picard_changes"] = changes;
  res.theta = Field::samples(Grid(box, opt.level), F.rows, 1, std::move(data), beta,
                             json{{"kind", "yde_solution"}, {"level", opt.level}});
  return res;
}

SolveResult solve_frobenius_wedge_null(const PfaffProblem& P, const PfaffOptions& opt) {
  check_driver_for_pfaff(P);
  const int k = P.g.rows(), d = P.F.rows, m = P.g.dim();
  // Pairwise wedge-null precheck.
  json wedge = json::array();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      if (m < 2) break;
      auto comp = [&](int c) {
        const Field g = P.g;
        return Field::closed_form(g.domain(), 1, 1, [g, c](const Point& p) { return scalar_mat(g.eval(p)(c, 0)); },
                                  g.exponent());
      };
      AdditivityReport w = wedge_null_check(comp(i), comp(j), opt.wedge_depth);
      wedge.push_back({{"i", i}, {"j", j}, {"report", w.to_json()}});
      if (!w.vanishes)
        throw Error(ErrorKind::Involutivity, "wedge-null precheck fails for a component pair",
                    {{"i", i}, {"j", j}, {"report", w.to_json()}});
    }

  Grid G(P.g.domain(), opt.level);
  const std::size_t N = G.size();
  const auto gs = sample(P.g, G).data();
  const auto base0 = snap_index(G, P.p0);
  std::vector<double> th(N * std::size_t(d), 0.0), vs(N * std::size_t(d * k), 0.0);
  const std::array<int, kMaxDim> order{0, 1, 2};
  Mat empty;

  SolveResult res;
  int total_iters = 0;
  double last_change = 0.0;

  // Picard iteration on one box; returns false when it stalls.
  auto iterate_box = [&](const IndexBox& B, const std::array<int, kMaxDim>& base, const Mat& theta_b,
                         json& log) {
    const auto nodes = box_nodes(G, B);
    const std::size_t qb = G.flat(base);
    Mat v0 = opt.zero_start ? Mat(Mat::Zero(d, k)) : P.F.F(col_of(gs, qb, k), theta_b);
    for (std::size_t q : nodes) store(vs, q, v0);
    std::vector<double> changes;
    for (int it = 1; it <= opt.max_iter; ++it) {
      store(th, qb, theta_b);
      sweep_integrate(G, B, base, vs, gs, d, k, order, th);
      std::vector<double> ch(nodes.size(), 0.0);
      std::vector<double> sc(nodes.size(), 0.0);
      parallel_for(nodes.size(), [&](std::size_t i) {
        const std::size_t q = nodes[i];
        Mat vn = P.F.F(col_of(gs, q, k), col_of(th, q, d));
        Mat vo = load(vs, q, d, k);
        ch[i] = sup_norm(vn - vo);
        sc[i] = sup_norm(vn);
        store(vs, q, vn);
      });
      double change = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        change = std::max(change, ch[i]);
        scale = std::max(scale, sc[i]);
      }
      changes.push_back(change);
      total_iters++;
      last_change = change;
      if (change <= opt.tol * scale) {
        store(th, qb, theta_b);
        sweep_integrate(G, B, base, vs, gs, d, k, order, th);
        log["iterations"] = it;
        log["status"] = "converged";
        return true;
      }
      if (stalled(changes)) break;
    }
    log["iterations"] = int(changes.size());
    log["status"] = "stalled";
    log["changes"] = changes;
    return false;
  };

  std::function<void(const IndexBox&, const std::array<int, kMaxDim>&, const Mat&, int)> solve_box =
      [&](const IndexBox& B, const std::array<int, kMaxDim>& base, const Mat& theta_b, int depth) {
        json log = {{"depth", depth}, {"box", B.to_json(m)},
                    {"base", std::vector<int>(base.begin(), base.begin() + m)}};
        bool ok = iterate_box(B, base, theta_b, log);
        res.patching.push_back(log);
        if (ok) return;
        if (depth >= opt.max_split_depth)
          throw Error(ErrorKind::Convergence, "domain bisection exceeded its depth budget",
                      {{"patching", res.patching}});
        int ax = 0;
        for (int a = 1; a < m; ++a)
          if (B.hi[a] - B.lo[a] > B.hi[ax] - B.lo[ax]) ax = a;
        if (B.hi[ax] - B.lo[ax] < 2)
          throw Error(ErrorKind::Convergence, "domain bisection reached a single cell", {{"patching", res.patching}});
        const int mid = (B.lo[ax] + B.hi[ax]) / 2;
        IndexBox A = B, C = B;
        A.hi[ax] = mid;
        C.lo[ax] = mid;
        if (base[ax] > mid) std::swap(A, C);
        solve_box(A, base, theta_b, depth + 1);
        // Re-base the other half on the shared face.
        std::array<int, kMaxDim> nb = base;
        nb[ax] = mid;
        Mat tb = col_of(th, G.flat(nb), d);
        std::vector<double> keep;
        const auto face = box_nodes(G, [&] {
          IndexBox F = B;
          F.lo[ax] = F.hi[ax] = mid;
          return F;
        }());
        for (std::size_t q : face)
          for (int r = 0; r < d; ++r) keep.push_back(th[q * d + r]);
        solve_box(C, nb, tb, depth + 1);
        // The face keeps the values of the half that contains the base.
        std::size_t t = 0;
        for (std::size_t q : face)
          for (int r = 0; r < d; ++r) th[q * d + r] = keep[t++];
      };

  IndexBox full;
  for (int a = 0; a < m; ++a) full.hi[a] = G.count(a) - 1;
  solve_box(full, base0, P.theta0, 0);
  res.iterations = total_iters;
  res.residual = last_change;

  const Field theta = Field::samples(G, d, 1, th, P.g.exponent(), json{{"kind", "frob1_solution"}, {"level", opt.level}});
  const Field vgrid = Field::samples(G, d, k, vs, P.g.exponent());
  const Field ggrid = sample(P.g, G);
  // Remainder of the Pfaff germ.
  GDiffReport germ = g_derivative_check(theta, vgrid, ggrid, 1.1);
  res.diagnostics["germ"] = germ.to_json();
  res.diagnostics["germ_rate_ok"] = germ.exact_zero || germ.fitted_exponent > 1.0;
  // Path independence: reverse axis order over the whole grid.
  std::vector<double> th_rev(th.size(), 0.0);
  store(th_rev, G.flat(base0), P.theta0);
  std::array<int, kMaxDim> rev{0, 1, 2};
  std::reverse(rev.begin(), rev.begin() + m);
  sweep_integrate(G, full, base0, vs, gs, d, k, rev, th_rev);
  double pdiff = 0.0;
  for (std::size_t i = 0; i < th.size(); ++i) pdiff = std::max(pdiff, std::abs(th[i] - th_rev[i]));
  res.diagnostics["path_independence"] = pdiff;
  // Straight-segment identity on seeded random pairs.
  double seg = 0.0;
  for (int t = 0; t < opt.diagnostic_pairs; ++t) {
    Segment s;
    for (int a = 0; a < m; ++a) {
      const Box& b = G.box;
      s.p[a] = b.lower[a] + b.width(a) * counter_uniform(opt.seed, 40, std::uint64_t(2 * t * kMaxDim + a));
      s.q[a] = b.lower[a] + b.width(a) * counter_uniform(opt.seed, 41, std::uint64_t(2 * t * kMaxDim + a));
    }
    Mat lhs = theta.eval(s.q) - theta.eval(s.p);
    Mat rhs = segment_sum(vgrid, ggrid, s, opt.level + 2);
    seg = std::max(seg, sup_norm(lhs - rhs));
  }
  res.diagnostics["segment_identity"] = seg;
  res.diagnostics["wedge_null"] = wedge;
  res.theta = theta;
  return res;
}

json InvolutivityReport::to_json() const {
  return {{"max_residual", max_residual}, {"tolerance", tolerance}, {"holds", holds}, {"worst", worst}};
}

InvolutivityReport check_involutivity(const PfaffProblem& P, int lattice) {
  const int m = P.g.dim(), d = P.F.rows;
  InvolutivityReport rep;
  std::vector<std::pair<double, double>> zr = P.z_range;
  if (zr.empty())
    for (int l = 0; l < d; ++l) {
      double c = P.theta0(l, 0), r = 2.0 * (1.0 + std::abs(c));
      zr.push_back({c - r, c + r});
    }
  if (int(zr.size()) != d) throw Error(ErrorKind::Config, "z-range must have one interval per unknown");
  const Box& box = P.g.domain();
  std::size_t total = 1;
  for (int i = 0; i < m + d; ++i) total *= std::size_t(lattice);
  double fmax = 0.0;
  struct Sample {
    double r1, r2;
  };
  std::vector<Sample> worst(total);
  std::vector<double> res(total, 0.0);
  std::vector<double> fm(total, 0.0);
  parallel_for(total, [&](std::size_t n) {
    std::size_t t = n;
    Point s{0, 0, 0};
    Mat z(d, 1);
    for (int i = 0; i < m; ++i) {
      s[i] = box.lower[i] + box.width(i) * double(t % lattice) / (lattice - 1);
      t /= std::size_t(lattice);
    }
    for (int l = 0; l < d; ++l) {
      z(l, 0) = zr[l].first + (zr[l].second - zr[l].first) * double(t % lattice) / (lattice - 1);
      t /= std::size_t(lattice);
    }
    Mat u = P.g.eval(s);
    Mat f = P.F.F(u, z);
    auto du = P.F.dF_du(u, z);
    auto dz = P.F.dF_dz(u, z);
    double r = 0.0;
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          for (int lp = 0; lp < d; ++lp)
            r = std::max(r, std::abs(f(l, i) * dz[std::size_t(lp)](l, j) - f(l, j) * dz[std::size_t(lp)](l, i)));
          r = std::max(r, std::abs(du[std::size_t(i)](l, j) - du[std::size_t(j)](l, i)));
        }
    res[n] = r;
    fm[n] = sup_norm(f);
  });
  std::size_t arg = 0;
  for (std::size_t n = 0; n < total; ++n) {
    fmax = std::max(fmax, fm[n]);
    if (res[n] > res[arg]) arg = n;
  }
  rep.max_residual = res[arg];
  rep.tolerance = 1e-8 * (1.0 + fmax);
  rep.holds = rep.max_residual <= rep.tolerance;
  {
    std::size_t t = arg;
    json s = json::array(), z = json::array();
    for (int i = 0; i < m; ++i) {
      s.push_back(box.lower[i] + box.width(i) * double(t % lattice) / (lattice - 1));
      t /= std::size_t(lattice);
    }
    for (int l = 0; l < d; ++l) {
      z.push_back(zr[l].first + (zr[l].second - zr[l].first) * double(t % lattice) / (lattice - 1));
      t /= std::size_t(lattice);
    }
    rep.worst = {{"s", s}, {"z", z}, {"residual", res[arg]}};
  }
  return rep;
}

namespace {

/// Samples of component a of a diagonal signal along axis a.
std::vector<std::vector<double>> diagonal_samples(const Field& g, const Grid& G) {
  const int m = G.box.dim;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    out[a].resize(std::size_t(G.count(a)));
    for (int i = 0; i < G.count(a); ++i) {
      std::array<int, kMaxDim> idx{0, 0, 0};
      idx[a] = i;
      out[a][std::size_t(i)] = g(G.point(idx))(a, 0);
    }
  }
  return out;
}

void check_diagonal(const Field& g) {
  const int m = g.dim();
  if (g.rows() != m) throw Error(ErrorKind::Config, "diagonal signal needs one component per axis");
  Grid G(g.domain(), 3);
  for (std::size_t q = 0; q < G.size(); ++q) {
    auto idx = G.unflat(q);
    Mat v = g(G.point(idx));
    for (int a = 0; a < m; ++a) {
      auto ref = idx;
      for (int b = 0; b < m; ++b)
        if (b != a) ref[b] = 0;
      double r = g(G.point(ref))(a, 0);
      if (std::abs(v(a, 0) - r) > 1e-12 * (1.0 + std::abs(r)))
        throw Error(ErrorKind::Config, "signal is not diagonal: component " + std::to_string(a) +
                                           " depends on another coordinate");
    }
  }
}

/// Sweep of the diagonal system in the given axis order; th holds d values per node.
void diagonal_sweep(const PfaffProblem& P, const Grid& G, const std::vector<std::vector<double>>& gd,
                    const std::array<int, kMaxDim>& base, const std::array<int, kMaxDim>& order,
                    std::vector<double>& th) {
  const int m = G.box.dim, d = P.F.rows;
  store(th, G.flat(base), P.theta0);
  std::array<bool, kMaxDim> done{false, false, false};
  IndexBox full;
  for (int a = 0; a < m; ++a) full.hi[a] = G.count(a) - 1;
  for (int s = 0; s < m; ++s) {
    const int a = order[s];
    // Bases: all nodes that agree with base on the axes not yet swept (including a).
    IndexBox B = full;
    for (int b = 0; b < m; ++b)
      if (!done[b]) B.lo[b] = B.hi[b] = base[b];
    const auto bases = box_nodes(G, B);
    const std::size_t st = G.stride(a);
    const int n = G.count(a);
    parallel_for(bases.size(), [&](std::size_t bi) {
      const std::size_t q = bases[bi];
      auto idx = G.unflat(q);
      Mat u(m, 1);
      for (int b = 0; b < m; ++b) u(b, 0) = gd[b][std::size_t(idx[b])];
      Mat z = col_of(th, q, d);
      auto coef = [&](int i, const Mat& zz) {
        u(a, 0) = gd[a][std::size_t(i)];
        return Mat(P.F.F(u, zz).col(a));
      };
      for (int dir : {+1, -1}) {
        Mat cur = z;
        for (int i = base[a]; dir > 0 ? i + 1 < n : i > 0; i += dir) {
          const int j = i + dir;
          const double dy = gd[a][std::size_t(j)] - gd[a][std::size_t(i)];
          Mat k1 = coef(i, cur);
          Mat pred = cur + k1 * dy;
          Mat k2 = coef(j, pred);
          cur = cur + 0.5 * (k1 + k2) * dy;
          const std::size_t tgt = dir > 0 ? q + std::size_t(j - base[a]) * st : q - std::size_t(base[a] - j) * st;
          for (int r = 0; r < d; ++r) th[tgt * d + r] = cur(r, 0);
        }
      }
    });
    done[a] = true;
  }
}

}  // namespace

SolveResult solve_frobenius_diagonal(const PfaffProblem& P, const DiagonalOptions& opt) {
  check_driver_for_pfaff(P);
  check_diagonal(P.g);
  InvolutivityReport inv = check_involutivity(P);
  if (!inv.holds) throw Error(ErrorKind::Involutivity, "involutivity precheck fails", inv.to_json());
  const int m = P.g.dim(), d = P.F.rows;
  Grid G(P.g.domain(), opt.level);
  const auto gd = diagonal_samples(P.g, G);
  const auto base = snap_index(G, P.p0);
  std::vector<double> th(G.size() * std::size_t(d), 0.0);
  diagonal_sweep(P, G, gd, base, opt.order, th);

  SolveResult res;
  res.iterations = 1;
  res.diagnostics["involutivity"] = inv.to_json();
  if (opt.diagnostics && m >= 2) {
    std::array<int, kMaxDim> rev = opt.order;
    std::reverse(rev.begin(), rev.begin() + m);
    std::vector<double> th2(th.size(), 0.0);
    diagonal_sweep(P, G, gd, base, rev, th2);
    double diff = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) diff = std::max(diff, std::abs(th[i] - th2[i]));
    res.diagnostics["sweep_order_diff"] = diff;
  }
  if (opt.diagnostics) {
    // Finite-difference residual |d theta / d g^i - f^i| where the increment of g^i is not tiny.
    double worst = 0.0;
    for (int a = 0; a < m; ++a) {
      double gmax = 0.0;
      for (std::size_t i = 0; i + 1 < gd[a].size(); ++i) gmax = std::max(gmax, std::abs(gd[a][i + 1] - gd[a][i]));
      const std::size_t st = G.stride(a);
      std::vector<double> w(G.size(), 0.0);
      parallel_for(G.size(), [&](std::size_t q) {
        auto idx = G.unflat(q);
        if (idx[a] + 1 >= G.count(a)) return;
        double dg = gd[a][std::size_t(idx[a] + 1)] - gd[a][std::size_t(idx[a])];
        if (std::abs(dg) < 1e-3 * gmax || dg == 0.0) return;
        Mat u(m, 1);
        for (int b = 0; b < m; ++b) u(b, 0) = gd[b][std::size_t(idx[b])];
        Mat f = P.F.F(u, col_of(th, q, d));
        double r = 0.0;
        for (int l = 0; l < d; ++l) r = std::max(r, std::abs((th[(q + st) * d + l] - th[q * d + l]) / dg - f(l, a)));
        w[q] = r;
      });
      for (double x : w) worst = std::max(worst, x);
    }
    res.diagnostics["gronwall_residual"] = worst;
  }
  res.theta = Field::samples(G, d, 1, std::move(th), P.g.exponent(),
                             json{{"kind", "frob2_solution"}, {"level", opt.level}});
  return res;
}

namespace {

struct Linearization {
  Mat A, B;  // n x n, n x k
};

Linearization linearize(const Driver& F, const Mat& u, const Mat& z) {
  const int n = F.rows, k = F.k;
  auto du = F.dF_du(u, z);
  auto dz = F.dF_dz(u, z);
  Linearization L{Mat(n, n), Mat(n, k)};
  for (int j = 0; j < n; ++j) L.A.col(j) = dz[std::size_t(j)].col(0);
  for (int i = 0; i < k; ++i) L.B.col(i) = du[std::size_t(i)].col(0);
  return L;
}

void check_implicit(const ImplicitProblem& P) {
  if (P.F.cols != 1 || P.F.zdim != P.F.rows || P.x0n.rows() != P.F.rows || P.x0n.cols() != 1)
    throw Error(ErrorKind::Config, "implicit driver must map (u, z) to a column of the unknown size");
  if (P.F.k != P.g.rows() || P.g.cols() != 1) throw Error(ErrorKind::Config, "driver arguments must match the signal");
  if (!(P.beta * (1.0 + P.gamma) > 1.0))
    throw Error(ErrorKind::Regularity, "implicit function theorem needs beta (1 + gamma) > 1",
                {{"beta", P.beta}, {"gamma", P.gamma}});
}

}  // namespace

SolveResult solve_implicit(const ImplicitProblem& P, const ImplicitOptions& opt) {
  check_implicit(P);
  const int n = P.F.rows, m = P.g.dim();
  Grid G(P.g.domain(), opt.level);
  const auto gs = sample(P.g, G).data();
  const int k = P.g.rows();
  const Mat g0 = P.g(P.x0m);
  const Mat f0 = P.F.F(g0, P.x0n);
  {
    Linearization L = linearize(P.F, g0, P.x0n);
    if (std::abs(L.A.determinant()) <= 1e-12)
      throw Error(ErrorKind::Degeneracy, "derivative in the unknown is singular at the base point",
                  {{"det", L.A.determinant()}});
  }
  const auto base0 = snap_index(G, P.x0m);
  std::vector<double> th(G.size() * std::size_t(n), 0.0);
  std::vector<char> solved(G.size(), 0);
  SolveResult res;
  int halvings = 0;
  int iterations = 0;
  double last = 0.0;

  // Per-point fixed point theta <- x0n - A^{-1} (B dg + rho(theta)) with A, B at the base.
  auto solve_point = [&](std::size_t q, const Mat& gb, const Mat& zb, const Linearization& L,
                         const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, Mat& out, int& iters, double& change) {
    Mat u = col_of(gs, q, k);
    Mat dg = u - gb;
    Mat th_q = zb;
    std::vector<double> changes;
    for (int it = 1; it <= opt.max_iter; ++it) {
      Mat rho = P.F.F(u, th_q) - f0 - L.B * dg - L.A * (th_q - zb);
      Eigen::VectorXd rhs = -(L.B * dg + rho).col(0);
      Mat next = zb + Mat(lu.solve(rhs));
      change = sup_norm(next - th_q);
      th_q = next;
      iters = it;
      changes.push_back(change);
      if (change <= opt.tol * std::max(1.0, sup_norm(th_q))) {
        out = th_q;
        return true;
      }
      if (stalled(changes)) return false;
    }
    return false;
  };

  std::function<void(const IndexBox&, const std::array<int, kMaxDim>&, const Mat&)> solve_box =
      [&](const IndexBox& B, const std::array<int, kMaxDim>& base, const Mat& zb) {
        const std::size_t qb = G.flat(base);
        const Mat gb = col_of(gs, qb, k);
        Linearization L = linearize(P.F, gb, zb);
        if (std::abs(L.A.determinant()) <= 1e-12)
          throw Error(ErrorKind::Degeneracy, "derivative in the unknown is singular at a patch base",
                      {{"base", std::vector<int>(base.begin(), base.begin() + m)}});
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(L.A));
        const auto nodes = box_nodes(G, B);
        std::vector<char> ok(nodes.size(), 0);
        std::vector<int> its(nodes.size(), 0);
        std::vector<double> ch(nodes.size(), 0.0);
        std::vector<double> vals(nodes.size() * std::size_t(n), 0.0);
        parallel_for(nodes.size(), [&](std::size_t i) {
          Mat out;
          ok[i] = solve_point(nodes[i], gb, zb, L, lu, out, its[i], ch[i]);
          if (ok[i]) store(vals, i, out);
        });
        bool all = true;
        int maxit = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          all = all && ok[i];
          maxit = std::max(maxit, its[i]);
          last = std::max(last, ch[i]);
        }
        iterations = std::max(iterations, maxit);
        res.patching.push_back({{"box", B.to_json(m)},
                                {"base", std::vector<int>(base.begin(), base.begin() + m)},
                                {"status", all ? "converged" : "non-contractive"},
                                {"iterations", maxit}});
        if (all) {
          for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (solved[nodes[i]]) continue;
            for (int r = 0; r < n; ++r) th[nodes[i] * n + r] = vals[i * n + r];
            solved[nodes[i]] = 1;
          }
          return;
        }
        if (++halvings > opt.max_halvings)
          throw Error(ErrorKind::Convergence, "box halving budget exhausted", {{"patching", res.patching}});
        int ax = 0;
        for (int a = 1; a < m; ++a)
          if (B.hi[a] - B.lo[a] > B.hi[ax] - B.lo[ax]) ax = a;
        if (B.hi[ax] - B.lo[ax] < 1)
          throw Error(ErrorKind::Convergence, "box halving reached a single node", {{"patching", res.patching}});
        // Halve around the base; the far half is re-based on the shared face.
        const int mid = (B.lo[ax] + B.hi[ax] + (base[ax] > (B.lo[ax] + B.hi[ax]) / 2 ? 1 : 0)) / 2;
        IndexBox near = B, far = B;
        if (base[ax] <= mid) {
          near.hi[ax] = mid;
          far.lo[ax] = mid;
        } else {
          near.lo[ax] = mid;
          far.hi[ax] = mid;
        }
        solve_box(near, base, zb);
        std::array<int, kMaxDim> nb = base;
        nb[ax] = mid;
        if (near.lo[ax] == near.hi[ax] && far.lo[ax] == far.hi[ax]) return;
        solve_box(far, nb, col_of(th, G.flat(nb), n));
      };

  IndexBox full;
  for (int a = 0; a < m; ++a) full.hi[a] = G.count(a) - 1;
  solve_box(full, base0, P.x0n);
  res.iterations = iterations;
  res.residual = last;
  res.diagnostics["halvings"] = halvings;
  double lev = 0.0;
  for (std::size_t q = 0; q < G.size(); ++q)
    lev = std::max(lev, sup_norm(P.F.F(col_of(gs, q, k), col_of(th, q, n)) - f0));
  res.diagnostics["level_set_residual"] = lev;
  res.theta = Field::samples(G, n, 1, std::move(th), P.g.exponent(), json{{"kind", "implicit_solution"}, {"level", opt.level}});
  return res;
}

Field implicit_g_derivative(const ImplicitProblem& P, const Field& theta) {
  const Grid& G = theta.grid();
  const int n = P.F.rows, k = P.F.k;
  const auto gs = sample(P.g, G).data();
  std::vector<double> data(G.size() * std::size_t(n * k));
  parallel_for(G.size(), [&](std::size_t q) {
    Mat u = col_of(gs, q, k);
    Mat z = col_of(theta.data(), q, n);
    Linearization L = linearize(P.F, u, z);
    Eigen::MatrixXd D = -Eigen::MatrixXd(L.A).partialPivLu().solve(Eigen::MatrixXd(L.B));
    store(data, q, Mat(D));
  });
  return Field::samples(G, n, k, std::move(data), P.g.exponent(), json{{"kind", "implicit_g_derivative"}});
}

json LevelSetReport::to_json() const {
  json v = json::array();
  for (const auto& [l, x] : variation) v.push_back({{"level", l}, {"variation", x}});
  return {{"variation", v}, {"bound", bound}, {"pass", pass}};
}

LevelSetReport level_set_composition_check(const std::function<double(const Point&, const Mat&)>& phi,
                                           const ImplicitProblem& P, double tol,
                                           const std::vector<int>& levels) {
  LevelSetReport rep;
  const double diam = P.g.domain().diam();
  rep.bound = tol * std::pow(diam, std::min(1.0, (P.gamma + P.beta) * P.beta));
  const double ref = phi(P.x0m, P.x0n);
  rep.pass = true;
  for (int L : levels) {
    ImplicitOptions o;
    o.level = L;
    SolveResult s = solve_implicit(P, o);
    const Grid& G = s.theta.grid();
    double var = 0.0;
    for (std::size_t q = 0; q < G.size(); ++q)
      var = std::max(var, std::abs(phi(G.point(q), col_of(s.theta.data(), q, P.F.rows)) - ref));
    rep.variation.push_back({L, var});
    rep.pass = rep.pass && var <= rep.bound;
  }
  return rep;
}

json GronwallReport::to_json() const {
  json r = json::array();
  for (const auto& x : rows)
    r.push_back({{"level", x.level}, {"residual", x.residual}, {"norm_a", x.norm_a}, {"norm_b", x.norm_b},
                 {"a0", x.a0}, {"ratio", exact_zero ? json(nullptr) : json(x.ratio)}});
  return {{"rows", r}, {"exact_zero", exact_zero}, {"variation", variation}, {"finite", finite}};
}

GronwallReport verify_gronwall(const Field& a, const Field& b, const Field& u, const Field& y, double alpha,
                               double beta, const std::vector<int>& levels, double residual_tol) {
  for (const Field* f : {&a, &b, &u, &y})
    if (f->dim() != 1 || f->rows() != 1 || f->cols() != 1)
      throw Error(ErrorKind::Config, "Gronwall check takes scalar one-dimensional fields");
  if (levels.empty()) throw Error(ErrorKind::Config, "need at least one level");
  GronwallReport rep;
  const Box box = y.domain();
  for (int L : levels) {
    Grid G(box, L);
    const std::size_t n = G.size();
    std::vector<double> as(n), bs(n), us(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      Point p = G.point(i);
      as[i] = a(p)(0, 0);
      bs[i] = b(p)(0, 0);
      us[i] = u(p)(0, 0);
      ys[i] = y(p)(0, 0);
    }
    double acc = 0.0, resid = 0.0, amax = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      acc += 0.5 * ((bs[i] + us[i] * as[i]) + (bs[i + 1] + us[i + 1] * as[i + 1])) * (ys[i + 1] - ys[i]);
      resid = std::max(resid, std::abs(as[i + 1] - as[0] - acc));
      amax = std::max(amax, std::abs(as[i + 1]));
    }
    if (resid > residual_tol * (1.0 + amax))
      throw Error(ErrorKind::Precondition, "a does not solve the linear Young equation",
                  {{"level", L}, {"residual", resid}});
    auto norm_of = [&](const std::vector<double>& s, double ex) {
      Field f = Field::samples(G, 1, 1, s, ex);
      HolderOptions o;
      double sup = 0.0;
      for (double x : s) sup = std::max(sup, std::abs(x));
      return sup + holder_seminorm(f, std::min(1.0, ex), o).seminorm;
    };
    GronwallReport::Row row;
    row.level = L;
    row.residual = resid;
    row.norm_a = norm_of(as, beta);
    row.norm_b = norm_of(bs, alpha);
    row.a0 = std::abs(as[0]);
    const double den = row.a0 + row.norm_b;
    if (den == 0.0 && row.norm_a == 0.0) {
      rep.exact_zero = true;
      row.ratio = 0.0;
    } else {
      row.ratio = row.norm_a / den;
    }
    rep.finite = rep.finite && std::isfinite(row.ratio);
    rep.rows.push_back(row);
  }
  if (!rep.exact_zero) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : rep.rows) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
    rep.variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
  }
  return rep;
}

bool yde_exponent_condition(double alpha, double beta, double gamma) {
  if (alpha + beta * (1.0 + gamma) > 2.0) return true;
  for (int i = 0; i <= 100; ++i) {
    double x = i / 100.0;
    if (alpha * (x * gamma + 1.0) > 1.0 && beta * ((1.0 - x) * gamma + 1.0) > 1.0) return true;
  }
  return false;
}

json YdeGDerivResult::to_json() const { return {{"check", check.to_json()}}; }

YdeGDerivResult yde_g_derivative(const Driver& F, const Field& y, const Field& g, const Field& vartheta,
                                 const Field& d_vartheta, const YdeGDerivOptions& opt) {
  if (y.dim() != 1 || g.dim() != 1 || y.rows() != 1 || g.rows() != 1)
    throw Error(ErrorKind::Config, "YDE g-derivative takes scalar 1D y and g");
  const int d = F.rows;
  if (F.k != 2 || F.cols != 1 || F.zdim != d || vartheta.rows() != d || d_vartheta.rows() != d ||
      d_vartheta.cols() != 1)
    throw Error(ErrorKind::Config, "driver must take u = (y, g) and return a column of the state size");
  const double alpha = g.exponent(), beta = y.exponent();
  if (!yde_exponent_condition(alpha, beta, F.gamma))
    throw Error(ErrorKind::Regularity, "exponent condition for g-differentiability of the YDE fails",
                {{"alpha", alpha}, {"beta", beta}, {"gamma", F.gamma}});
  Box box;
  box.dim = 2;
  box.lower[0] = y.domain().lower[0];
  box.upper[0] = y.domain().upper[0];
  box.lower[1] = g.domain().lower[0];
  box.upper[1] = g.domain().upper[0];
  Grid G(box, std::array<int, kMaxDim>{opt.level_t, opt.level_p, 0});
  const int nt = G.count(0), np = G.count(1);
  std::vector<double> ys(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i) ys[std::size_t(i)] = y(make_point({G.point({i, 0, 0})[0]}))(0, 0);
  std::vector<double> th(G.size() * std::size_t(d)), dth(G.size() * std::size_t(d));
  parallel_for(std::size_t(np), [&](std::size_t j) {
    const Point pp = make_point({G.point({0, int(j), 0})[1]});
    const double gp = g(pp)(0, 0);
    Mat u(2, 1);
    u(1, 0) = gp;
    Coef c = [&](std::size_t i, const Mat& z) {
      u(0, 0) = ys[i];
      return F.F(u, z);
    };
    Line theta = heun(ys, c, vartheta(pp));
    // Linear equation for D = d theta / d g along t.
    auto lin = [&](std::size_t i, const Mat& D) {
      Mat uu(2, 1);
      uu(0, 0) = ys[i];
      uu(1, 0) = gp;
      auto du = F.dF_du(uu, theta[i]);
      auto dz = F.dF_dz(uu, theta[i]);
      Mat out = du[1];
      for (int l = 0; l < d; ++l) out += dz[std::size_t(l)] * D(l, 0);
      return out;
    };
    Line D = heun(ys, lin, d_vartheta(pp));
    for (int i = 0; i < nt; ++i) {
      std::size_t q = G.flat({i, int(j), 0});
      store(th, q, theta[std::size_t(i)]);
      store(dth, q, D[std::size_t(i)]);
    }
  });
  YdeGDerivResult res;
  res.theta = Field::samples(G, d, 1, th, std::min(alpha, beta), json{{"kind", "yde_family"}});
  res.dtheta = Field::samples(G, d, 1, dth, std::min(alpha, beta), json{{"kind", "yde_g_derivative"}});
  // Cross-check at the final time.
  Grid Gp(g.domain(), opt.level_p);
  std::vector<double> tl(Gp.size() * std::size_t(d)), dl(Gp.size() * std::size_t(d));
  for (int j = 0; j < np; ++j)
    for (int r = 0; r < d; ++r) {
      tl[std::size_t(j) * d + r] = th[G.flat({nt - 1, j, 0}) * d + r];
      dl[std::size_t(j) * d + r] = dth[G.flat({nt - 1, j, 0}) * d + r];
    }
  res.check = g_derivative_check(Field::samples(Gp, d, 1, tl, alpha), Field::samples(Gp, d, 1, dl, alpha),
                                 sample(g, Gp), beta * (1.0 + F.gamma));
  return res;
}

}  // namespace roughfrob
