// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/signals.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <roughfrob/expr.hpp>

namespace roughfrob {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t z = mix64(seed + 0x9E3779B97F4A7C15ULL);
  z = mix64(z ^ (stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
  return mix64(z ^ (counter * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return double(counter_hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  double u1 = counter_uniform(seed, stream, 2 * counter);
  double u2 = counter_uniform(seed, stream, 2 * counter + 1);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Field gen_weierstrass_1d(const WeierstrassParams& wp, const Box& box) {
  if (!(wp.beta > 0.0 && wp.beta <= 1.0)) throw Error(ErrorKind::Config, "beta must lie in (0,1]");
  if (wp.n_max < wp.n_min) throw Error(ErrorKind::Config, "empty Weierstrass term range");
  if (wp.n_max > 30 || wp.n_min < -40) throw Error(ErrorKind::Config, "Weierstrass term range too wide");
  const double phi = kTwoPi * counter_uniform(wp.seed, 0, 0);
  struct Term {
    double amp, freq;
  };
  std::vector<Term> terms;
  for (int n = wp.n_min; n <= wp.n_max; ++n)
    terms.push_back({wp.amplitude * std::exp2(-n * wp.beta), kTwoPi * std::exp2(n)});
  const double c0 = std::cos(phi);
  json spec = {{"kind", "weierstrass_1d"}, {"beta", wp.beta}, {"n_min", wp.n_min},
               {"N", wp.n_max}, {"seed", wp.seed}, {"amplitude", wp.amplitude}};
  return Field::closed_form(
      box, 1, 1,
      [terms, phi, c0](const Point& p) {
        double s = 0.0;
        for (const auto& t : terms) s += t.amp * (std::cos(t.freq * p[0] + phi) - c0);
        Mat m(1, 1);
        m(0, 0) = s;
        return m;
      },
      wp.beta, spec);
}

std::vector<LacunaryMode> lacunary_modes(double beta, int N, std::uint64_t seed, int m) {
  if (N < 1 || N > 24) throw Error(ErrorKind::Config, "lacunary term count must be 1..24");
  if (m < 1 || m > kMaxDim) throw Error(ErrorKind::Config, "lacunary dimension must be 1..3");
  std::vector<LacunaryMode> modes;
  for (int n = 1; n <= N; ++n) {
    const double lo = std::exp2(n), hi = std::exp2(n + 1);
    const int K = 1 << (n + 1);
    LacunaryMode mode;
    // Rejection sampling inside the bounding cube of the annulus.
    for (std::uint64_t c = 0;; ++c) {
      double r2 = 0.0;
      for (int i = 0; i < m; ++i) {
        std::uint64_t draw = counter_hash(seed, std::uint64_t(n), c * kMaxDim + std::uint64_t(i));
        mode.k[i] = int(draw % std::uint64_t(2 * K + 1)) - K;
        r2 += double(mode.k[i]) * mode.k[i];
      }
      if (r2 > lo * lo && r2 <= hi * hi) break;
    }
    mode.amplitude = std::exp2(-n * beta);
    mode.phase = kTwoPi * counter_uniform(seed, 1000 + std::uint64_t(n), 0);
    modes.push_back(mode);
  }
  return modes;
}

Field lacunary_from_modes(std::vector<LacunaryMode> modes, int m, double beta, json spec) {
  return Field::closed_form(
      Box::unit(m), 1, 1,
      [modes, m](const Point& p) {
        double s = 0.0;
        for (const auto& md : modes) {
          double arg = md.phase;
          for (int i = 0; i < m; ++i) arg += kTwoPi * md.k[i] * p[i];
          s += md.amplitude * std::cos(arg);
        }
        Mat r(1, 1);
        r(0, 0) = s;
        return r;
      },
      beta, std::move(spec));
}

Field gen_lacunary(double beta, int N, std::uint64_t seed, int m, double amplitude) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorKind::Config, "beta must lie in (0,1]");
  auto modes = lacunary_modes(beta, N, seed, m);
  for (auto& md : modes) md.amplitude *= amplitude;
  json spec = {{"kind", "lacunary_md"}, {"beta", beta}, {"N", N}, {"seed", seed}, {"m", m},
               {"amplitude", amplitude}};
  return lacunary_from_modes(std::move(modes), m, beta, spec);
}

OuterMap outer_map(const std::string& name) {
  if (name == "id") return {name, [](double u) { return u; }, [](double) { return 1.0; }};
  if (name == "square") return {name, [](double u) { return u * u; }, [](double u) { return 2 * u; }};
  if (name == "cube")
    return {name, [](double u) { return u * u * u; }, [](double u) { return 3 * u * u; }};
  if (name == "sin") return {name, [](double u) { return std::sin(u); }, [](double u) { return std::cos(u); }};
  if (name == "cos")
    return {name, [](double u) { return std::cos(u); }, [](double u) { return -std::sin(u); }};
  if (name == "exp") return {name, [](double u) { return std::exp(u); }, [](double u) { return std::exp(u); }};
  throw Error(ErrorKind::Config, "unknown outer map '" + name + "'");
}

Field gen_composed(const Field& w, const std::vector<std::string>& outer) {
  if (w.rows() != 1 || w.cols() != 1) throw Error(ErrorKind::Config, "composed core must be scalar");
  if (outer.empty() || outer.size() > 4) throw Error(ErrorKind::Config, "composed needs 1..4 outer maps");
  std::vector<OuterMap> maps;
  for (const auto& n : outer) maps.push_back(outer_map(n));
  json spec = {{"kind", "composed"}, {"core", w.spec()}, {"outer", outer}, {"wedge_null", true}};
  const int k = int(maps.size());
  return Field::closed_form(
      w.domain(), k, 1,
      [w, maps, k](const Point& p) {
        double u = w.eval(p)(0, 0);
        Mat r(k, 1);
        for (int i = 0; i < k; ++i) r(i, 0) = maps[i].f(u);
        return r;
      },
      w.exponent(), spec);
}

namespace {

Box product_box(const std::vector<Field>& axes) {
  if (axes.empty() || axes.size() > std::size_t(kMaxDim))
    throw Error(ErrorKind::Config, "need 1..3 axis fields");
  Box b;
  b.dim = int(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].dim() != 1 || axes[i].rows() != 1 || axes[i].cols() != 1)
      throw Error(ErrorKind::Config, "axis fields must be scalar and one-dimensional");
    b.lower[i] = axes[i].domain().lower[0];
    b.upper[i] = axes[i].domain().upper[0];
  }
  return b;
}

double min_exponent(const std::vector<Field>& fs) {
  double a = 1.0;
  for (const auto& f : fs) a = std::min(a, f.exponent());
  return a;
}

json specs_of(const std::vector<Field>& fs) {
  json a = json::array();
  for (const auto& f : fs) a.push_back(f.spec());
  return a;
}

}  // namespace

Field gen_diagonal(const std::vector<Field>& axes) {
  Box b = product_box(axes);
  const int m = b.dim;
  return Field::closed_form(
      b, m, 1,
      [axes, m](const Point& p) {
        Mat r(m, 1);
        for (int i = 0; i < m; ++i) r(i, 0) = axes[i].eval(make_point({p[i]}))(0, 0);
        return r;
      },
      min_exponent(axes), json{{"kind", "diagonal"}, {"axes", specs_of(axes)}});
}

Field axis_sum(const std::vector<Field>& axes) {
  Box b = product_box(axes);
  const int m = b.dim;
  return Field::closed_form(
      b, 1, 1,
      [axes, m](const Point& p) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += axes[i].eval(make_point({p[i]}))(0, 0);
        Mat r(1, 1);
        r(0, 0) = s;
        return r;
      },
      min_exponent(axes), json{{"kind", "axis_sum"}, {"axes", specs_of(axes)}});
}

Field stack(const std::vector<Field>& comps) {
  if (comps.empty() || comps.size() > 4) throw Error(ErrorKind::Config, "stack needs 1..4 components");
  for (const auto& c : comps) {
    if (c.rows() != 1 || c.cols() != 1) throw Error(ErrorKind::Config, "stacked components must be scalar");
    if (c.dim() != comps[0].dim()) throw Error(ErrorKind::Config, "stacked components differ in dimension");
  }
  const int k = int(comps.size());
  return Field::closed_form(
      comps[0].domain(), k, 1,
      [comps, k](const Point& p) {
        Mat r(k, 1);
        for (int i = 0; i < k; ++i) r(i, 0) = comps[i].eval(p)(0, 0);
        return r;
      },
      min_exponent(comps), json{{"kind", "stack"}, {"components", specs_of(comps)}});
}

namespace {

struct CholeskyCache {
  std::mutex mu;
  std::map<std::pair<double, int>, std::shared_ptr<const Eigen::MatrixXd>> factors;
};

CholeskyCache& cholesky_cache() {
  static CholeskyCache c;
  return c;
}

std::shared_ptr<const Eigen::MatrixXd> fbm_factor(double H, int level) {
  auto& cache = cholesky_cache();
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.factors.find({H, level});
    if (it != cache.factors.end()) return it->second;
  }
  const int n = 1 << level;
  Eigen::MatrixXd C(n, n);
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = (i + 1) * h, t = (j + 1) * h;
      double v = 0.5 * (std::pow(s, 2 * H) + std::pow(t, 2 * H) - std::pow(std::abs(s - t), 2 * H));
      C(i, j) = C(j, i) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Convergence, "fBm covariance is not numerically positive definite");
  auto L = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  std::lock_guard<std::mutex> lock(cache.mu);
  cache.factors.emplace(std::make_pair(H, level), L);
  return L;
}

}  // namespace

Field gen_fbm_1d(double H, int level, std::uint64_t seed) {
  if (!(H > 0.0 && H < 1.0)) throw Error(ErrorKind::Config, "Hurst parameter must lie in (0,1)");
  if (level > 12) throw Error(ErrorKind::Size, "fBm level above 12 exceeds the Cholesky size guard");
  if (level < 1) throw Error(ErrorKind::Config, "fBm level must be at least 1");
  auto L = fbm_factor(H, level);
  const int n = 1 << level;
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = counter_normal(seed, 7, std::uint64_t(i));
  Eigen::VectorXd x = L->triangularView<Eigen::Lower>() * z;
  std::vector<double> data(std::size_t(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) data[std::size_t(i) + 1] = x[i];
  json spec = {{"kind", "fbm_1d"}, {"H", H}, {"level", level}, {"seed", seed}};
  return Field::samples(Grid(Box::unit(1), level), 1, 1, std::move(data), H - 0.01, spec);
}

Field mollify(const Field& f, double eps, int level) {
  Grid grid(f.domain(), level);
  const double h = grid.min_spacing();
  if (!(eps >= 2.0 * h * (1 - 1e-12)))
    throw Error(ErrorKind::Config, "mollification width below twice the grid spacing");
  Field s = sample(f, grid);
  std::vector<double> cur = s.data();
  const int sz = f.rows() * f.cols();
  const int m = grid.box.dim;
  for (int ax = 0; ax < m; ++ax) {
    const double hx = grid.spacing(ax);
    const int r = int(std::ceil(3.0 * eps / hx));
    std::vector<double> w(std::size_t(2 * r + 1));
    double tot = 0.0;
    for (int j = -r; j <= r; ++j) {
      double u = j * hx / eps;
      w[std::size_t(j + r)] = std::exp(-0.5 * u * u);
      tot += w[std::size_t(j + r)];
    }
    for (double& x : w) x /= tot;
    const int n = grid.count(ax);
    const std::size_t st = grid.stride(ax);
    auto reflect = [n](int i) {
      // Reflect about the end points; the period keeps indices valid for wide kernels.
      const int period = 2 * (n - 1);
      if (period == 0) return 0;
      i %= period;
      if (i < 0) i += period;
      return i < n ? i : period - i;
    };
    std::vector<double> next(cur.size());
    parallel_for(grid.size(), [&](std::size_t k) {
      const int i = grid.unflat(k)[ax];
      const std::size_t base = k - std::size_t(i) * st;
      for (int e = 0; e < sz; ++e) {
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          acc += w[std::size_t(j + r)] * cur[(base + std::size_t(reflect(i + j)) * st) * sz + e];
        next[k * sz + e] = acc;
      }
    });
    cur = std::move(next);
  }
  json spec = {{"kind", "mollified"}, {"base", f.spec()}, {"eps", eps}, {"level", level}};
  return Field::samples(grid, f.rows(), f.cols(), std::move(cur), f.exponent(), spec);
}

Field smooth_field(const std::vector<std::string>& exprs, const Box& box) {
  if (exprs.empty() || exprs.size() > 4) throw Error(ErrorKind::Config, "need 1..4 expressions");
  std::vector<Expr> es;
  for (const auto& e : exprs) {
    es.push_back(Expr::parse(e));
    if (es.back().arity() > box.dim)
      throw Error(ErrorKind::Config, "expression '" + e + "' uses more coordinates than the box has");
  }
  const int k = int(es.size());
  json spec = {{"kind", "smooth_named"}, {"exprs", exprs}};
  return Field::closed_form(
      box, k, 1,
      [es, k](const Point& p) {
        Mat r(k, 1);
        for (int i = 0; i < k; ++i) r(i, 0) = es[i](p);
        return r;
      },
      1.0, spec);
}

Box box_from_json(const json& spec, int default_dim) {
  Box b;
  b.dim = spec.value("dim", default_dim);
  if (spec.contains("lower")) {
    auto lo = spec["lower"].get<std::vector<double>>();
    b.dim = int(lo.size());
    for (std::size_t i = 0; i < lo.size() && i < 3; ++i) b.lower[i] = lo[i];
  }
  if (spec.contains("upper")) {
    auto up = spec["upper"].get<std::vector<double>>();
    if (spec.contains("lower") && int(up.size()) != b.dim)
      throw Error(ErrorKind::Config, "lower and upper bounds differ in length");
    b.dim = int(up.size());
    for (std::size_t i = 0; i < up.size() && i < 3; ++i) b.upper[i] = up[i];
  }
  b.validate();
  return b;
}

namespace {

std::uint64_t seed_of(const json& s) { return s.value("seed", std::uint64_t(1)); }

Field make_signal_raw(const json& s) {
  if (s.is_string()) return make_signal_raw(signal_shorthand(s.get<std::string>()));
  if (!s.is_object() || !s.contains("kind")) throw Error(ErrorKind::Config, "signal spec needs a 'kind'");
  const std::string kind = s["kind"].get<std::string>();
  if (kind == "weierstrass_1d") {
    WeierstrassParams wp;
    wp.beta = s.value("beta", 0.8);
    wp.n_min = s.value("n_min", -16);
    wp.n_max = s.value("N", 14);
    wp.seed = seed_of(s);
    wp.amplitude = s.value("amplitude", 1.0);
    return gen_weierstrass_1d(wp, box_from_json(s, 1));
  }
  if (kind == "lacunary_md") {
    const int m = s.value("m", 1);
    const double beta = s.value("beta", 0.8);
    if (s.contains("modes")) {
      std::vector<LacunaryMode> modes;
      for (const auto& j : s["modes"]) {
        LacunaryMode md;
        auto k = j.at("k").get<std::vector<int>>();
        for (std::size_t i = 0; i < k.size() && i < 3; ++i) md.k[i] = k[i];
        md.amplitude = j.value("c", 1.0);
        md.phase = j.value("phase", 0.0);
        modes.push_back(md);
      }
      return lacunary_from_modes(modes, m, beta, s);
    }
    return gen_lacunary(beta, s.value("N", 14), seed_of(s), m, s.value("amplitude", 1.0));
  }
  if (kind == "composed")
    return gen_composed(make_signal(s.at("core")), s.at("outer").get<std::vector<std::string>>());
  if (kind == "diagonal" || kind == "axis_sum" || kind == "stack") {
    std::vector<Field> parts;
    for (const auto& j : s.at(kind == "stack" ? "components" : "axes")) parts.push_back(make_signal(j));
    return kind == "diagonal" ? gen_diagonal(parts) : kind == "axis_sum" ? axis_sum(parts) : stack(parts);
  }
  if (kind == "fbm_1d") return gen_fbm_1d(s.value("H", 0.75), s.value("level", 10), seed_of(s));
  if (kind == "mollified")
    return mollify(make_signal(s.at("base")), s.at("eps").get<double>(), s.value("level", 10));
  if (kind == "grid_file") return read_grid_csv(s.at("path").get<std::string>(), s.value("exponent", 1.0));
  if (kind == "smooth_named") {
    std::vector<std::string> exprs;
    if (s.contains("exprs")) exprs = s["exprs"].get<std::vector<std::string>>();
    else exprs.push_back(s.at("expr").get<std::string>());
    int arity = 1;
    for (const auto& e : exprs) arity = std::max(arity, Expr::parse(e).arity());
    return smooth_field(exprs, box_from_json(s, s.value("dim", arity)));
  }
  throw Error(ErrorKind::Config, "unknown signal kind '" + kind + "'");
}

}  // namespace

Field make_signal(const json& spec) {
  Field f = make_signal_raw(spec);
  if (spec.is_object() && spec.contains("exponent")) f = f.with_exponent(spec["exponent"].get<double>());
  return f;
}

json signal_shorthand(const std::string& text) {
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto kv = [&rest]() {
    json o = json::object();
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Config, "expected key=value in '" + tok + "'");
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      try {
        std::size_t used = 0;
        double d = std::stod(val, &used);
        if (used == val.size()) {
          o[key] = (val.find_first_of(".eE") == std::string::npos) ? json(std::stoll(val)) : json(d);
          continue;
        }
      } catch (const std::exception&) {
      }
      o[key] = val;
    }
    return o;
  };
  if (!text.empty() && text[0] == '@') return {{"kind", "grid_file"}, {"path", text.substr(1)}};
  if (head == "identity1d") return {{"kind", "smooth_named"}, {"exprs", {"x"}}, {"dim", 1}};
  if (head == "identity2d") return {{"kind", "smooth_named"}, {"exprs", {"x", "y"}}, {"dim", 2}};
  if (head == "identity3d") return {{"kind", "smooth_named"}, {"exprs", {"x", "y", "z"}}, {"dim", 3}};
  if (head == "const") return {{"kind", "smooth_named"}, {"expr", rest.empty() ? "1" : rest}};
  if (head == "poly") {
    // "t2" means t^2; terms separated by '+'.
    std::string out;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      out += rest[i];
      if ((rest[i] == 't' || rest[i] == 'x' || rest[i] == 'y') && i + 1 < rest.size() &&
          std::isdigit(static_cast<unsigned char>(rest[i + 1])))
        out += '^';
    }
    return {{"kind", "smooth_named"}, {"expr", out}};
  }
  if (head == "expr") {
    std::vector<std::string> parts;
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ';')) parts.push_back(tok);
    return {{"kind", "smooth_named"}, {"exprs", parts}};
  }
  if (head == "weierstrass") {
    json o = kv();
    o["kind"] = "weierstrass_1d";
    return o;
  }
  if (head == "lacunary") {
    json o = kv();
    o["kind"] = "lacunary_md";
    return o;
  }
  if (head == "fbm") {
    json o = kv();
    o["kind"] = "fbm_1d";
    return o;
  }
  throw Error(ErrorKind::Config, "unknown signal shorthand '" + text + "'");
}

}  // namespace roughfrob
