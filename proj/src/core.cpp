// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/core.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace roughfrob {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Regularity: return "regularity";
    case ErrorKind::Config: return "config";
    case ErrorKind::Convergence: return "nonconvergence";
    case ErrorKind::Jet: return "jet";
    case ErrorKind::Involutivity: return "involutivity";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::Corrector: return "corrector";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Size: return "size";
  }
  return "unknown";
}

Box Box::unit(int dim) {
  Box b;
  b.dim = dim;
  b.validate();
  return b;
}

void Box::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw Error(ErrorKind::Config, "box dimension must be 1..3, got " + std::to_string(dim));
  for (int i = 0; i < dim; ++i)
    if (!(lower[i] < upper[i]))
      throw Error(ErrorKind::Config, "box bounds must satisfy lower < upper on axis " +
                                         std::to_string(i));
}

bool Box::contains(const Point& p, double slack) const {
  for (int i = 0; i < dim; ++i) {
    double tol = slack * std::max(1.0, width(i));
    if (!(p[i] >= lower[i] - tol && p[i] <= upper[i] + tol)) return false;
  }
  return true;
}

double Box::diam() const {
  double d = 0.0;
  for (int i = 0; i < dim; ++i) d = std::max(d, width(i));
  return d;
}

Grid::Grid(const Box& b, int level) : box(b) {
  b.validate();
  if (level < 0 || level > 24) throw Error(ErrorKind::Config, "grid level out of range");
  for (int i = 0; i < b.dim; ++i) levels[i] = level;
}

Grid::Grid(const Box& b, const std::array<int, kMaxDim>& lv) : box(b), levels(lv) {
  b.validate();
  for (int i = b.dim; i < kMaxDim; ++i) levels[i] = 0;
  for (int i = 0; i < b.dim; ++i)
    if (levels[i] < 0 || levels[i] > 24) throw Error(ErrorKind::Config, "grid level out of range");
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int i = 0; i < box.dim; ++i) n *= std::size_t(count(i));
  return n;
}

std::size_t Grid::stride(int axis) const {
  std::size_t s = 1;
  for (int i = box.dim - 1; i > axis; --i) s *= std::size_t(count(i));
  return s;
}

std::size_t Grid::flat(const std::array<int, kMaxDim>& idx) const {
  std::size_t k = 0;
  for (int i = 0; i < box.dim; ++i) k = k * std::size_t(count(i)) + std::size_t(idx[i]);
  return k;
}

std::array<int, kMaxDim> Grid::unflat(std::size_t k) const {
  std::array<int, kMaxDim> idx{0, 0, 0};
  for (int i = box.dim - 1; i >= 0; --i) {
    idx[i] = int(k % std::size_t(count(i)));
    k /= std::size_t(count(i));
  }
  return idx;
}

Point Grid::point(const std::array<int, kMaxDim>& idx) const {
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < box.dim; ++i) {
    // Exact at both ends.
    int n = 1 << levels[i];
    p[i] = idx[i] == n ? box.upper[i] : box.lower[i] + box.width(i) * (double(idx[i]) / n);
  }
  return p;
}

double Grid::min_spacing() const {
  double h = spacing(0);
  for (int i = 1; i < box.dim; ++i) h = std::min(h, spacing(i));
  return h;
}

struct Field::Impl {
  Box box;
  int rows = 1, cols = 1;
  double exponent = 1.0;
  json spec;
  Fn fn;
  bool grid_source = false;
  Grid grid;
  std::vector<double> data;

  Mat interp(const Point& p) const {
    const int m = box.dim;
    std::array<int, kMaxDim> base{0, 0, 0};
    std::array<double, kMaxDim> w{0.0, 0.0, 0.0};
    for (int i = 0; i < m; ++i) {
      int n = 1 << grid.levels[i];
      double u = (p[i] - box.lower[i]) / box.width(i) * n;
      u = std::clamp(u, 0.0, double(n));
      int c = std::min(int(std::floor(u)), n - 1);
      if (n == 0) c = 0;
      base[i] = c;
      w[i] = u - c;
    }
    Mat out = Mat::Zero(rows, cols);
    const int corners = 1 << m;
    const int sz = rows * cols;
    for (int c = 0; c < corners; ++c) {
      double wt = 1.0;
      std::array<int, kMaxDim> idx = base;
      for (int i = 0; i < m; ++i) {
        if (c & (1 << i)) {
          wt *= w[i];
          idx[i] += 1;
        } else {
          wt *= 1.0 - w[i];
        }
      }
      if (wt == 0.0) continue;
      const double* src = data.data() + grid.flat(idx) * std::size_t(sz);
      for (int e = 0; e < sz; ++e) out.data()[e] += wt * src[e];
    }
    return out;
  }
};

Field Field::closed_form(const Box& box, int rows, int cols, Fn fn, double exponent, json spec) {
  box.validate();
  auto impl = std::make_shared<Impl>();
  impl->box = box;
  impl->rows = rows;
  impl->cols = cols;
  impl->exponent = exponent;
  impl->spec = std::move(spec);
  impl->fn = std::move(fn);
  Field f;
  f.impl_ = std::move(impl);
  return f;
}

Field Field::samples(const Grid& grid, int rows, int cols, std::vector<double> data,
                     double exponent, json spec) {
  if (data.size() != grid.size() * std::size_t(rows * cols))
    throw Error(ErrorKind::Config, "sample count does not match grid size");
  auto impl = std::make_shared<Impl>();
  impl->box = grid.box;
  impl->rows = rows;
  impl->cols = cols;
  impl->exponent = exponent;
  impl->spec = std::move(spec);
  impl->grid_source = true;
  impl->grid = grid;
  impl->data = std::move(data);
  Field f;
  f.impl_ = std::move(impl);
  return f;
}

const Box& Field::domain() const { return impl_->box; }
int Field::rows() const { return impl_->rows; }
int Field::cols() const { return impl_->cols; }
double Field::exponent() const { return impl_->exponent; }
const json& Field::spec() const { return impl_->spec; }
bool Field::is_grid() const { return impl_->grid_source; }
const Grid& Field::grid() const { return impl_->grid; }
const std::vector<double>& Field::data() const { return impl_->data; }

Mat Field::operator()(const Point& p) const {
  if (!impl_->box.contains(p)) {
    std::ostringstream os;
    os << "point (";
    for (int i = 0; i < impl_->box.dim; ++i) os << (i ? "," : "") << p[i];
    os << ") outside field domain";
    throw Error(ErrorKind::Domain, os.str());
  }
  return eval(p);
}

Mat Field::eval(const Point& p) const {
  return impl_->grid_source ? impl_->interp(p) : impl_->fn(p);
}

Field Field::with_exponent(double a) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->exponent = a;
  Field f;
  f.impl_ = std::move(impl);
  return f;
}

Field Field::with_spec(json spec) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->spec = std::move(spec);
  Field f;
  f.impl_ = std::move(impl);
  return f;
}

void store(std::vector<double>& data, std::size_t k, const Mat& v) {
  const std::size_t sz = std::size_t(v.size());
  std::copy(v.data(), v.data() + sz, data.begin() + std::ptrdiff_t(k * sz));
}

Mat load(const std::vector<double>& data, std::size_t k, int rows, int cols) {
  Mat m(rows, cols);
  const std::size_t sz = std::size_t(rows * cols);
  std::copy(data.begin() + std::ptrdiff_t(k * sz), data.begin() + std::ptrdiff_t((k + 1) * sz),
            m.data());
  return m;
}

Field sample(const Field& f, const Grid& grid) {
  if (f.is_grid() && f.grid().box.dim == grid.box.dim && f.grid().levels == grid.levels &&
      f.grid().box.lower == grid.box.lower && f.grid().box.upper == grid.box.upper)
    return f;
  const int sz = f.rows() * f.cols();
  std::vector<double> data(grid.size() * std::size_t(sz));
  parallel_for(grid.size(), [&](std::size_t k) { store(data, k, f(grid.point(k))); });
  return Field::samples(grid, f.rows(), f.cols(), std::move(data), f.exponent(), f.spec());
}

namespace {

std::string join(const double* xs, int n) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int i = 0; i < n; ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "bad number in grid file: '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void write_grid_csv(const Field& f, std::ostream& os) {
  if (!f.is_grid()) throw Error(ErrorKind::Config, "only grid-sampled fields can be written");
  const Grid& g = f.grid();
  const int m = g.box.dim;
  std::array<double, kMaxDim> lv{};
  for (int i = 0; i < m; ++i) lv[i] = g.levels[i];
  os << "# dim=" << m << "\n";
  os << "# lower=" << join(g.box.lower.data(), m) << "\n";
  os << "# upper=" << join(g.box.upper.data(), m) << "\n";
  os << "# levels=" << join(lv.data(), m) << "\n";
  os << "# shape=" << f.rows() << "," << f.cols() << "\n";
  const int sz = f.rows() * f.cols();
  const auto& d = f.data();
  for (std::size_t k = 0; k < g.size(); ++k) os << join(d.data() + k * std::size_t(sz), sz) << "\n";
}

void write_grid_csv(const Field& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot open '" + path + "' for writing");
  write_grid_csv(f, os);
}

Field read_grid_csv(std::istream& is, double exponent) {
  Box box;
  std::array<int, kMaxDim> levels{0, 0, 0};
  int rows = 1, cols = 1;
  bool have_dim = false, have_lower = false, have_upper = false, have_levels = false;
  std::vector<double> data;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      key.erase(key.find_last_not_of(' ') + 1);
      auto vals = split_numbers(line.substr(eq + 1));
      if (key == "dim") {
        if (vals.size() != 1) throw Error(ErrorKind::Config, "bad dim header");
        box.dim = int(vals[0]);
        have_dim = true;
      } else if (key == "lower") {
        for (std::size_t i = 0; i < vals.size() && i < 3; ++i) box.lower[i] = vals[i];
        have_lower = vals.size() >= 1;
      } else if (key == "upper") {
        for (std::size_t i = 0; i < vals.size() && i < 3; ++i) box.upper[i] = vals[i];
        have_upper = vals.size() >= 1;
      } else if (key == "levels") {
        for (std::size_t i = 0; i < vals.size() && i < 3; ++i) levels[i] = int(vals[i]);
        have_levels = vals.size() >= 1;
      } else if (key == "shape") {
        if (vals.size() != 2) throw Error(ErrorKind::Config, "bad shape header");
        rows = int(vals[0]);
        cols = int(vals[1]);
      }
      continue;
    }
    auto vals = split_numbers(line);
    if (int(vals.size()) != rows * cols)
      throw Error(ErrorKind::Config, "grid file row has " + std::to_string(vals.size()) +
                                         " values, expected " + std::to_string(rows * cols));
    data.insert(data.end(), vals.begin(), vals.end());
  }
  if (!have_dim || !have_lower || !have_upper || !have_levels)
    throw Error(ErrorKind::Config, "grid file is missing a header line");
  if (rows < 1 || cols < 1 || rows > 4 || cols > 4)
    throw Error(ErrorKind::Config, "grid file shape out of range");
  Grid grid(box, levels);
  if (data.size() != grid.size() * std::size_t(rows * cols))
    throw Error(ErrorKind::Config, "grid file has " + std::to_string(data.size() / (rows * cols)) +
                                       " samples, expected " + std::to_string(grid.size()));
  return Field::samples(grid, rows, cols, std::move(data), exponent,
                        json{{"kind", "grid_file"}});
}

Field read_grid_csv(const std::string& path, double exponent) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Config, "cannot open grid file '" + path + "'");
  Field f = read_grid_csv(is, exponent);
  return f.with_spec(json{{"kind", "grid_file"}, {"path", path}});
}

Point make_point(std::initializer_list<double> xs) {
  Point p{0.0, 0.0, 0.0};
  int i = 0;
  for (double x : xs) {
    if (i >= kMaxDim) break;
    p[i++] = x;
  }
  return p;
}

double dist(const Point& p, const Point& q, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (q[i] - p[i]) * (q[i] - p[i]);
  return std::sqrt(s);
}

int thread_count() {
  int hw = int(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ROUGHFROB_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int threads = int(std::min<std::size_t>(std::size_t(thread_count()), n / 64 + 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  const std::size_t chunk = (n + std::size_t(threads) - 1) / std::size_t(threads);
  for (int t = 0; t < threads; ++t) {
    std::size_t lo = std::size_t(t) * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace roughfrob
