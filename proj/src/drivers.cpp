// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/drivers.hpp>

#include <cmath>

namespace roughfrob {

Mat column(std::initializer_list<double> xs) {
  Mat m(int(xs.size()), 1);
  int i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

Mat scalar_mat(double x) {
  Mat m(1, 1);
  m(0, 0) = x;
  return m;
}

namespace {

std::vector<Mat> zeros(int n, int rows, int cols) {
  return std::vector<Mat>(std::size_t(n), Mat::Zero(rows, cols));
}

Mat row(std::initializer_list<double> xs) {
  Mat m(1, int(xs.size()));
  int i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

}  // namespace

Driver make_driver(const json& spec_in) {
  json spec = spec_in.is_string() ? json{{"name", spec_in}} : spec_in;
  if (!spec.contains("name")) throw Error(ErrorKind::Config, "driver spec needs a 'name'");
  const std::string name = spec["name"].get<std::string>();
  json p = spec.value("params", json::object());
  for (auto it = spec.begin(); it != spec.end(); ++it)
    if (it.key() != "name" && it.key() != "params") p[it.key()] = it.value();
  Driver D;
  D.name = name;
  D.params = p;

  if (name == "const") {
    auto c = p.value("c", std::vector<std::vector<double>>{{1.0}});
    D.rows = int(c.size());
    D.cols = int(c.at(0).size());
    D.k = p.value("k", D.cols);
    D.zdim = p.value("zdim", D.rows);
    Mat C(D.rows, D.cols);
    for (int i = 0; i < D.rows; ++i)
      for (int j = 0; j < D.cols; ++j) C(i, j) = c.at(std::size_t(i)).at(std::size_t(j));
    const int k = D.k, zd = D.zdim, r = D.rows, cc = D.cols;
    D.F = [C](const Mat&, const Mat&) { return C; };
    D.dF_du = [k, r, cc](const Mat&, const Mat&) { return zeros(k, r, cc); };
    D.dF_dz = [zd, r, cc](const Mat&, const Mat&) { return zeros(zd, r, cc); };
  } else if (name == "linear_z") {
    // F^{l,i} = lambda_i z_l.
    auto lam = p.value("lambda", std::vector<double>{1.0});
    D.cols = int(lam.size());
    D.rows = D.zdim = p.value("d", 1);
    D.k = p.value("k", D.cols);
    const int k = D.k, d = D.rows, c = D.cols;
    D.F = [lam, d, c](const Mat&, const Mat& z) {
      Mat m(d, c);
      for (int l = 0; l < d; ++l)
        for (int i = 0; i < c; ++i) m(l, i) = lam[std::size_t(i)] * z(l, 0);
      return m;
    };
    D.dF_du = [k, d, c](const Mat&, const Mat&) { return zeros(k, d, c); };
    D.dF_dz = [lam, d, c](const Mat&, const Mat&) {
      std::vector<Mat> out;
      for (int lp = 0; lp < d; ++lp) {
        Mat m = Mat::Zero(d, c);
        for (int i = 0; i < c; ++i) m(lp, i) = lam[std::size_t(i)];
        out.push_back(m);
      }
      return out;
    };
  } else if (name == "frob1_u2") {
    // F(u1, u2, z) = (u2, 1).
    D.k = 2;
    D.rows = D.zdim = 1;
    D.cols = 2;
    D.F = [](const Mat& u, const Mat&) { return row({u(1, 0), 1.0}); };
    D.dF_du = [](const Mat&, const Mat&) { return std::vector<Mat>{row({0, 0}), row({1, 0})}; };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{row({0, 0})}; };
  } else if (name == "u_component") {
    // F(u, z) = u_i, independent of z.
    D.k = p.value("k", 1);
    const int idx = p.value("index", D.k - 1);
    if (idx < 0 || idx >= D.k) throw Error(ErrorKind::Config, "u_component index out of range");
    D.rows = D.zdim = 1;
    D.cols = 1;
    const int k = D.k;
    D.F = [idx](const Mat& u, const Mat&) { return scalar_mat(u(idx, 0)); };
    D.dF_du = [k, idx](const Mat&, const Mat&) {
      auto out = zeros(k, 1, 1);
      out[std::size_t(idx)](0, 0) = 1.0;
      return out;
    };
    D.dF_dz = [](const Mat&, const Mat&) { return zeros(1, 1, 1); };
  } else if (name == "cubic_implicit" || name == "linear_implicit" || name == "square_implicit") {
    // F(u, z) = phi(z) - u with phi = z^3 + z, z, z^2.
    D.k = 1;
    D.rows = D.zdim = 1;
    D.cols = 1;
    const int kind = name == "cubic_implicit" ? 3 : name == "square_implicit" ? 2 : 1;
    D.F = [kind](const Mat& u, const Mat& z) {
      double y = z(0, 0);
      double phi = kind == 3 ? y * y * y + y : kind == 2 ? y * y : y;
      return scalar_mat(phi - u(0, 0));
    };
    D.dF_du = [](const Mat&, const Mat&) { return std::vector<Mat>{scalar_mat(-1.0)}; };
    D.dF_dz = [kind](const Mat&, const Mat& z) {
      double y = z(0, 0);
      return std::vector<Mat>{scalar_mat(kind == 3 ? 3 * y * y + 1 : kind == 2 ? 2 * y : 1.0)};
    };
  } else if (name == "rotational") {
    D.k = 2;
    D.rows = 1;
    D.cols = 2;
    D.F = [](const Mat& u, const Mat&) { return row({-u(1, 0), u(0, 0)}); };
    D.dF_du = [](const Mat&, const Mat&) { return std::vector<Mat>{row({0, 1}), row({-1, 0})}; };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{}; };
  } else if (name == "gradient") {
    // Gradient of phi(u) = sin(u1) u2 + u1^2.
    D.k = 2;
    D.rows = 1;
    D.cols = 2;
    D.F = [](const Mat& u, const Mat&) {
      double a = u(0, 0), b = u(1, 0);
      return row({std::cos(a) * b + 2 * a, std::sin(a)});
    };
    D.dF_du = [](const Mat& u, const Mat&) {
      double a = u(0, 0), b = u(1, 0);
      return std::vector<Mat>{row({-std::sin(a) * b + 2, std::cos(a)}), row({std::cos(a), 0})};
    };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{}; };
  } else if (name == "g2_first") {
    // V(u) = (u2, 0).
    D.k = 2;
    D.rows = 1;
    D.cols = 2;
    D.F = [](const Mat& u, const Mat&) { return row({u(1, 0), 0.0}); };
    D.dF_du = [](const Mat&, const Mat&) { return std::vector<Mat>{row({0, 0}), row({1, 0})}; };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{}; };
  } else if (name == "dsin") {
    // Derivative of sin composed with scalar g.
    D.k = 1;
    D.rows = 1;
    D.cols = 1;
    D.F = [](const Mat& u, const Mat&) { return scalar_mat(std::cos(u(0, 0))); };
    D.dF_du = [](const Mat& u, const Mat&) { return std::vector<Mat>{scalar_mat(-std::sin(u(0, 0)))}; };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{}; };
  } else if (name == "identity") {
    D.k = p.value("k", 1);
    D.rows = D.cols = D.k;
    const int k = D.k;
    D.F = [k](const Mat&, const Mat&) { return Mat(Mat::Identity(k, k)); };
    D.dF_du = [k](const Mat&, const Mat&) { return zeros(k, k, k); };
    D.dF_dz = [](const Mat&, const Mat&) { return std::vector<Mat>{}; };
  } else {
    throw Error(ErrorKind::Config, "unknown driver '" + name + "'");
  }
  D.gamma = p.value("gamma", 1.0);
  return D;
}

Field jet_field(const Driver& V, const Field& g) {
  if (g.rows() != V.k || g.cols() != 1)
    throw Error(ErrorKind::Config, "driver expects a " + std::to_string(V.k) + "-vector signal");
  Mat empty(0, 1);
  return Field::closed_form(
      g.domain(), V.rows, V.cols, [V, g, empty](const Point& p) { return V.F(g.eval(p), empty); },
      g.exponent(), json{{"kind", "jet"}, {"driver", V.to_json()}, {"g", g.spec()}});
}

std::vector<Field> jet_g_derivatives(const Driver& V, const Field& g) {
  std::vector<Field> out;
  Mat empty(0, 1);
  for (int i = 0; i < V.k; ++i)
    out.push_back(Field::closed_form(
        g.domain(), V.rows, V.cols,
        [V, g, empty, i](const Point& p) { return V.dF_du(g.eval(p), empty)[std::size_t(i)]; },
        g.exponent()));
  return out;
}

}  // namespace roughfrob
