// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <roughfrob/jets.hpp>

namespace roughfrob {

struct SolveResult {
  Field theta;
  int iterations = 0;
  double residual = 0.0;  // final fixed-point change
  json diagnostics = json::object();
  json patching = json::array();
  json to_json() const;  // theta is left out; callers write it as a grid file
};

/// Rough Pfaff system d theta = F(g, theta) dg from (p0, theta0).
struct PfaffProblem {
  Field g;
  Driver F;
  double beta = 1.0;
  double gamma = 1.0;
  Point p0{0, 0, 0};
  Mat theta0;
  /// z-range for the involutivity lattice; empty means theta0 +- 2(1+|theta0|).
  std::vector<std::pair<double, double>> z_range;
};

struct YdeOptions {
  int level = 14;
  double tol = 1e-10;
  int max_iter = 200;
};

/// theta_t = theta0 + int_a^t F(y_s, theta_s) dy_s on [a, b].
SolveResult solve_yde(const Driver& F, const Field& y, const Mat& theta0, double a, double b,
                      const YdeOptions& opt = {});

struct PfaffOptions {
  int level = 8;
  double tol = 1e-10;
  int max_iter = 200;
  int max_split_depth = 8;
  bool zero_start = false;  // start from v = 0 instead of F(g_p0, theta0)
  int wedge_depth = 4;
  int diagnostic_pairs = 16;
  std::uint64_t seed = 1;
};

SolveResult solve_frobenius_wedge_null(const PfaffProblem& P, const PfaffOptions& opt = {});

struct DiagonalOptions {
  int level = 10;
  double tol = 1e-10;
  std::array<int, kMaxDim> order{0, 1, 2};
  bool diagnostics = true;
};

SolveResult solve_frobenius_diagonal(const PfaffProblem& P, const DiagonalOptions& opt = {});

struct InvolutivityReport {
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool holds = true;
  json worst;  // offending sample
  json to_json() const;
};
InvolutivityReport check_involutivity(const PfaffProblem& P, int lattice = 17);

/// f(x) = F(g_{x^m}, x^n) = f(x0) solved for x^n = theta(x^m).
struct ImplicitProblem {
  Field g;
  Driver F;
  double beta = 1.0;
  double gamma = 1.0;
  Point x0m{0, 0, 0};
  Mat x0n;
};

struct ImplicitOptions {
  int level = 8;
  double tol = 1e-13;
  int max_iter = 200;
  int max_halvings = 20;
};

SolveResult solve_implicit(const ImplicitProblem& P, const ImplicitOptions& opt = {});
/// Pointwise -A^{-1} B at (g_p, theta_p).
Field implicit_g_derivative(const ImplicitProblem& P, const Field& theta);

struct LevelSetReport {
  std::vector<std::pair<int, double>> variation;  // (level, sup |phi - phi(x0)|)
  double bound = 0.0;
  bool pass = false;
  json to_json() const;
};

/// phi is a closed form on I^m x I^n evaluated at (p, theta_p).
LevelSetReport level_set_composition_check(const std::function<double(const Point&, const Mat&)>& phi,
                                           const ImplicitProblem& P, double tol,
                                           const std::vector<int>& levels);

struct GronwallReport {
  struct Row {
    int level;
    double residual;
    double norm_a, norm_b, a0;
    double ratio;
  };
  std::vector<Row> rows;
  bool exact_zero = false;
  double variation = 0.0;  // (max - min) / max over levels
  bool finite = true;
  json to_json() const;
};

/// Checks a_t = a_0 + int (b + u a) dy, then reports ||a||_beta / (|a_0| + ||b||_alpha).
GronwallReport verify_gronwall(const Field& a, const Field& b, const Field& u, const Field& y,
                               double alpha, double beta, const std::vector<int>& levels,
                               double residual_tol = 1e-6);

struct YdeGDerivResult {
  Field theta;   // on [t] x J
  Field dtheta;  // g-derivative on [t] x J
  GDiffReport check;
  json to_json() const;
};

struct YdeGDerivOptions {
  int level_t = 12;
  int level_p = 10;
};

/// theta(t,p) = vartheta_p + int_0^t F((y_s, g_p), theta) dy_s with m = 1 parameter p.
YdeGDerivResult yde_g_derivative(const Driver& F, const Field& y, const Field& g, const Field& vartheta,
                                 const Field& d_vartheta, const YdeGDerivOptions& opt = {});
bool yde_exponent_condition(double alpha, double beta, double gamma);

}  // namespace roughfrob
