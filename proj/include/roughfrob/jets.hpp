// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include <roughfrob/drivers.hpp>
#include <roughfrob/young.hpp>

namespace roughfrob {

/// Matrix field v (d x k) claimed to be a g-jet, with optional structured g-derivative.
struct JetCandidate {
  Field v;
  Field g;
  std::optional<Driver> model;  // v = model(g), supplies dv/dg
};

JetCandidate make_jet(const Driver& V, const Field& g);

struct JetTestOptions {
  int depth = 4;
  double tol = 1e-3;
  int cells_level = -1;  // cells per rectangle edge = 2^cells_level; -1 picks from the data
  int seminorm_level = -1;
};

struct JetReport {
  std::vector<AdditivityReport> rows;
  double scale = 1.0;  // 1 + [dv]_alpha [dg]_beta
  int cells_level = 0;
  bool vanishes = false;
  json to_json() const;
};

JetReport jet_test(const JetCandidate& c, const JetTestOptions& opt = {});

struct JetIntegrationOptions {
  int level = 8;
  int sub_level = 0;  // extra halvings of each grid cell along the path
  std::array<int, kMaxDim> order{0, 1, 2};
  bool force = false;
  bool corrected = true;  // endpoint-corrected cells when the candidate has a model
  JetTestOptions test;
};

/// theta_p = theta0 + integral of v dg along the axis-ordered polygonal path from p0 to p.
Field integrate_jet(const JetCandidate& c, const Point& p0, const Mat& theta0,
                    const JetIntegrationOptions& opt = {});

struct GDiffOptions {
  int level = -1;  // grid for closed-form theta; -1 uses theta's grid or 10/dim default
  double min_scale_factor = 2.0;  // smallest scale = factor * h
  double max_scale_fraction = 1.0 / 16.0;  // largest scale = fraction * diam
};

struct GDiffReport {
  struct Row {
    double scale;
    double remainder;
  };
  std::vector<Row> table;
  double fitted_exponent = 0.0;
  double fit_residual = 0.0;
  double target = 0.0;
  bool exact_zero = false;
  bool pass = false;
  json to_json() const;
};

/// Remainder |d theta_pq - v_p dg_pq| over dyadic-separation pairs.
GDiffReport g_derivative_check(const Field& theta, const Field& v, const Field& g, double target_rate,
                               const GDiffOptions& opt = {});

AdditivityReport wedge_null_check(const Field& gi, const Field& gj, int depth, double tol = -1.0,
                                  int cells_level = 8);

enum class ZustMode { CurlCondition, WedgeNull };

struct ZustReport {
  struct Pair {
    int i, j;
    ZustMode mode;
    double residual;  // curl sup or wedge ratio
    bool holds;
  };
  std::vector<Pair> pairs;
  bool conditions_hold = false;
  JetReport jet;
  bool consistent = false;  // conditions imply vanishing
  json to_json() const;
};

ZustReport zust_sufficiency_check(const JetCandidate& c, const std::vector<ZustMode>& modes,
                                  const JetTestOptions& opt = {}, int grid_level = 6);

enum class CorrectorSign { Plus, Minus, Auto };

struct CorrectorOptions {
  CorrectorSign sign = CorrectorSign::Auto;
  int level = 8;
  int sub_level = 0;
  JetTestOptions test;
};

struct CorrectorResult {
  Field corrector;  // grid samples of the column integrals
  JetCandidate corrected;
  std::string sign;  // "plus" means v1 + corrector
  JetReport raw, result;
  std::vector<std::pair<std::string, JetReport>> tried;
  double t_exponent = 0.0, s_exponent = 0.0;
  bool anisotropic_ok = false;
  double raw_residual = 0.0, corrector_boundary = 0.0;  // on the full box
  json to_json() const;
};

CorrectorResult corrector(const JetCandidate& c, const CorrectorOptions& opt = {});

Field compose_g_derivative(const Field& Dh_f, const Field& Dg_h_theta);
/// Graph variant: Dg f + Dxn f * Dg theta.
Field compose_graph_derivative(const Field& Dg_f, const Field& Dxn_f, const Field& Dg_theta);

struct WeakJacobianReport {
  double boundary = 0.0;
  double area = 0.0;
  double discrepancy = 0.0;
  double relative = 0.0;
  json to_json() const;
};

WeakJacobianReport weak_jacobian_check(const Field& gi, const Field& gj, const Rectangle& Q,
                                       int cells = 256, int boundary_level = 12);

/// Holder seminorm product used to scale jet tolerances.
double seminorm_scale(const Field& v, const Field& g, int level = -1);

}  // namespace roughfrob
