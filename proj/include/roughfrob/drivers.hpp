// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Closed-form map F(u, z) -> rows x cols with first derivatives.
/// For Pfaff systems u = g_p and z is the unknown; for jet models z is empty.
struct Driver {
  std::string name;
  json params = json::object();
  int k = 1;     // length of u
  int zdim = 0;  // length of z
  int rows = 1, cols = 1;
  double gamma = 1.0;  // Holder exponent of the derivatives
  std::function<Mat(const Mat& u, const Mat& z)> F;
  std::function<std::vector<Mat>(const Mat& u, const Mat& z)> dF_du;  // k entries
  std::function<std::vector<Mat>(const Mat& u, const Mat& z)> dF_dz;  // zdim entries

  json to_json() const { return {{"name", name}, {"params", params}}; }
};

/// Known names: const, linear_z, frob1_u2, u_component, cubic_implicit, linear_implicit,
/// square_implicit, rotational, gradient, g2_first, dsin, identity.
Driver make_driver(const json& spec);

/// v(p) = V(g_p) as a field, and its structured g-derivatives d v / d g^i = dV/du_i (g_p).
Field jet_field(const Driver& V, const Field& g);
std::vector<Field> jet_g_derivatives(const Driver& V, const Field& g);

Mat column(std::initializer_list<double> xs);
Mat scalar_mat(double x);

}  // namespace roughfrob
