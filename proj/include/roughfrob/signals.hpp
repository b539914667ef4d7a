// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Counter-based generator: the value depends only on (seed, stream, counter).
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
/// Standard normal by Box-Muller on two counter draws.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

struct WeierstrassParams {
  double beta = 0.8;
  int n_min = -16;
  int n_max = 14;
  std::uint64_t seed = 1;
  double amplitude = 1.0;
};

/// amplitude * sum_{n=n_min}^{n_max} 2^{-n beta} (cos(2 pi 2^n t + phi) - cos phi) with one seeded
/// phase shared by every term, so the increments are self-similar under dyadic zoom.
Field gen_weierstrass_1d(const WeierstrassParams& wp, const Box& box = Box::unit(1));

struct LacunaryMode {
  std::array<int, kMaxDim> k{0, 0, 0};
  double amplitude = 1.0;
  double phase = 0.0;
};

/// Lacunary series: one frequency k_n per dyadic annulus 2^n < |k| <= 2^{n+1}, |c_n| = 2^{-n beta}.
Field gen_lacunary(double beta, int N, std::uint64_t seed, int m, double amplitude = 1.0);
std::vector<LacunaryMode> lacunary_modes(double beta, int N, std::uint64_t seed, int m);
Field lacunary_from_modes(std::vector<LacunaryMode> modes, int m, double beta, json spec);

/// Scalar maps with derivatives, for composed signals and structured drivers.
struct OuterMap {
  std::string name;
  std::function<double(double)> f, df;
};
OuterMap outer_map(const std::string& name);

/// g^i = outer_i(w), a wedge-null family.
Field gen_composed(const Field& w, const std::vector<std::string>& outer);
/// Component i depends only on coordinate i.
Field gen_diagonal(const std::vector<Field>& axes);
/// Scalar sum of one-dimensional fields, term i in coordinate i.
Field axis_sum(const std::vector<Field>& axes);
/// Stack scalar fields into a column vector.
Field stack(const std::vector<Field>& comps);

Field gen_fbm_1d(double H, int level, std::uint64_t seed);
Field mollify(const Field& f, double eps, int level);

/// Smooth closed form from expressions, one per component.
Field smooth_field(const std::vector<std::string>& exprs, const Box& box);

/// Builds a field from a signal spec (see README for the recognised kinds).
Field make_signal(const json& spec);
/// Expands CLI shorthand such as "poly:t2", "identity2d" or "weierstrass:beta=0.8,seed=7".
json signal_shorthand(const std::string& text);
Box box_from_json(const json& spec, int default_dim);

}  // namespace roughfrob
