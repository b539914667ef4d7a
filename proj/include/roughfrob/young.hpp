// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <roughfrob/calculus.hpp>

namespace roughfrob {

struct Segment {
  Point p{0, 0, 0};
  Point q{0, 0, 0};
  Segment reversed() const { return {q, p}; }
};

/// Rectangle [p; v1, v2] with sides along distinct axes; side lengths may be negative.
struct Rectangle {
  Point p{0, 0, 0};
  int axis1 = 0, axis2 = 1;
  double len1 = 1.0, len2 = 1.0;

  static Rectangle of_box(const Box& b, int axis1 = 0, int axis2 = 1);
  Point vertex(int k) const;  // counterclockwise: p, p+v1, p+v1+v2, p+v2
  /// Max side length.
  double diam() const;
  double area() const { return len1 * len2; }
  std::array<Rectangle, 4> children() const;
  std::array<Segment, 4> edges() const;
};

struct IntegrationOptions {
  int min_level = 2;
  int max_level = 16;
  double tol = 1e-9;  // relative to max(1, |value|)
  bool check_regularity = true;
};

struct IntegralResult {
  Mat value;
  std::vector<std::pair<int, Mat>> table;
  double error = 0.0;
  double germ_remainder = 0.0;
  int level = 0;
  bool converged = false;
  std::vector<std::string> warnings;
  json to_json() const;
};

/// Trapezoid sum of f dg along t -> x(t), t in [0,1], over 2^level equal cells.
Mat path_sum(const std::function<Mat(double)>& f, const std::function<Mat(double)>& g, int level);
/// Trapezoid sum from precomputed samples on a uniform partition.
Mat sample_sum(const std::vector<Mat>& f, const std::vector<Mat>& g, std::size_t stride = 1);

void check_young_pair(const Field& f, const Field& g);

IntegralResult young_integral_1d(const Field& f, const Field& g, double a, double b,
                                 const IntegrationOptions& opt = {});
IntegralResult young_integral_segment(const Field& f, const Field& g, const Segment& s,
                                      const IntegrationOptions& opt = {});
IntegralResult boundary_integral(const Field& f, const Field& g, const Rectangle& Q,
                                 const IntegrationOptions& opt = {});

/// Fixed-level sums; no regularity check.
Mat segment_sum(const Field& f, const Field& g, const Segment& s, int level);
Mat boundary_sum(const Field& f, const Field& g, const Rectangle& Q, int level);

struct AdditivityReport {
  int k = 2;
  struct Row {
    int level;
    double diam;
    double max_ratio;
    std::size_t objects;
  };
  std::vector<Row> table;
  double max_ratio = 0.0;     // over the finest level
  double level_slope = 0.0;   // d log2(ratio) / d level
  double decay_exponent = 0.0;  // ratio ~ diam^decay_exponent
  double tol = 0.0;
  bool vanishes = false;
  json to_json() const;
};

using RectFunctional = std::function<double(const Rectangle&)>;
using SegFunctional = std::function<double(const Segment&)>;

AdditivityReport check_dyadic_additivity(const RectFunctional& F, const Rectangle& Q, int depth,
                                         double tol);
AdditivityReport check_dyadic_additivity(const SegFunctional& F, const Segment& s, int depth,
                                         double tol);
/// Decides the verdict from a filled table.
void finish_additivity(AdditivityReport& rep);

}  // namespace roughfrob
