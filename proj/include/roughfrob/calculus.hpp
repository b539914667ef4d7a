// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Two-point function, e.g. a germ (x,y) -> f_x (g_y - g_x).
using TwoPoint = std::function<Mat(const Point&, const Point&)>;

Mat delta(const Field& f, const Point& p, const Point& q);
Mat delta2(const TwoPoint& w, const Point& x, const Point& y, const Point& z);

/// Least-squares power law y ~ c x^slope in log-log coordinates.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of log residuals
  int points = 0;
  bool exact_zero = false;  // every y below the floor
};

RateFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                      double floor = 0.0);

enum class PairScheme { AllPairs, DyadicPairs };

struct HolderOptions {
  PairScheme scheme = PairScheme::DyadicPairs;
  int level = -1;        // grid level for closed-form fields; -1 uses the field's grid or 12/dim
  unsigned axes = 0x7;   // bit mask of axes to probe
};

struct HolderReport {
  double alpha = 0.0;
  double seminorm = 0.0;
  struct Row {
    double scale;
    double max_ratio;
  };
  std::vector<Row> table;
  double fitted_exponent = 0.0;
  double fit_residual = 0.0;
  json to_json() const;
};

HolderReport holder_seminorm(const Field& f, double alpha, const HolderOptions& opt = {});

/// Matrix norm used for increments: Frobenius.
inline double norm(const Mat& m) { return m.norm(); }

}  // namespace roughfrob
