// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace roughfrob {

using json = nlohmann::json;

/// Small dense matrix; every value in the library is at most 4x4.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;
using Point = std::array<double, 3>;

constexpr int kMaxDim = 3;

enum class ErrorKind {
  Domain,
  Regularity,
  Config,
  Convergence,
  Jet,
  Involutivity,
  Degeneracy,
  Corrector,
  Precondition,
  Size,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, json detail = json::object())
      : std::runtime_error(what), kind_(kind), detail_(std::move(detail)) {}
  ErrorKind kind() const noexcept { return kind_; }
  const json& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  json detail_;
};

struct Box {
  int dim = 1;
  std::array<double, kMaxDim> lower{0.0, 0.0, 0.0};
  std::array<double, kMaxDim> upper{1.0, 1.0, 1.0};

  static Box unit(int dim);
  void validate() const;
  bool contains(const Point& p, double slack = 1e-12) const;
  double width(int i) const { return upper[i] - lower[i]; }
  /// Largest side length.
  double diam() const;
};

/// Tensor-product dyadic grid over a box.
struct Grid {
  Box box;
  std::array<int, kMaxDim> levels{0, 0, 0};

  Grid() = default;
  Grid(const Box& b, int level);
  Grid(const Box& b, const std::array<int, kMaxDim>& lv);

  int count(int axis) const { return (1 << levels[axis]) + 1; }
  double spacing(int axis) const { return box.width(axis) / double(1 << levels[axis]); }
  std::size_t size() const;
  std::size_t flat(const std::array<int, kMaxDim>& idx) const;
  std::array<int, kMaxDim> unflat(std::size_t k) const;
  Point point(const std::array<int, kMaxDim>& idx) const;
  Point point(std::size_t k) const { return point(unflat(k)); }
  std::size_t stride(int axis) const;
  double min_spacing() const;
};

/// Evaluable function on a box: closed form or multilinear grid samples.
class Field {
 public:
  using Fn = std::function<Mat(const Point&)>;

  Field() = default;
  static Field closed_form(const Box& box, int rows, int cols, Fn fn, double exponent,
                           json spec = json());
  static Field samples(const Grid& grid, int rows, int cols, std::vector<double> data,
                       double exponent, json spec = json());

  bool valid() const { return static_cast<bool>(impl_); }
  const Box& domain() const;
  int dim() const { return domain().dim; }
  int rows() const;
  int cols() const;
  double exponent() const;
  const json& spec() const;
  bool is_grid() const;
  const Grid& grid() const;
  const std::vector<double>& data() const;

  /// Domain-checked evaluation.
  Mat operator()(const Point& p) const;
  Mat eval(const Point& p) const;
  double scalar(const Point& p) const { return eval(p)(0, 0); }

  Field with_exponent(double a) const;
  Field with_spec(json spec) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

Field sample(const Field& f, const Grid& grid);
/// Samples of one grid point, flattened column-major.
void store(std::vector<double>& data, std::size_t k, const Mat& v);
Mat load(const std::vector<double>& data, std::size_t k, int rows, int cols);

void write_grid_csv(const Field& f, const std::string& path);
void write_grid_csv(const Field& f, std::ostream& os);
Field read_grid_csv(const std::string& path, double exponent = 1.0);
Field read_grid_csv(std::istream& is, double exponent = 1.0);

Point make_point(std::initializer_list<double> xs);
double dist(const Point& p, const Point& q, int dim);

/// Number of worker threads, capped by ROUGHFROB_THREADS.
int thread_count();
/// Runs fn(i) for i in [0,n) across worker threads; each index must write only its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace roughfrob
