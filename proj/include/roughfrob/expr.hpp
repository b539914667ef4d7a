// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include <roughfrob/core.hpp>

namespace roughfrob {

/// Compiled scalar expression in the coordinates x, y, z (t and s alias x).
/// Grammar: + - * / ^, unary minus, numbers, pi, and sin cos tan exp log sqrt abs tanh.
class Expr {
 public:
  static Expr parse(const std::string& text);
  double operator()(const Point& p) const { return fn_(p); }
  const std::string& text() const { return text_; }
  /// Highest coordinate index used plus one.
  int arity() const { return arity_; }

 private:
  std::function<double(const Point&)> fn_;
  std::string text_;
  int arity_ = 0;
};

}  // namespace roughfrob
