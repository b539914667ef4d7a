// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/expr.hpp>

#include <cctype>
#include <cmath>
#include <numbers>

namespace roughfrob {

namespace {

using Node = std::function<double(const Point&)>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Node parse() {
    Node n = sum();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return n;
  }
  int arity = 0;

 private:
  const std::string& s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& why) {
    throw Error(ErrorKind::Config, "expression '" + s_ + "': " + why);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }

  Node sum() {
    Node a = product();
    for (;;) {
      if (eat('+')) {
        Node b = product();
        a = [a, b](const Point& p) { return a(p) + b(p); };
      } else if (eat('-')) {
        Node b = product();
        a = [a, b](const Point& p) { return a(p) - b(p); };
      } else {
        return a;
      }
    }
  }
  Node product() {
    Node a = unary();
    for (;;) {
      if (eat('*')) {
        Node b = unary();
        a = [a, b](const Point& p) { return a(p) * b(p); };
      } else if (eat('/')) {
        Node b = unary();
        a = [a, b](const Point& p) { return a(p) / b(p); };
      } else {
        return a;
      }
    }
  }
  Node unary() {
    if (eat('-')) {
      Node a = unary();
      return [a](const Point& p) { return -a(p); };
    }
    if (eat('+')) return unary();
    return power();
  }
  Node power() {
    Node a = atom();
    if (eat('^')) {
      Node b = unary();  // right associative
      return [a, b](const Point& p) { return std::pow(a(p), b(p)); };
    }
    return a;
  }
  Node atom() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      Node a = sum();
      if (!eat(')')) fail("missing ')'");
      return a;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s_.substr(i_), &used);
      i_ += used;
      return [v](const Point&) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
      std::string id = s_.substr(i_, j - i_);
      i_ = j;
      if (id == "x" || id == "t" || id == "s") return coord(0);
      if (id == "y") return coord(1);
      if (id == "z") return coord(2);
      if (id == "pi") return [](const Point&) { return std::numbers::pi; };
      double (*fn)(double) = nullptr;
      if (id == "sin") fn = [](double u) { return std::sin(u); };
      else if (id == "cos") fn = [](double u) { return std::cos(u); };
      else if (id == "tan") fn = [](double u) { return std::tan(u); };
      else if (id == "exp") fn = [](double u) { return std::exp(u); };
      else if (id == "log") fn = [](double u) { return std::log(u); };
      else if (id == "sqrt") fn = [](double u) { return std::sqrt(u); };
      else if (id == "abs") fn = [](double u) { return std::abs(u); };
      else if (id == "tanh") fn = [](double u) { return std::tanh(u); };
      else fail("unknown name '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      Node a = sum();
      if (!eat(')')) fail("missing ')'");
      return [fn, a](const Point& p) { return fn(a(p)); };
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  Node coord(int k) {
    arity = std::max(arity, k + 1);
    return [k](const Point& p) { return p[k]; };
  }
};

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.fn_ = p.parse();
  e.text_ = text;
  e.arity_ = p.arity;
  return e;
}

}  // namespace roughfrob
