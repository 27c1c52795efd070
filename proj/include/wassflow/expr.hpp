#pragma once

// Small arithmetic expression grammar for scenario files and test functions.
// Supports +,-,*,/,^, parentheses, numeric literals, the variables x and t,
// and the functions exp, abs, log, sqrt, sin, cos, tanh, min, max.

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wassflow {

class Expr {
 public:
  double operator()(double x, double t = 0.0) const {
    if (!root_) throw std::logic_error("Expr: empty expression");
    return root_->eval(x, t);
  }
  bool empty() const { return !root_; }
  const std::string& source() const { return src_; }

  static Expr parse(const std::string& s) {
    Parser p{s, 0};
    Expr e;
    e.root_ = p.parse_sum();
    p.skip_ws();
    if (p.pos != s.size())
      throw std::invalid_argument("Expr: trailing input at '" +
                                  s.substr(p.pos) + "'");
    e.src_ = s;
    return e;
  }

 private:
  struct Node {
    // op: one of + - * / ^ n(umber) x t f(unction call)
    char op = 'n';
    double value = 0.0;
    int fn = -1;
    std::vector<std::unique_ptr<Node>> kids;

    double eval(double x, double t) const {
      switch (op) {
        case 'n': return value;
        case 'x': return x;
        case 't': return t;
        case '+': return kids[0]->eval(x, t) + kids[1]->eval(x, t);
        case '-':
          return kids.size() == 1 ? -kids[0]->eval(x, t)
                                  : kids[0]->eval(x, t) - kids[1]->eval(x, t);
        case '*': return kids[0]->eval(x, t) * kids[1]->eval(x, t);
        case '/': return kids[0]->eval(x, t) / kids[1]->eval(x, t);
        case '^': return std::pow(kids[0]->eval(x, t), kids[1]->eval(x, t));
        case 'f': {
          const double a = kids[0]->eval(x, t);
          switch (fn) {
            case 0: return std::exp(a);
            case 1: return std::abs(a);
            case 2: return std::log(a);
            case 3: return std::sqrt(a);
            case 4: return std::sin(a);
            case 5: return std::cos(a);
            case 6: return std::tanh(a);
            case 7: return std::min(a, kids[1]->eval(x, t));
            case 8: return std::max(a, kids[1]->eval(x, t));
          }
          break;
        }
      }
      throw std::logic_error("Expr: bad node");
    }
  };
  using NodePtr = std::unique_ptr<Node>;

  struct Parser {
    const std::string& s;
    size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
        ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) { ++pos; return true; }
      return false;
    }

    NodePtr parse_sum() {
      NodePtr lhs = parse_product();
      for (;;) {
        if (eat('+')) lhs = binary('+', std::move(lhs), parse_product());
        else if (eat('-')) lhs = binary('-', std::move(lhs), parse_product());
        else return lhs;
      }
    }
    NodePtr parse_product() {
      NodePtr lhs = parse_unary();
      for (;;) {
        if (eat('*')) lhs = binary('*', std::move(lhs), parse_unary());
        else if (eat('/')) lhs = binary('/', std::move(lhs), parse_unary());
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (eat('-')) {
        auto n = std::make_unique<Node>();
        n->op = '-';
        n->kids.push_back(parse_unary());
        return n;
      }
      eat('+');
      return parse_power();
    }
    NodePtr parse_power() {
      NodePtr base = parse_atom();
      if (eat('^')) return binary('^', std::move(base), parse_unary());
      return base;
    }
    NodePtr parse_atom() {
      skip_ws();
      if (pos >= s.size()) throw std::invalid_argument("Expr: unexpected end");
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        NodePtr e = parse_sum();
        if (!eat(')')) throw std::invalid_argument("Expr: missing ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        size_t used = 0;
        const double v = std::stod(s.substr(pos), &used);
        pos += used;
        auto n = std::make_unique<Node>();
        n->op = 'n';
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        size_t start = pos;
        while (pos < s.size() &&
               std::isalnum(static_cast<unsigned char>(s[pos])))
          ++pos;
        const std::string name = s.substr(start, pos - start);
        skip_ws();
        if (pos < s.size() && s[pos] == '(') {
          static const char* fns[] = {"exp", "abs", "log", "sqrt", "sin",
                                      "cos", "tanh", "min", "max"};
          int fn = -1;
          for (int i = 0; i < 9; ++i)
            if (name == fns[i]) fn = i;
          if (fn < 0)
            throw std::invalid_argument("Expr: unknown function '" + name + "'");
          ++pos;
          auto n = std::make_unique<Node>();
          n->op = 'f';
          n->fn = fn;
          n->kids.push_back(parse_sum());
          if (fn >= 7) {
            if (!eat(',')) throw std::invalid_argument("Expr: expected ','");
            n->kids.push_back(parse_sum());
          }
          if (!eat(')')) throw std::invalid_argument("Expr: missing ')'");
          return n;
        }
        if (name == "x" || name == "t") {
          auto n = std::make_unique<Node>();
          n->op = name[0];
          return n;
        }
        if (name == "pi") {
          auto n = std::make_unique<Node>();
          n->op = 'n';
          n->value = 3.14159265358979323846;
          return n;
        }
        throw std::invalid_argument("Expr: unknown identifier '" + name + "'");
      }
      throw std::invalid_argument(std::string("Expr: unexpected char '") + c +
                                  "'");
    }
    static NodePtr binary(char op, NodePtr a, NodePtr b) {
      auto n = std::make_unique<Node>();
      n->op = op;
      n->kids.push_back(std::move(a));
      n->kids.push_back(std::move(b));
      return n;
    }
  };

  std::shared_ptr<const Node> root_;
  std::string src_;
};

}  // namespace wassflow
