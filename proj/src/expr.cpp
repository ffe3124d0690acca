#include "perihom/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "perihom/errors.hpp"

namespace perihom {

struct Expression::Node {
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call } kind;
  double number = 0.0;
  int slot = -1;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(std::span<const double> x) const {
    switch (kind) {
      case Kind::Number: return number;
      case Kind::Variable: return x[slot];
      case Kind::Neg: return -lhs->eval(x);
      case Kind::Add: return lhs->eval(x) + rhs->eval(x);
      case Kind::Sub: return lhs->eval(x) - rhs->eval(x);
      case Kind::Mul: return lhs->eval(x) * rhs->eval(x);
      case Kind::Div: return lhs->eval(x) / rhs->eval(x);
      case Kind::Pow: return std::pow(lhs->eval(x), rhs->eval(x));
      case Kind::Call: return fn(lhs->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

double f_sin(double v) { return std::sin(v); }
double f_cos(double v) { return std::cos(v); }
double f_tan(double v) { return std::tan(v); }
double f_exp(double v) { return std::exp(v); }
double f_log(double v) { return std::log(v); }
double f_sqrt(double v) { return std::sqrt(v); }
double f_abs(double v) { return std::fabs(v); }
double f_floor(double v) { return std::floor(v); }

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& vars,
         const std::map<std::string, double>& consts)
      : s_(s), vars_(vars), consts_(consts) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("expression '" + s_ + "': " + msg + " at offset " +
                          std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Kind::Add, n, term());
      else if (accept('-')) n = make(Kind::Sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Kind::Mul, n, unary());
      else if (accept('/')) n = make(Kind::Div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Number;
      n->number = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (accept('(')) {
        static const std::map<std::string, double (*)(double)> fns = {
            {"sin", f_sin}, {"cos", f_cos},   {"tan", f_tan}, {"exp", f_exp},
            {"log", f_log}, {"sqrt", f_sqrt}, {"abs", f_abs}, {"floor", f_floor}};
        auto it = fns.find(name);
        if (it == fns.end()) fail("unknown function '" + name + "'");
        NodePtr arg = expr();
        if (!accept(')')) fail("expected ')'");
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::Call;
        n->fn = it->second;
        n->lhs = arg;
        return n;
      }
      for (std::size_t k = 0; k < vars_.size(); ++k) {
        if (vars_[k] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::Variable;
          n->slot = static_cast<int>(k);
          return n;
        }
      }
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Number;
      if (name == "pi") {
        n->number = std::numbers::pi;
        return n;
      }
      auto it = consts_.find(name);
      if (it == consts_.end()) fail("unknown name '" + name + "'");
      n->number = it->second;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& consts_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& source, const std::vector<std::string>& variables,
                       const std::map<std::string, double>& constants)
    : source_(source) {
  root_ = Parser(source_, variables, constants).parse();
}

double Expression::evaluate(std::span<const double> values) const {
  return root_->eval(values);
}

}  // namespace perihom
