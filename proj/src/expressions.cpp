#include "qpx/expressions.hpp"

#include <cctype>
#include <cmath>

namespace qpx {

Complex theta1(Complex z, Complex tau, int terms) {
  const Complex I(0.0, 1.0);
  const double pi = 3.14159265358979323846;
  Complex q = std::exp(I * pi * tau);
  Complex sum = 0.0;
  for (int n = 0; n < terms; ++n) {
    double sign = (n % 2 == 0) ? 1.0 : -1.0;
    Complex qpow = std::pow(q, (n + 0.5) * (n + 0.5));
    sum += sign * qpow * std::sin((2.0 * n + 1.0) * pi * z);
  }
  return 2.0 * sum;
}

namespace {

struct Num : Expr {
  Complex v;
  explicit Num(Complex c) : v(c) {}
  Complex eval(const CVector&) const override { return v; }
  bool holomorphic() const override { return true; }
};

struct Coord : Expr {
  int index;
  explicit Coord(int i) : index(i) {}
  Complex eval(const CVector& c) const override {
    if (index >= c.size()) fail(ErrorKind::Parameter, "coordinate index out of range");
    return c[index];
  }
  bool holomorphic() const override { return true; }
};

struct Binary : Expr {
  char op;
  ExprPtr a, b;
  Binary(char o, ExprPtr x, ExprPtr y) : op(o), a(std::move(x)), b(std::move(y)) {}
  Complex eval(const CVector& c) const override {
    Complex x = a->eval(c), y = b->eval(c);
    switch (op) {
      case '+': return x + y;
      case '-': return x - y;
      case '*': return x * y;
      case '/': return x / y;
    }
    fail(ErrorKind::Parameter, "bad operator");
  }
  bool holomorphic() const override {
    return a->holomorphic() && b->holomorphic() && op != '/';
  }
};

struct Neg : Expr {
  ExprPtr a;
  explicit Neg(ExprPtr x) : a(std::move(x)) {}
  Complex eval(const CVector& c) const override { return -a->eval(c); }
  bool holomorphic() const override { return a->holomorphic(); }
};

struct PowInt : Expr {
  ExprPtr a;
  int n;
  PowInt(ExprPtr x, int p) : a(std::move(x)), n(p) {}
  Complex eval(const CVector& c) const override {
    Complex x = a->eval(c), r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }
  bool holomorphic() const override { return a->holomorphic(); }
};

enum class Fn { Exp, Re, Im, Abs2, Log1pAbs2, Log, Theta1 };

struct Call : Expr {
  Fn fn;
  ExprPtr a;
  Complex tau;
  Call(Fn f, ExprPtr x, Complex t) : fn(f), a(std::move(x)), tau(t) {}
  Complex eval(const CVector& c) const override {
    Complex x = a->eval(c);
    switch (fn) {
      case Fn::Exp: return std::exp(x);
      case Fn::Re: return Complex(x.real(), 0.0);
      case Fn::Im: return Complex(x.imag(), 0.0);
      case Fn::Abs2: return Complex(std::norm(x), 0.0);
      case Fn::Log1pAbs2: return Complex(std::log1p(std::norm(x)), 0.0);
      case Fn::Log: {
        if (x.imag() != 0.0 || x.real() <= 0.0)
          fail(ErrorKind::Parameter, "log expects a positive real argument");
        return Complex(std::log(x.real()), 0.0);
      }
      case Fn::Theta1: return theta1(x, tau);
    }
    fail(ErrorKind::Parameter, "bad function");
  }
  bool holomorphic() const override {
    return (fn == Fn::Exp || fn == Fn::Theta1) && a->holomorphic();
  }
};

class Parser {
public:
  Parser(const std::string& s, const ExprContext& ctx) : s_(s), ctx_(ctx) {}

  ExprPtr parse() {
    auto e = expr();
    skip_ws();
    if (pos_ != s_.size())
      fail(ErrorKind::Config, "trailing characters in expression: '" + s_.substr(pos_) + "'");
    return e;
  }

private:
  const std::string& s_;
  const ExprContext& ctx_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  ExprPtr expr() {
    auto a = term();
    while (true) {
      if (eat('+')) a = std::make_shared<Binary>('+', a, term());
      else if (eat('-')) a = std::make_shared<Binary>('-', a, term());
      else return a;
    }
  }
  ExprPtr term() {
    auto a = factor();
    while (true) {
      if (eat('*')) a = std::make_shared<Binary>('*', a, factor());
      else if (eat('/')) a = std::make_shared<Binary>('/', a, factor());
      else return a;
    }
  }
  ExprPtr factor() {
    auto a = unary();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
      if (pos_ == start || neg)
        fail(ErrorKind::Config, "exponent must be a nonnegative integer");
      int n = std::stoi(s_.substr(start, pos_ - start));
      return std::make_shared<PowInt>(a, n);
    }
    return a;
  }
  ExprPtr unary() {
    if (eat('-')) return std::make_shared<Neg>(unary());
    return atom();
  }
  ExprPtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail(ErrorKind::Config, "unexpected end of expression");
    char c = s_[pos_];
    if (std::isdigit((unsigned char)c) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!eat(')')) fail(ErrorKind::Config, "missing ')'");
      return e;
    }
    if (std::isalpha((unsigned char)c) || c == '_') return identifier();
    fail(ErrorKind::Config, std::string("unexpected character '") + c + "' in expression");
  }
  ExprPtr number() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit((unsigned char)s_[pos_]) || s_[pos_] == '.' ||
            s_[pos_] == 'e' || s_[pos_] == 'E' ||
            ((s_[pos_] == '+' || s_[pos_] == '-') &&
             (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
      ++pos_;
    return std::make_shared<Num>(Complex(std::stod(s_.substr(start, pos_ - start)), 0.0));
  }
  ExprPtr identifier() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    if (name == "i") return std::make_shared<Num>(Complex(0.0, 1.0));
    if (peek() == '(') {
      ++pos_;
      auto arg = expr();
      if (!eat(')')) fail(ErrorKind::Config, "missing ')' after " + name);
      Fn fn;
      if (name == "exp") fn = Fn::Exp;
      else if (name == "re") fn = Fn::Re;
      else if (name == "im") fn = Fn::Im;
      else if (name == "abs2") fn = Fn::Abs2;
      else if (name == "log1p_abs2") fn = Fn::Log1pAbs2;
      else if (name == "log") fn = Fn::Log;
      else if (name == "theta1") fn = Fn::Theta1;
      else fail(ErrorKind::Config, "unknown function '" + name + "'");
      return std::make_shared<Call>(fn, arg, ctx_.tau);
    }
    for (size_t k = 0; k < ctx_.coord_names.size(); ++k)
      if (ctx_.coord_names[k] == name) return std::make_shared<Coord>((int)k);
    fail(ErrorKind::Config, "unknown identifier '" + name + "'");
  }
};

} // namespace

ExprPtr parse_expression(const std::string& text, const ExprContext& ctx) {
  return Parser(text, ctx).parse();
}

} // namespace qpx
