#pragma once

// Text form of rational functions: a small recursive-descent parser and a
// printer whose output parses back to the same function.

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "qmono/ratfunc.hpp"

namespace qmono {

struct ExprContext {
  Field field;
  std::vector<std::string> vars;
  std::map<std::string, RatFunc> defs;

  int nvars() const { return static_cast<int>(vars.size()); }
};

namespace detail {

class ExprParser {
 public:
  ExprParser(const std::string& s, const ExprContext& ctx) : s_(s), ctx_(ctx) {}

  RatFunc parse() {
    RatFunc r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  RatFunc constant(const mpq_class& q) const { return RatFunc::constant(ctx_.field, ctx_.nvars(), q); }

  RatFunc expr() {
    RatFunc acc = term();
    while (true) {
      if (eat('+'))
        acc = acc + term();
      else if (eat('-'))
        acc = acc - term();
      else
        return acc;
    }
  }
  RatFunc term() {
    RatFunc acc = unary();
    while (true) {
      if (eat('*')) {
        acc = acc * unary();
      } else if (eat('/')) {
        RatFunc d = unary();
        if (d.is_zero()) fail("division by zero");
        acc = acc / d;
      } else {
        return acc;
      }
    }
  }
  RatFunc unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  RatFunc power() {
    RatFunc base = atom();
    if (!eat('^')) return base;
    bool paren = eat('(');
    bool neg = false;
    if (eat('-'))
      neg = true;
    else
      eat('+');
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer exponent");
    long e = std::stol(s_.substr(start, pos_ - start));
    if (paren && !eat(')')) fail("expected ')'");
    if (neg && base.is_zero()) fail("negative power of zero");
    return base.pow(neg ? -e : e);
  }
  RatFunc atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      RatFunc r = expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return constant(mpq_class(s_.substr(start, pos_ - start)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (auto it = ctx_.defs.find(name); it != ctx_.defs.end()) return it->second;
      for (int i = 0; i < ctx_.nvars(); ++i)
        if (ctx_.vars[static_cast<std::size_t>(i)] == name) return RatFunc::var(ctx_.field, ctx_.nvars(), i);
      if (auto g = ctx_.field.label_index(name)) return RatFunc::constant(ctx_.field, ctx_.nvars(), ctx_.field.gen_c(*g));
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const ExprContext& ctx_;
  std::size_t pos_ = 0;
};

inline std::string monomial_string(const Exps& e, const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += names[i];
    if (e[i] != 1) s += "^" + std::to_string(e[i]);
  }
  return s;
}

}  // namespace detail

inline RatFunc parse_expr(const std::string& text, const ExprContext& ctx) {
  return detail::ExprParser(text, ctx).parse();
}

inline std::string to_string(const Poly& p, const std::vector<std::string>& names) {
  if (p.is_zero()) return "0";
  const Field& f = p.field();
  std::string out;
  for (const auto& t : p.terms()) {
    std::string mono = detail::monomial_string(t.e, names);
    int nz = 0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < t.c.size(); ++i)
      if (t.c[i] != 0) {
        ++nz;
        idx = i;
      }
    bool neg = false;
    std::string coef;
    if (nz == 1) {
      mpq_class v = t.c[idx];
      if (v < 0) {
        neg = true;
        v = -v;
      }
      Coeff unit = f.zero_c();
      unit[idx] = 1;
      std::string gen = idx == 0 ? "" : f.coeff_to_string(unit);
      if (idx == 0)
        coef = (v == 1 && !mono.empty()) ? "" : v.get_str();
      else
        coef = v == 1 ? gen : v.get_str() + "*" + gen;
    } else {
      coef = "(" + f.coeff_to_string(t.c) + ")";
    }
    std::string body = coef.empty() ? mono : (mono.empty() ? coef : coef + "*" + mono);
    if (out.empty())
      out = (neg ? "-" : "") + body;
    else
      out += (neg ? " - " : " + ") + body;
  }
  return out;
}

inline std::string to_string(const RatFunc& r, const std::vector<std::string>& names) {
  if (r.den().is_one()) return to_string(r.num(), names);
  std::string n = to_string(r.num(), names), d = to_string(r.den(), names);
  if (r.num().size() > 1 || n.find('(') != std::string::npos) n = "(" + n + ")";
  if (d.find_first_of("*/+-( ") != std::string::npos) d = "(" + d + ")";
  return n + "/" + d;
}

}  // namespace qmono
