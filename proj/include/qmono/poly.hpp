#pragma once

// Sparse multivariate polynomials over a tower field.
// Terms are kept sorted in graded-lex order, leading term first.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "qmono/field.hpp"

namespace qmono {

inline constexpr int kMaxVars = 8;
using Exps = std::array<std::int32_t, kMaxVars>;

inline int total_degree(const Exps& e) {
  int s = 0;
  for (auto x : e) s += x;
  return s;
}

// graded lex: true if a > b
inline bool mono_greater(const Exps& a, const Exps& b) {
  int da = total_degree(a), db = total_degree(b);
  if (da != db) return da > db;
  return a > b;
}

struct ExpsHash {
  std::size_t operator()(const Exps& e) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto x : e) {
      h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(x));
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct Term {
  Exps e{};
  Coeff c;
  bool operator==(const Term& o) const { return e == o.e && c == o.c; }
};

class Poly {
 public:
  Poly() = default;
  Poly(Field f, int nvars) : f_(std::move(f)), n_(nvars) {
    if (nvars < 0 || nvars > kMaxVars) throw Error(ErrorCode::InvalidDescriptor, "too many variables");
  }

  static Poly constant(const Field& f, int n, const Coeff& c) {
    Poly p(f, n);
    if (!Field::is_zero_c(c)) p.t_.push_back(Term{Exps{}, c});
    return p;
  }
  static Poly constant(const Field& f, int n, const mpq_class& q) { return constant(f, n, f.scalar_c(q)); }
  static Poly var(const Field& f, int n, int i) {
    Exps e{};
    e[static_cast<std::size_t>(i)] = 1;
    return monomial(f, n, e, f.one_c());
  }
  static Poly monomial(const Field& f, int n, const Exps& e, const Coeff& c) {
    Poly p(f, n);
    if (!Field::is_zero_c(c)) p.t_.push_back(Term{e, c});
    return p;
  }
  static Poly from_terms(const Field& f, int n, std::vector<Term> terms) {
    Poly p(f, n);
    p.t_ = std::move(terms);
    p.normalize();
    return p;
  }

  const Field& field() const { return f_; }
  int nvars() const { return n_; }
  const std::vector<Term>& terms() const { return t_; }
  std::size_t size() const { return t_.size(); }
  bool is_zero() const { return t_.empty(); }
  bool is_constant() const { return t_.empty() || (t_.size() == 1 && qmono::total_degree(t_[0].e) == 0); }
  bool is_one() const { return is_constant() && !t_.empty() && Field::is_one_c(t_[0].c); }
  bool is_monomial() const { return t_.size() == 1; }
  const Term& lead() const { return t_.front(); }
  Coeff constant_term() const {
    if (!t_.empty() && qmono::total_degree(t_.back().e) == 0) return t_.back().c;
    return f_.zero_c();
  }

  int degree(int v) const {
    int d = -1;
    for (const auto& t : t_) d = std::max(d, t.e[static_cast<std::size_t>(v)]);
    return d;
  }
  int total_degree() const { return t_.empty() ? -1 : qmono::total_degree(t_.front().e); }
  bool uses_var(int v) const {
    for (const auto& t : t_)
      if (t.e[static_cast<std::size_t>(v)] != 0) return true;
    return false;
  }
  Exps min_exps() const {
    Exps m{};
    if (t_.empty()) return m;
    m = t_.front().e;
    for (const auto& t : t_)
      for (int i = 0; i < kMaxVars; ++i) m[static_cast<std::size_t>(i)] = std::min(m[static_cast<std::size_t>(i)], t.e[static_cast<std::size_t>(i)]);
    return m;
  }
  Exps max_exps() const {
    Exps m{};
    for (const auto& t : t_)
      for (int i = 0; i < kMaxVars; ++i) m[static_cast<std::size_t>(i)] = std::max(m[static_cast<std::size_t>(i)], t.e[static_cast<std::size_t>(i)]);
    return m;
  }

  bool operator==(const Poly& o) const { return n_ == o.n_ && t_ == o.t_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  Poly operator-() const {
    Poly r = *this;
    for (auto& t : r.t_) t.c = f_.neg(t.c);
    return r;
  }
  Poly operator+(const Poly& o) const { return merge(o, false); }
  Poly operator-(const Poly& o) const { return merge(o, true); }
  Poly& operator+=(const Poly& o) { return *this = merge(o, false); }
  Poly& operator-=(const Poly& o) { return *this = merge(o, true); }

  Poly operator*(const Poly& o) const {
    if (t_.empty() || o.t_.empty()) return Poly(f_, n_);
    if (o.t_.size() == 1) return mul_term(o.t_[0].e, o.t_[0].c);
    if (t_.size() == 1) return o.mul_term(t_[0].e, t_[0].c);
    std::unordered_map<Exps, Coeff, ExpsHash> acc;
    acc.reserve(t_.size() * o.t_.size());
    const bool dim1 = f_.dim() == 1;
    const bool modp = f_.characteristic() != 0;
    for (const auto& a : t_) {
      for (const auto& b : o.t_) {
        Exps e;
        for (std::size_t i = 0; i < kMaxVars; ++i) e[i] = a.e[i] + b.e[i];
        auto it = acc.find(e);
        if (dim1) {
          if (it == acc.end())
            acc.emplace(e, Coeff{a.c[0] * b.c[0]});
          else
            it->second[0] += a.c[0] * b.c[0];
        } else {
          Coeff prod = f_.mul(a.c, b.c);
          if (it == acc.end())
            acc.emplace(e, std::move(prod));
          else
            f_.add_to(it->second, prod);
        }
      }
    }
    Poly r(f_, n_);
    r.t_.reserve(acc.size());
    for (auto& kv : acc) {
      if (dim1 && modp) f_.data().reduce(kv.second[0]);
      if (!Field::is_zero_c(kv.second)) r.t_.push_back(Term{kv.first, std::move(kv.second)});
    }
    std::sort(r.t_.begin(), r.t_.end(), [](const Term& x, const Term& y) { return mono_greater(x.e, y.e); });
    return r;
  }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  Poly mul_term(const Exps& e, const Coeff& c) const {
    Poly r(f_, n_);
    if (Field::is_zero_c(c)) return r;
    r.t_.reserve(t_.size());
    const bool unit = Field::is_one_c(c);
    for (const auto& t : t_) {
      Exps ne;
      for (std::size_t i = 0; i < kMaxVars; ++i) ne[i] = t.e[i] + e[i];
      r.t_.push_back(Term{ne, unit ? t.c : f_.mul(t.c, c)});
    }
    return r;  // a monomial shift preserves the order
  }
  Poly scale(const Coeff& c) const { return mul_term(Exps{}, c); }
  Poly pow(unsigned e) const {
    Poly r = constant(f_, n_, f_.one_c()), b = *this;
    while (e) {
      if (e & 1) r = r * b;
      e >>= 1;
      if (e) b = b * b;
    }
    return r;
  }

  // monomial division, caller ensures divisibility
  Poly shift_down(const Exps& m) const {
    Poly r = *this;
    for (auto& t : r.t_)
      for (std::size_t i = 0; i < kMaxVars; ++i) t.e[i] -= m[i];
    return r;
  }

  Poly monic() const {
    if (t_.empty() || Field::is_one_c(t_[0].c)) return *this;
    return scale(f_.inv(t_[0].c));
  }

  // exact division; nullopt if b does not divide *this
  std::optional<Poly> divide(const Poly& b) const {
    if (b.is_zero()) throw Error(ErrorCode::DivisionByZero, "polynomial division by zero");
    if (t_.empty()) return Poly(f_, n_);
    if (b.t_.size() == 1) {
      const Term& bt = b.t_[0];
      Poly r(f_, n_);
      Coeff binv = f_.inv(bt.c);
      for (const auto& t : t_) {
        Exps ne;
        for (std::size_t i = 0; i < kMaxVars; ++i) {
          ne[i] = t.e[i] - bt.e[i];
          if (ne[i] < 0) return std::nullopt;
        }
        r.t_.push_back(Term{ne, f_.mul(t.c, binv)});
      }
      return r;
    }
    // quick degree rejection
    const Exps amax = max_exps(), bmax = b.max_exps();
    for (std::size_t i = 0; i < kMaxVars; ++i)
      if (bmax[i] > amax[i]) return std::nullopt;
    if (b.total_degree() > total_degree()) return std::nullopt;

    auto cmp = [](const Exps& x, const Exps& y) { return mono_greater(x, y); };
    std::map<Exps, Coeff, decltype(cmp)> rem(cmp);
    for (const auto& t : t_) rem.emplace(t.e, t.c);
    const Term& bl = b.t_.front();
    const Coeff blinv = f_.inv(bl.c);
    std::vector<Term> q;
    while (!rem.empty()) {
      auto it = rem.begin();
      Exps qe;
      for (std::size_t i = 0; i < kMaxVars; ++i) {
        qe[i] = it->first[i] - bl.e[i];
        if (qe[i] < 0) return std::nullopt;
      }
      if (qmono::total_degree(it->first) < b.total_degree()) return std::nullopt;
      Coeff qc = f_.mul(it->second, blinv);
      rem.erase(it);
      for (std::size_t k = 1; k < b.t_.size(); ++k) {
        const Term& bt = b.t_[k];
        Exps e;
        for (std::size_t i = 0; i < kMaxVars; ++i) e[i] = bt.e[i] + qe[i];
        Coeff prod = f_.mul(bt.c, qc);
        auto jt = rem.find(e);
        if (jt == rem.end()) {
          rem.emplace(e, f_.neg(prod));
        } else {
          f_.sub_to(jt->second, prod);
          if (Field::is_zero_c(jt->second)) rem.erase(jt);
        }
      }
      q.push_back(Term{qe, std::move(qc)});
    }
    Poly r(f_, n_);
    r.t_ = std::move(q);
    return r;
  }

  Poly exact_div(const Poly& b) const {
    auto q = divide(b);
    if (!q) throw Error(ErrorCode::DivisionByZero, "inexact polynomial division");
    return *q;
  }

  Coeff eval(const std::vector<Coeff>& pt) const {
    Coeff acc = f_.zero_c();
    std::vector<std::vector<Coeff>> pw(static_cast<std::size_t>(n_));
    for (const auto& t : t_) {
      Coeff m = t.c;
      for (int i = 0; i < n_; ++i) {
        int d = t.e[static_cast<std::size_t>(i)];
        if (d == 0) continue;
        auto& cache = pw[static_cast<std::size_t>(i)];
        if (cache.empty()) cache.push_back(f_.one_c());
        while (static_cast<int>(cache.size()) <= d) cache.push_back(f_.mul(cache.back(), pt[static_cast<std::size_t>(i)]));
        m = f_.mul(m, cache[static_cast<std::size_t>(d)]);
      }
      f_.add_to(acc, m);
    }
    return acc;
  }

  // substitute constants for a subset of variables
  Poly partial_eval(const std::vector<std::optional<Coeff>>& pt) const {
    std::vector<Term> out;
    out.reserve(t_.size());
    for (const auto& t : t_) {
      Term nt{t.e, t.c};
      for (int i = 0; i < n_; ++i) {
        const auto& v = pt[static_cast<std::size_t>(i)];
        if (!v || t.e[static_cast<std::size_t>(i)] == 0) continue;
        nt.c = f_.mul(nt.c, f_.pow(*v, t.e[static_cast<std::size_t>(i)]));
        nt.e[static_cast<std::size_t>(i)] = 0;
      }
      out.push_back(std::move(nt));
    }
    return from_terms(f_, n_, std::move(out));
  }

  Poly apply_aut(const FieldAut& a) const {
    if (f_.ngens() == 0 || a.is_identity()) return *this;
    std::vector<Term> out;
    for (const auto& t : t_) out.push_back(Term{t.e, a.apply_c(t.c)});
    return from_terms(f_, n_, std::move(out));
  }

  // coefficients as a polynomial in variable v
  std::vector<Poly> coeffs_in(int v) const {
    const std::size_t vi = static_cast<std::size_t>(v);
    std::vector<std::vector<Term>> parts(static_cast<std::size_t>(std::max(degree(v), 0) + 1));
    for (const auto& t : t_) {
      Term nt = t;
      nt.e[vi] = 0;
      parts[static_cast<std::size_t>(t.e[vi])].push_back(std::move(nt));
    }
    std::vector<Poly> out;
    for (auto& p : parts) {
      Poly q(f_, n_);
      q.t_ = std::move(p);
      std::sort(q.t_.begin(), q.t_.end(), [](const Term& x, const Term& y) { return mono_greater(x.e, y.e); });
      out.push_back(std::move(q));
    }
    if (t_.empty()) out.clear();
    return out;
  }
  static Poly from_coeffs(const Field& f, int n, const std::vector<Poly>& cs, int v) {
    std::vector<Term> out;
    for (std::size_t k = 0; k < cs.size(); ++k)
      for (const auto& t : cs[k].t_) {
        Term nt = t;
        nt.e[static_cast<std::size_t>(v)] += static_cast<std::int32_t>(k);
        out.push_back(std::move(nt));
      }
    return from_terms(f, n, std::move(out));
  }

 private:
  void normalize() {
    std::sort(t_.begin(), t_.end(), [](const Term& x, const Term& y) { return mono_greater(x.e, y.e); });
    std::vector<Term> out;
    out.reserve(t_.size());
    for (auto& t : t_) {
      if (!out.empty() && out.back().e == t.e)
        f_.add_to(out.back().c, t.c);
      else
        out.push_back(std::move(t));
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return Field::is_zero_c(t.c); }), out.end());
    t_ = std::move(out);
  }

  Poly merge(const Poly& o, bool subtract) const {
    Poly r(f_, std::max(n_, o.n_));
    r.t_.reserve(t_.size() + o.t_.size());
    std::size_t i = 0, j = 0;
    while (i < t_.size() || j < o.t_.size()) {
      if (j == o.t_.size() || (i < t_.size() && mono_greater(t_[i].e, o.t_[j].e))) {
        r.t_.push_back(t_[i++]);
      } else if (i == t_.size() || mono_greater(o.t_[j].e, t_[i].e)) {
        r.t_.push_back(Term{o.t_[j].e, subtract ? f_.neg(o.t_[j].c) : o.t_[j].c});
        ++j;
      } else {
        Coeff c = subtract ? f_.sub(t_[i].c, o.t_[j].c) : f_.add(t_[i].c, o.t_[j].c);
        if (!Field::is_zero_c(c)) r.t_.push_back(Term{t_[i].e, std::move(c)});
        ++i;
        ++j;
      }
    }
    return r;
  }

  Field f_;
  int n_ = 0;
  std::vector<Term> t_;
};

}  // namespace qmono
