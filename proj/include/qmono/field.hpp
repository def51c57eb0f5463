#pragma once

// Tower fields: Q or F_p with at most two quadratic adjunctions.
// Elements are coordinate vectors on the basis {1, g0, g1, g0*g1}.

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmono/errors.hpp"

namespace qmono {

using json = nlohmann::json;

inline bool is_prime_u64(std::uint64_t p) {
  if (p < 2) return false;
  mpz_class z(std::to_string(p));
  return mpz_probab_prime_p(z.get_mpz_t(), 40) > 0;
}

enum class AdjKind { SquareRoot, ArtinSchreier };

struct Adjunction {
  AdjKind kind = AdjKind::SquareRoot;
  mpq_class a;
  std::string label;
  bool operator==(const Adjunction& o) const {
    return kind == o.kind && a == o.a && label == o.label;
  }
};

struct FieldDescriptor {
  std::uint64_t p = 0;  // 0 means Q
  std::vector<Adjunction> adjoined;
  bool operator==(const FieldDescriptor& o) const { return p == o.p && adjoined == o.adjoined; }
  bool operator!=(const FieldDescriptor& o) const { return !(*this == o); }

  std::string base_name() const { return p == 0 ? "Q" : "F" + std::to_string(p); }
  std::string to_string() const {
    std::string s = base_name();
    if (adjoined.empty()) return s;
    s += "(";
    for (std::size_t i = 0; i < adjoined.size(); ++i) {
      if (i) s += ", ";
      const auto& a = adjoined[i];
      s += a.label + (a.kind == AdjKind::SquareRoot ? "=sqrt(" : "=AS(") + a.a.get_str() + ")";
    }
    return s + ")";
  }
};

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

inline mpq_class parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (!s.empty() && s[0] == '+') s = s.substr(1);
  mpq_class q;
  if (s.empty() || q.set_str(s, 10) != 0 || q.get_den() == 0)
    throw Error(ErrorCode::ParseError, "not a rational number: '" + text + "'");
  q.canonicalize();
  return q;
}

inline json rational_to_json(const mpq_class& q) { return q.get_str(); }

inline mpq_class rational_from_json(const json& j) {
  if (j.is_number_integer()) return mpq_class(std::to_string(j.get<long long>()));
  if (j.is_string()) return parse_rational(j.get<std::string>());
  throw Error(ErrorCode::ParseError, "expected rational, got " + j.dump());
}

inline json descriptor_to_json(const FieldDescriptor& d) {
  json j;
  if (d.p == 0)
    j["base"] = "Q";
  else
    j["base"] = json{{"Fp", d.p}};
  if (!d.adjoined.empty()) {
    json arr = json::array();
    for (const auto& a : d.adjoined) {
      json e;
      e[a.kind == AdjKind::SquareRoot ? "sqrt" : "as"] = rational_to_json(a.a);
      e["label"] = a.label;
      arr.push_back(e);
    }
    j["adjoined"] = arr;
  }
  return j;
}

inline FieldDescriptor descriptor_from_json(const json& j) {
  FieldDescriptor d;
  if (!j.is_object() || !j.contains("base"))
    throw Error(ErrorCode::InvalidDescriptor, "field descriptor needs 'base'");
  const json& b = j.at("base");
  if (b.is_string() && b.get<std::string>() == "Q") {
    d.p = 0;
  } else if (b.is_object() && b.contains("Fp") && b.at("Fp").is_number_unsigned()) {
    d.p = b.at("Fp").get<std::uint64_t>();
  } else {
    throw Error(ErrorCode::InvalidDescriptor, "unknown base " + b.dump());
  }
  if (j.contains("adjoined")) {
    for (const auto& e : j.at("adjoined")) {
      Adjunction a;
      if (e.contains("sqrt")) {
        a.kind = AdjKind::SquareRoot;
        a.a = rational_from_json(e.at("sqrt"));
      } else if (e.contains("as")) {
        a.kind = AdjKind::ArtinSchreier;
        a.a = rational_from_json(e.at("as"));
      } else {
        throw Error(ErrorCode::InvalidDescriptor, "adjunction needs 'sqrt' or 'as'");
      }
      a.label = e.value("label", d.adjoined.empty() ? std::string("alpha") : std::string("beta"));
      d.adjoined.push_back(a);
    }
  }
  return d;
}

// Coordinates of an element, one base scalar per basis vector.
using Coeff = std::vector<mpq_class>;

namespace detail {

struct FieldData {
  FieldDescriptor desc;
  std::uint64_t p = 0;
  mpz_class pz;
  int ngens = 0;
  int dim = 1;
  mpq_class a[2];
  int t[2] = {0, 0};  // g_i^2 = a_i + t_i g_i

  void reduce(mpq_class& x) const {
    if (p == 0) return;
    if (x.get_den() == 1) {
      if (x.get_num() >= 0 && x.get_num() < pz) return;
      mpz_class r;
      mpz_fdiv_r(r.get_mpz_t(), x.get_num().get_mpz_t(), pz.get_mpz_t());
      x = r;
      return;
    }
    mpz_class n, dn, inv;
    mpz_fdiv_r(n.get_mpz_t(), x.get_num().get_mpz_t(), pz.get_mpz_t());
    mpz_fdiv_r(dn.get_mpz_t(), x.get_den().get_mpz_t(), pz.get_mpz_t());
    if (dn == 0) throw Error(ErrorCode::DivisionByZero, "denominator divisible by characteristic");
    mpz_invert(inv.get_mpz_t(), dn.get_mpz_t(), pz.get_mpz_t());
    n *= inv;
    mpz_fdiv_r(n.get_mpz_t(), n.get_mpz_t(), pz.get_mpz_t());
    x = n;
  }

  mpq_class base_inv(const mpq_class& x) const {
    if (x == 0) throw Error(ErrorCode::DivisionByZero, "inverse of zero");
    if (p == 0) return 1 / x;
    mpz_class inv, n = x.get_num();
    mpz_invert(inv.get_mpz_t(), n.get_mpz_t(), pz.get_mpz_t());
    return mpq_class(inv);
  }
};

}  // namespace detail

class Field;
class FieldElem;
class FieldAut;

class Field {
 public:
  Field() : Field(FieldDescriptor{}) {}
  explicit Field(const FieldDescriptor& d);

  static Field rationals() { return Field(FieldDescriptor{}); }
  static Field prime(std::uint64_t p) {
    FieldDescriptor d;
    d.p = p;
    return Field(d);
  }

  const FieldDescriptor& descriptor() const { return d_->desc; }
  std::uint64_t characteristic() const { return d_->p; }
  int dim() const { return d_->dim; }
  int ngens() const { return d_->ngens; }
  bool is_finite() const { return d_->p != 0; }
  const detail::FieldData& data() const { return *d_; }
  bool same(const Field& o) const { return d_ == o.d_ || d_->desc == o.d_->desc; }
  bool operator==(const Field& o) const { return same(o); }

  // cardinality for finite fields (p^dim), 0 otherwise
  mpz_class cardinality() const {
    if (!is_finite()) return 0;
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), d_->pz.get_mpz_t(), d_->dim);
    return r;
  }

  // raw coordinate arithmetic
  Coeff zero_c() const { return Coeff(static_cast<std::size_t>(d_->dim)); }
  Coeff one_c() const {
    Coeff c = zero_c();
    c[0] = 1;
    return c;
  }
  Coeff scalar_c(const mpq_class& q) const {
    Coeff c = zero_c();
    c[0] = q;
    d_->reduce(c[0]);
    return c;
  }
  Coeff gen_c(int i) const {
    Coeff c = zero_c();
    c[static_cast<std::size_t>(1) << i] = 1;
    return c;
  }
  static bool is_zero_c(const Coeff& c) {
    for (const auto& x : c)
      if (x != 0) return false;
    return true;
  }
  static bool is_one_c(const Coeff& c) {
    if (c[0] != 1) return false;
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] != 0) return false;
    return true;
  }
  bool is_base_c(const Coeff& c) const {
    for (std::size_t i = 1; i < c.size(); ++i)
      if (c[i] != 0) return false;
    return true;
  }
  void add_to(Coeff& x, const Coeff& y) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += y[i];
      if (d_->p) d_->reduce(x[i]);
    }
  }
  void sub_to(Coeff& x, const Coeff& y) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] -= y[i];
      if (d_->p) d_->reduce(x[i]);
    }
  }
  Coeff neg(const Coeff& x) const {
    Coeff r = x;
    for (auto& v : r) {
      v = -v;
      if (d_->p) d_->reduce(v);
    }
    return r;
  }
  Coeff add(const Coeff& x, const Coeff& y) const {
    Coeff r = x;
    add_to(r, y);
    return r;
  }
  Coeff sub(const Coeff& x, const Coeff& y) const {
    Coeff r = x;
    sub_to(r, y);
    return r;
  }
  Coeff scale(const Coeff& x, const mpq_class& s) const {
    Coeff r = x;
    for (auto& v : r) {
      v *= s;
      if (d_->p) d_->reduce(v);
    }
    return r;
  }
  Coeff mul(const Coeff& x, const Coeff& y) const;
  Coeff inv(const Coeff& x) const;
  Coeff div(const Coeff& x, const Coeff& y) const { return mul(x, inv(y)); }
  Coeff pow(const Coeff& x, long e) const;

  // conjugation of generator i: g_i -> t_i - g_i
  Coeff conj_c(const Coeff& x, int gen) const;
  std::optional<Coeff> sqrt_c(const Coeff& x) const { return sqrt_level(x, d_->ngens); }
  bool is_square_c(const Coeff& x) const { return sqrt_c(x).has_value(); }

  FieldElem zero() const;
  FieldElem one() const;
  FieldElem from_rational(const mpq_class& q) const;
  FieldElem gen(int i) const;
  FieldElem elem(Coeff c) const;
  std::optional<int> label_index(const std::string& label) const {
    for (int i = 0; i < d_->ngens; ++i)
      if (d_->desc.adjoined[static_cast<std::size_t>(i)].label == label) return i;
    return std::nullopt;
  }

  std::vector<FieldAut> galois_group() const;
  std::vector<FieldElem> elements() const;  // finite fields of modest size only

  std::string coeff_to_string(const Coeff& c) const;

 private:
  std::optional<Coeff> sqrt_base(const mpq_class& x) const;
  std::optional<Coeff> sqrt_level(const Coeff& x, int level) const;
  std::shared_ptr<const detail::FieldData> d_;
  friend class FieldElem;
};

class FieldElem {
 public:
  FieldElem() : f_(Field::rationals()), c_(f_.zero_c()) {}
  FieldElem(Field f, Coeff c) : f_(std::move(f)), c_(std::move(c)) {}

  const Field& field() const { return f_; }
  const Coeff& coords() const { return c_; }
  bool is_zero() const { return Field::is_zero_c(c_); }
  bool is_one() const { return Field::is_one_c(c_); }
  bool in_base() const { return f_.is_base_c(c_); }

  FieldElem operator+(const FieldElem& o) const { return {f_, f_.add(c_, o.c_)}; }
  FieldElem operator-(const FieldElem& o) const { return {f_, f_.sub(c_, o.c_)}; }
  FieldElem operator-() const { return {f_, f_.neg(c_)}; }
  FieldElem operator*(const FieldElem& o) const { return {f_, f_.mul(c_, o.c_)}; }
  FieldElem operator/(const FieldElem& o) const { return {f_, f_.div(c_, o.c_)}; }
  FieldElem& operator+=(const FieldElem& o) { f_.add_to(c_, o.c_); return *this; }
  FieldElem& operator-=(const FieldElem& o) { f_.sub_to(c_, o.c_); return *this; }
  FieldElem& operator*=(const FieldElem& o) { c_ = f_.mul(c_, o.c_); return *this; }
  FieldElem inv() const { return {f_, f_.inv(c_)}; }
  FieldElem pow(long e) const { return {f_, f_.pow(c_, e)}; }
  bool operator==(const FieldElem& o) const { return c_ == o.c_; }
  bool operator!=(const FieldElem& o) const { return !(*this == o); }
  bool operator<(const FieldElem& o) const { return c_ < o.c_; }

  std::optional<FieldElem> sqrt() const {
    auto r = f_.sqrt_c(c_);
    if (!r) return std::nullopt;
    return FieldElem(f_, *r);
  }
  bool is_square() const { return f_.is_square_c(c_); }
  std::string to_string() const { return f_.coeff_to_string(c_); }

 private:
  Field f_;
  Coeff c_;
};

// A field automorphism over the base, given by images of the generators.
class FieldAut {
 public:
  FieldAut() = default;
  FieldAut(Field f, std::vector<Coeff> images) : f_(std::move(f)), images_(std::move(images)) {
    build_matrix();
  }
  static FieldAut identity(const Field& f) {
    std::vector<Coeff> im;
    for (int i = 0; i < f.ngens(); ++i) im.push_back(f.gen_c(i));
    return FieldAut(f, im);
  }

  const Field& field() const { return f_; }
  const std::vector<Coeff>& images() const { return images_; }

  Coeff apply_c(const Coeff& x) const {
    if (images_.empty()) return x;
    const auto n = x.size();
    Coeff r(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] == 0) continue;
      for (std::size_t i = 0; i < n; ++i)
        if (m_[i][j] != 0) r[i] += m_[i][j] * x[j];
    }
    if (f_.characteristic())
      for (auto& v : r) f_.data().reduce(v);
    return r;
  }
  FieldElem apply(const FieldElem& x) const { return FieldElem(f_, apply_c(x.coords())); }

  // (this o other)(x) = this(other(x))
  FieldAut compose(const FieldAut& other) const {
    std::vector<Coeff> im;
    for (const auto& g : other.images_) im.push_back(apply_c(g));
    return FieldAut(f_, im);
  }
  bool is_identity() const {
    for (int i = 0; i < f_.ngens(); ++i)
      if (images_[static_cast<std::size_t>(i)] != f_.gen_c(i)) return false;
    return true;
  }
  // images satisfy the defining relations and the map is bijective
  bool is_valid() const {
    if (static_cast<int>(images_.size()) != f_.ngens()) return false;
    const auto& d = f_.data();
    for (int i = 0; i < f_.ngens(); ++i) {
      const Coeff& g = images_[static_cast<std::size_t>(i)];
      Coeff lhs = f_.mul(g, g);
      Coeff rhs = f_.add(f_.scalar_c(d.a[i]), f_.scale(g, d.t[i]));
      if (lhs != rhs) return false;
    }
    for (const auto& a : f_.galois_group())
      if (a.images_ == images_) return true;
    return false;
  }
  bool operator==(const FieldAut& o) const { return images_ == o.images_; }
  bool operator!=(const FieldAut& o) const { return !(*this == o); }
  bool operator<(const FieldAut& o) const { return images_ < o.images_; }

 private:
  void build_matrix();
  Field f_;
  std::vector<Coeff> images_;
  std::vector<std::vector<mpq_class>> m_;
};

// ---- implementation ----

inline Field::Field(const FieldDescriptor& desc) {
  auto d = std::make_shared<detail::FieldData>();
  d->desc = desc;
  d->p = desc.p;
  if (desc.p != 0) {
    if (!is_prime_u64(desc.p))
      throw Error(ErrorCode::NonPrimeModulus, std::to_string(desc.p) + " is not prime");
    d->pz = mpz_class(std::to_string(desc.p));
  }
  if (desc.adjoined.size() > 2)
    throw Error(ErrorCode::InvalidDescriptor, "at most two adjunctions are supported");
  for (std::size_t i = 0; i < desc.adjoined.size(); ++i) {
    const auto& a = desc.adjoined[i];
    if (!is_identifier(a.label))
      throw Error(ErrorCode::InvalidDescriptor, "bad label '" + a.label + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (desc.adjoined[j].label == a.label)
        throw Error(ErrorCode::InvalidDescriptor, "duplicate label '" + a.label + "'");
    if (a.kind == AdjKind::ArtinSchreier && desc.p != 2)
      throw Error(ErrorCode::InvalidDescriptor, "Artin-Schreier adjunction requires characteristic 2");
    if (a.kind == AdjKind::SquareRoot && desc.p == 2)
      throw Error(ErrorCode::InvalidDescriptor, "square roots are inseparable in characteristic 2");
  }
  // build incrementally so redundancy is tested against the field below
  for (std::size_t i = 0; i < desc.adjoined.size(); ++i) {
    const auto& a = desc.adjoined[i];
    mpq_class av = a.a;
    d->reduce(av);
    Field below;
    below.d_ = std::make_shared<detail::FieldData>(*d);
    if (a.kind == AdjKind::SquareRoot) {
      if (below.is_square_c(below.scalar_c(av)))
        throw Error(ErrorCode::RedundantAdjunction, "sqrt(" + a.a.get_str() + ") already in field");
    } else {
      Coeff target = below.scalar_c(av);
      for (const auto& e : below.elements()) {
        Coeff v = below.add(below.mul(e.coords(), e.coords()), e.coords());
        if (v == target)
          throw Error(ErrorCode::RedundantAdjunction,
                      "x^2+x=" + a.a.get_str() + " already has a root");
      }
    }
    d->a[i] = av;
    d->t[i] = a.kind == AdjKind::SquareRoot ? 0 : 1;  // char 2: g^2 = g + a
    d->ngens = static_cast<int>(i) + 1;
    d->dim = 1 << d->ngens;
  }
  d_ = d;
}

inline Coeff Field::mul(const Coeff& x, const Coeff& y) const {
  const auto& d = *d_;
  if (d.dim == 1) {
    Coeff r{x[0] * y[0]};
    if (d.p) d.reduce(r[0]);
    return r;
  }
  if (d.dim == 2) {
    // (x0 + x1 g)(y0 + y1 g), g^2 = a + t g
    mpq_class hh = x[1] * y[1];
    Coeff r{x[0] * y[0] + hh * d.a[0], x[0] * y[1] + x[1] * y[0] + hh * d.t[0]};
    if (d.p) {
      d.reduce(r[0]);
      d.reduce(r[1]);
    }
    return r;
  }
  mpq_class grid[3][3];
  for (int i = 0; i < 4; ++i) {
    if (x[static_cast<std::size_t>(i)] == 0) continue;
    for (int j = 0; j < 4; ++j) {
      if (y[static_cast<std::size_t>(j)] == 0) continue;
      grid[(i & 1) + (j & 1)][(i >> 1) + (j >> 1)] +=
          x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (grid[2][k] == 0) continue;
    grid[0][k] += d.a[0] * grid[2][k];
    grid[1][k] += d.t[0] * grid[2][k];
  }
  for (int k = 0; k < 2; ++k) {
    if (grid[k][2] == 0) continue;
    grid[k][0] += d.a[1] * grid[k][2];
    grid[k][1] += d.t[1] * grid[k][2];
  }
  Coeff r{grid[0][0], grid[1][0], grid[0][1], grid[1][1]};
  if (d.p)
    for (auto& v : r) d.reduce(v);
  return r;
}

inline Coeff Field::conj_c(const Coeff& x, int gen) const {
  // x = A + B g  ->  A + B (t - g)
  const auto& d = *d_;
  Coeff r = x;
  const std::size_t bit = static_cast<std::size_t>(1) << gen;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(i & bit)) continue;
    if (x[i] == 0) continue;
    r[i] = -x[i];
    if (d.t[gen]) r[i ^ bit] += d.t[gen] * x[i];
  }
  if (d.p)
    for (auto& v : r) d.reduce(v);
  return r;
}

inline Coeff Field::inv(const Coeff& x) const {
  const auto& d = *d_;
  if (is_zero_c(x)) throw Error(ErrorCode::DivisionByZero, "inverse of zero");
  if (d.dim == 1) return Coeff{d.base_inv(x[0])};
  // product of nontrivial conjugates, then divide by the norm
  Coeff prod = one_c();
  for (int mask = 1; mask < d.dim; ++mask) {
    Coeff c = x;
    for (int g = 0; g < d.ngens; ++g)
      if (mask & (1 << g)) c = conj_c(c, g);
    prod = mul(prod, c);
  }
  Coeff n = mul(x, prod);
  mpq_class ninv = d.base_inv(n[0]);
  return scale(prod, ninv);
}

inline Coeff Field::pow(const Coeff& x, long e) const {
  if (e < 0) return pow(inv(x), -e);
  Coeff r = one_c(), b = x;
  while (e) {
    if (e & 1) r = mul(r, b);
    e >>= 1;
    if (e) b = mul(b, b);
  }
  return r;
}

inline std::optional<Coeff> Field::sqrt_base(const mpq_class& x) const {
  const auto& d = *d_;
  if (x == 0) return zero_c();
  if (d.p == 0) {
    if (x < 0) return std::nullopt;
    if (!mpz_perfect_square_p(x.get_num().get_mpz_t()) || !mpz_perfect_square_p(x.get_den().get_mpz_t()))
      return std::nullopt;
    mpz_class n, dd;
    mpz_sqrt(n.get_mpz_t(), x.get_num().get_mpz_t());
    mpz_sqrt(dd.get_mpz_t(), x.get_den().get_mpz_t());
    return scalar_c(mpq_class(n, dd));
  }
  const mpz_class& p = d.pz;
  mpz_class a = x.get_num();
  if (d.p == 2) return scalar_c(mpq_class(a));
  if (mpz_legendre(a.get_mpz_t(), p.get_mpz_t()) != 1) return std::nullopt;
  // Tonelli-Shanks
  mpz_class q = p - 1;
  unsigned long s = 0;
  while (mpz_even_p(q.get_mpz_t())) {
    q /= 2;
    ++s;
  }
  mpz_class z = 2;
  while (mpz_legendre(z.get_mpz_t(), p.get_mpz_t()) != -1) ++z;
  mpz_class c, t, r, e;
  mpz_powm(c.get_mpz_t(), z.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  mpz_powm(t.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  e = (q + 1) / 2;
  mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
  unsigned long mm = s;
  while (t != 1) {
    unsigned long i = 0;
    mpz_class tt = t;
    while (tt != 1) {
      tt = (tt * tt) % p;
      ++i;
    }
    mpz_class b = c;
    for (unsigned long k = 0; k + i + 1 < mm; ++k) b = (b * b) % p;
    mm = i;
    c = (b * b) % p;
    t = (t * c) % p;
    r = (r * b) % p;
  }
  return scalar_c(mpq_class(r));
}

inline std::optional<Coeff> Field::sqrt_level(const Coeff& x, int level) const {
  const auto& d = *d_;
  if (level == 0) return sqrt_base(x[0]);
  const int g = level - 1;
  const std::size_t bit = static_cast<std::size_t>(1) << g;
  Coeff c0 = zero_c(), c1 = zero_c();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i & bit)
      c1[i ^ bit] = x[i];
    else
      c0[i] = x[i];
  }
  Coeff gc = gen_c(g);
  auto assemble = [&](const Coeff& u, const Coeff& v) { return add(u, mul(v, gc)); };
  if (d.t[g] != 0) {
    // char 2, g^2 = g + a: (u + v g)^2 = (u^2 + a v^2) + v^2 g
    auto v = sqrt_level(c1, g);
    if (!v) return std::nullopt;
    auto u = sqrt_level(add(c0, scale(c1, d.a[g])), g);
    if (!u) return std::nullopt;
    return assemble(*u, *v);
  }
  Coeff a = scalar_c(d.a[g]);
  if (is_zero_c(c1)) {
    if (auto u = sqrt_level(c0, g)) return assemble(*u, zero_c());
    if (auto v = sqrt_level(div(c0, a), g)) return assemble(zero_c(), *v);
    return std::nullopt;
  }
  // u^2 + a v^2 = c0, 2uv = c1
  Coeff norm = sub(mul(c0, c0), mul(a, mul(c1, c1)));
  auto r = sqrt_level(norm, g);
  if (!r) return std::nullopt;
  Coeff half = scalar_c(mpq_class(1, 2));
  for (int sgn : {1, -1}) {
    Coeff u2 = mul(add(c0, scale(*r, sgn)), half);
    if (is_zero_c(u2)) continue;
    if (auto u = sqrt_level(u2, g)) {
      Coeff v = div(c1, scale(*u, 2));
      return assemble(*u, v);
    }
  }
  return std::nullopt;
}

inline FieldElem Field::zero() const { return FieldElem(*this, zero_c()); }
inline FieldElem Field::one() const { return FieldElem(*this, one_c()); }
inline FieldElem Field::from_rational(const mpq_class& q) const { return FieldElem(*this, scalar_c(q)); }
inline FieldElem Field::gen(int i) const { return FieldElem(*this, gen_c(i)); }
inline FieldElem Field::elem(Coeff c) const {
  if (d_->p)
    for (auto& v : c) d_->reduce(v);
  return FieldElem(*this, std::move(c));
}

inline std::vector<FieldAut> Field::galois_group() const {
  std::vector<FieldAut> out;
  for (int mask = 0; mask < d_->dim; ++mask) {
    std::vector<Coeff> im;
    for (int g = 0; g < d_->ngens; ++g) {
      Coeff c = gen_c(g);
      if (mask & (1 << g)) c = conj_c(c, g);
      im.push_back(c);
    }
    out.emplace_back(*this, im);
  }
  return out;
}

inline std::vector<FieldElem> Field::elements() const {
  if (!is_finite()) throw Error(ErrorCode::InvalidDescriptor, "cannot enumerate an infinite field");
  mpz_class card = cardinality();
  if (card > 1000000) throw Error(ErrorCode::CapExceeded, "field too large to enumerate");
  std::vector<FieldElem> out;
  const unsigned long total = card.get_ui();
  const auto p = d_->p;
  for (unsigned long idx = 0; idx < total; ++idx) {
    Coeff c = zero_c();
    unsigned long r = idx;
    for (auto& v : c) {
      v = static_cast<unsigned long>(r % p);
      r /= p;
    }
    out.emplace_back(*this, c);
  }
  return out;
}

inline std::string Field::coeff_to_string(const Coeff& c) const {
  std::vector<std::string> names{"1"};
  const auto& adj = d_->desc.adjoined;
  if (d_->ngens >= 1) names.push_back(adj[0].label);
  if (d_->ngens >= 2) {
    names.push_back(adj[1].label);
    names.push_back(adj[0].label + "*" + adj[1].label);
  }
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    mpq_class v = c[i];
    bool neg = v < 0;
    if (neg) v = -v;
    std::string body;
    if (i == 0)
      body = v.get_str();
    else if (v == 1)
      body = names[i];
    else
      body = v.get_str() + "*" + names[i];
    if (s.empty())
      s = (neg ? "-" : "") + body;
    else
      s += (neg ? " - " : " + ") + body;
  }
  return s.empty() ? "0" : s;
}

inline void FieldAut::build_matrix() {
  const int n = f_.dim();
  m_.assign(static_cast<std::size_t>(n), std::vector<mpq_class>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j) {
    Coeff img = f_.one_c();
    for (int g = 0; g < f_.ngens(); ++g)
      if (j & (1 << g)) img = f_.mul(img, images_[static_cast<std::size_t>(g)]);
    for (int i = 0; i < n; ++i) m_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = img[static_cast<std::size_t>(i)];
  }
}

}  // namespace qmono
