#pragma once

// Rational functions in normalized form: coprime numerator and denominator,
// denominator with leading coefficient 1. Equality is representation equality.

#include <vector>

#include "qmono/gcd.hpp"

namespace qmono {

class RatFunc {
 public:
  RatFunc() = default;
  RatFunc(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw Error(ErrorCode::IdenticallyZeroDenominator, "denominator is zero");
    normalize();
  }
  explicit RatFunc(Poly num) : num_(std::move(num)) {
    den_ = Poly::constant(num_.field(), num_.nvars(), num_.field().one_c());
  }

  static RatFunc constant(const Field& f, int n, const Coeff& c) { return RatFunc(Poly::constant(f, n, c)); }
  static RatFunc constant(const Field& f, int n, const mpq_class& q) { return RatFunc(Poly::constant(f, n, q)); }
  static RatFunc var(const Field& f, int n, int i) { return RatFunc(Poly::var(f, n, i)); }
  // already coprime with monic denominator
  static RatFunc from_reduced(Poly num, Poly den) {
    RatFunc r;
    r.num_ = std::move(num);
    r.den_ = std::move(den);
    r.fix_scale();
    return r;
  }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  const Field& field() const { return num_.field(); }
  int nvars() const { return num_.nvars(); }
  bool is_zero() const { return num_.is_zero(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  bool is_poly() const { return den_.is_constant(); }
  bool is_laurent_monomial() const { return num_.is_monomial() && den_.is_monomial(); }

  bool operator==(const RatFunc& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const RatFunc& o) const { return !(*this == o); }

  RatFunc operator-() const { return from_reduced(-num_, den_); }

  RatFunc operator+(const RatFunc& o) const { return add(o, false); }
  RatFunc operator-(const RatFunc& o) const { return add(o, true); }

  RatFunc operator*(const RatFunc& o) const {
    if (is_zero() || o.is_zero()) return RatFunc(Poly(field(), nvars()));
    Poly g1 = gcd(num_, o.den_), g2 = gcd(o.num_, den_);
    Poly a = g1.is_one() ? num_ : num_.exact_div(g1);
    Poly d = g1.is_one() ? o.den_ : o.den_.exact_div(g1);
    Poly c = g2.is_one() ? o.num_ : o.num_.exact_div(g2);
    Poly b = g2.is_one() ? den_ : den_.exact_div(g2);
    return from_reduced(a * c, b * d);
  }
  RatFunc inverse() const {
    if (is_zero()) throw Error(ErrorCode::DivisionByZero, "inverse of zero rational function");
    return from_reduced(den_, num_);
  }
  RatFunc operator/(const RatFunc& o) const { return *this * o.inverse(); }
  RatFunc& operator+=(const RatFunc& o) { return *this = *this + o; }
  RatFunc& operator-=(const RatFunc& o) { return *this = *this - o; }
  RatFunc& operator*=(const RatFunc& o) { return *this = *this * o; }

  RatFunc pow(long e) const {
    if (e < 0) return inverse().pow(-e);
    return from_reduced(num_.pow(static_cast<unsigned>(e)), den_.pow(static_cast<unsigned>(e)));
  }

  Coeff evaluate(const std::vector<Coeff>& pt) const {
    Coeff d = den_.eval(pt);
    if (Field::is_zero_c(d)) throw Error(ErrorCode::PoleAtPoint, "denominator vanishes at point");
    return field().div(num_.eval(pt), d);
  }

  RatFunc apply_aut(const FieldAut& a) const { return from_reduced(num_.apply_aut(a), den_.apply_aut(a)); }

 private:
  RatFunc add(const RatFunc& o, bool subtract) const {
    const Poly& c = o.num_;
    if (den_ == o.den_) {
      Poly s = subtract ? num_ - c : num_ + c;
      return RatFunc(std::move(s), den_);
    }
    if (den_.is_one()) return from_reduced(subtract ? num_ * o.den_ - c : num_ * o.den_ + c, o.den_);
    if (o.den_.is_one()) return from_reduced(subtract ? num_ - c * den_ : num_ + c * den_, den_);
    Poly g = gcd(den_, o.den_);
    Poly b1 = g.is_one() ? den_ : den_.exact_div(g);
    Poly d1 = g.is_one() ? o.den_ : o.den_.exact_div(g);
    Poly s = subtract ? num_ * d1 - c * b1 : num_ * d1 + c * b1;
    Poly den = b1 * o.den_;
    if (g.is_one()) return from_reduced(std::move(s), std::move(den));
    return RatFunc(std::move(s), std::move(den));
  }

  void normalize() {
    if (num_.is_zero()) {
      den_ = Poly::constant(num_.field(), num_.nvars(), num_.field().one_c());
      return;
    }
    Poly g = gcd(num_, den_);
    if (!g.is_one()) {
      num_ = num_.exact_div(g);
      den_ = den_.exact_div(g);
    }
    fix_scale();
  }

  void fix_scale() {
    if (num_.is_zero()) {
      den_ = Poly::constant(num_.field(), num_.nvars(), num_.field().one_c());
      return;
    }
    const Coeff& lc = den_.lead().c;
    if (Field::is_one_c(lc)) return;
    Coeff inv = den_.field().inv(lc);
    num_ = num_.scale(inv);
    den_ = den_.scale(inv);
  }

  Poly num_, den_;
};

// Field automorphism on coefficients followed by variable images.
struct Substitution {
  FieldAut aut;
  std::vector<RatFunc> images;
};

namespace detail {

inline bool images_unimodular_laurent(const std::vector<RatFunc>& images, int n) {
  if (static_cast<int>(images.size()) != n) return false;
  std::vector<std::vector<long long>> m(static_cast<std::size_t>(n), std::vector<long long>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j) {
    const auto& im = images[static_cast<std::size_t>(j)];
    if (!im.is_laurent_monomial()) return false;
    for (int i = 0; i < n; ++i)
      m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          im.num().lead().e[static_cast<std::size_t>(i)] - im.den().lead().e[static_cast<std::size_t>(i)];
  }
  // fraction-free elimination for the determinant
  long long sign = 1, prev = 1;
  for (int k = 0; k < n; ++k) {
    int piv = -1;
    for (int r = k; r < n; ++r)
      if (m[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return false;
    if (piv != k) {
      std::swap(m[static_cast<std::size_t>(piv)], m[static_cast<std::size_t>(k)]);
      sign = -sign;
    }
    for (int r = k + 1; r < n; ++r)
      for (int c = k + 1; c < n; ++c) {
        auto& mr = m[static_cast<std::size_t>(r)];
        const auto& mk = m[static_cast<std::size_t>(k)];
        mr[static_cast<std::size_t>(c)] =
            (mk[static_cast<std::size_t>(k)] * mr[static_cast<std::size_t>(c)] - mr[static_cast<std::size_t>(k)] * mk[static_cast<std::size_t>(c)]) / prev;
      }
    prev = m[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
  }
  long long det = sign * prev;
  return det == 1 || det == -1;
}

// P(images) as (numerator, monomial/power data) for the general path
inline Poly subst_poly(const Poly& P, const FieldAut& aut, const std::vector<Poly>& nums,
                       const std::vector<std::vector<Poly>>& npow, const std::vector<std::vector<Poly>>& dpow,
                       const std::vector<int>& D, const Field& f, int n_out) {
  Poly acc(f, n_out);
  for (const auto& t : P.terms()) {
    Poly m = Poly::constant(f, n_out, aut.images().empty() ? t.c : aut.apply_c(t.c));
    for (std::size_t i = 0; i < nums.size(); ++i) {
      int e = t.e[i];
      if (e) m = m * npow[i][static_cast<std::size_t>(e)];
      int r = D[i] - e;
      if (r) m = m * dpow[i][static_cast<std::size_t>(r)];
    }
    acc += m;
  }
  return acc;
}

}  // namespace detail

inline RatFunc substitute(const RatFunc& r, const Substitution& s) {
  const Field& f = r.field();
  const int n_in = r.nvars();
  const std::size_t k = s.images.size();
  if (static_cast<int>(k) < n_in) throw Error(ErrorCode::InvalidAction, "missing variable images");
  const int n_out = k ? s.images[0].nvars() : n_in;
  bool all_laurent = true;
  for (const auto& im : s.images) all_laurent = all_laurent && im.is_laurent_monomial();

  if (all_laurent) {
    // each term maps to a single Laurent term
    auto image_of = [&](const Poly& P, Exps& shift) {
      std::vector<std::pair<std::array<long long, kMaxVars>, Coeff>> terms;
      std::array<long long, kMaxVars> mn;
      mn.fill(0);
      bool first = true;
      for (const auto& t : P.terms()) {
        Coeff c = s.aut.images().empty() ? t.c : s.aut.apply_c(t.c);
        std::array<long long, kMaxVars> e{};
        for (std::size_t i = 0; i < static_cast<std::size_t>(n_in); ++i) {
          const int ei = t.e[i];
          if (!ei) continue;
          const auto& im = s.images[i];
          c = f.mul(c, f.pow(f.div(im.num().lead().c, im.den().lead().c), ei));
          for (std::size_t j = 0; j < kMaxVars; ++j)
            e[j] += static_cast<long long>(ei) * (im.num().lead().e[j] - im.den().lead().e[j]);
        }
        for (std::size_t j = 0; j < kMaxVars; ++j) mn[j] = first ? e[j] : std::min(mn[j], e[j]);
        first = false;
        terms.emplace_back(e, std::move(c));
      }
      std::vector<Term> out;
      for (auto& [e, c] : terms) {
        Term t;
        for (std::size_t j = 0; j < kMaxVars; ++j) t.e[j] = static_cast<std::int32_t>(e[j] - mn[j]);
        t.c = std::move(c);
        out.push_back(std::move(t));
      }
      for (std::size_t j = 0; j < kMaxVars; ++j) shift[j] = static_cast<std::int32_t>(mn[j]);
      return Poly::from_terms(f, n_out, std::move(out));
    };
    Exps sn{}, sd{};
    Poly N = image_of(r.num(), sn);
    Poly Dn = image_of(r.den(), sd);
    Exps up{}, down{};
    for (std::size_t j = 0; j < kMaxVars; ++j) {
      int d = sn[j] - sd[j];
      if (d > 0) up[j] = d;
      else down[j] = -d;
    }
    N = N.mul_term(up, f.one_c());
    Dn = Dn.mul_term(down, f.one_c());
    if (detail::images_unimodular_laurent(s.images, n_in) && static_cast<int>(k) == n_out) {
      Exps mN = N.min_exps(), mD = Dn.min_exps(), m{};
      for (std::size_t j = 0; j < kMaxVars; ++j) m[j] = std::min(mN[j], mD[j]);
      return RatFunc::from_reduced(N.shift_down(m), Dn.shift_down(m));
    }
    return RatFunc(N, Dn);
  }

  std::vector<int> DP(k, 0), DQ(k, 0), D(k, 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_in); ++i) {
    DP[i] = std::max(r.num().degree(static_cast<int>(i)), 0);
    DQ[i] = std::max(r.den().degree(static_cast<int>(i)), 0);
    D[i] = std::max(DP[i], DQ[i]);
  }
  std::vector<Poly> nums, dens;
  std::vector<std::vector<Poly>> npow(k), dpow(k);
  for (std::size_t i = 0; i < k; ++i) {
    nums.push_back(s.images[i].num());
    dens.push_back(s.images[i].den());
    npow[i].push_back(Poly::constant(f, n_out, f.one_c()));
    dpow[i].push_back(Poly::constant(f, n_out, f.one_c()));
    for (int e = 1; e <= D[i]; ++e) {
      npow[i].push_back(npow[i].back() * nums[i]);
      dpow[i].push_back(dpow[i].back() * dens[i]);
    }
  }
  Poly NP = detail::subst_poly(r.num(), s.aut, nums, npow, dpow, DP, f, n_out);
  Poly NQ = detail::subst_poly(r.den(), s.aut, nums, npow, dpow, DQ, f, n_out);
  // P(r)/Q(r) = NP * prod d^DQ / (NQ * prod d^DP)
  for (std::size_t i = 0; i < k; ++i) {
    int diff = DQ[i] - DP[i];
    if (diff > 0) NP = NP * dpow[i][static_cast<std::size_t>(diff)];
    if (diff < 0) NQ = NQ * dpow[i][static_cast<std::size_t>(-diff)];
  }
  if (NQ.is_zero()) throw Error(ErrorCode::IdenticallyZeroDenominator, "substitution kills the denominator");
  return RatFunc(NP, NQ);
}

}  // namespace qmono
