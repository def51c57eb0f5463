#pragma once

// Quaternion-type symbols (a,b)_k and Artin-Schreier symbols [a,b)_k.
// Over Q the class is decided by Hilbert symbols at 2, infinity and the odd
// primes dividing ab; finite fields have trivial Brauer group.

#include <gmpxx.h>

#include <string>
#include <variant>
#include <vector>

#include "qmono/field.hpp"

namespace qmono {

enum class SymbolKind { Multiplicative, ArtinSchreier };
enum class SymbolValue { Zero, NonZero, Undecidable };

inline std::string symbol_value_name(SymbolValue v) {
  switch (v) {
    case SymbolValue::Zero: return "zero";
    case SymbolValue::NonZero: return "nonzero";
    case SymbolValue::Undecidable: return "undecidable";
  }
  return "undecidable";
}

struct AbstractField {
  std::string name = "k";
};

struct SymbolQuery {
  SymbolKind kind = SymbolKind::Multiplicative;
  mpq_class a, b;
  std::variant<FieldDescriptor, AbstractField> field;
};

struct SymbolVerdict {
  SymbolValue value = SymbolValue::Undecidable;
  std::string witness;  // place where the local symbol is -1
  std::string reason;
};

namespace detail {

struct Factored {
  mpz_class squarefree;          // signed square-free representative
  std::vector<mpz_class> primes;  // primes dividing the original integer
};

inline Factored factor_integer(mpz_class n) {
  Factored f;
  f.squarefree = n < 0 ? -1 : 1;
  if (n < 0) n = -n;
  const unsigned long limit = 1000000;
  for (unsigned long p = 2; p <= limit; p += (p == 2 ? 1 : 2)) {
    if (mpz_class(p) * p > n) break;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p) == 0) continue;
    int e = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      n /= p;
      ++e;
    }
    f.primes.emplace_back(p);
    if (e % 2) f.squarefree *= p;
  }
  if (n > 1) {
    if (mpz_probab_prime_p(n.get_mpz_t(), 40)) {
      f.primes.push_back(n);
      f.squarefree *= n;
    } else if (mpz_perfect_square_p(n.get_mpz_t())) {
      mpz_class r;
      mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
      if (!mpz_probab_prime_p(r.get_mpz_t(), 40))
        throw Error(ErrorCode::UndecidableAtHeightBound, "integer too large to factor: " + n.get_str());
      f.primes.push_back(r);
    } else {
      throw Error(ErrorCode::UndecidableAtHeightBound, "integer too large to factor: " + n.get_str());
    }
  }
  return f;
}

// square class of a nonzero rational n/d is that of n*d
inline Factored square_class(const mpq_class& q) {
  if (q == 0) throw Error(ErrorCode::InvalidDescriptor, "symbol entries must be nonzero");
  return factor_integer(q.get_num() * q.get_den());
}

inline int valuation(mpz_class n, const mpz_class& p) {
  int v = 0;
  while (n != 0 && mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) {
    n /= p;
    ++v;
  }
  return v;
}

inline int mod8(const mpz_class& u) {
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), u.get_mpz_t(), 8);
  return static_cast<int>(r.get_si());
}

inline std::string place_name(const mpz_class& p) { return p == 0 ? "infinity" : p.get_str(); }

}  // namespace detail

// Local Hilbert symbol (a,b)_p in {+1,-1}; p = 0 denotes the real place.
inline int hilbert_local(const mpq_class& qa, const mpq_class& qb, const mpz_class& p) {
  const mpz_class a = detail::square_class(qa).squarefree;
  const mpz_class b = detail::square_class(qb).squarefree;
  if (p == 0) return (a < 0 && b < 0) ? -1 : 1;
  const int al = detail::valuation(a, p), be = detail::valuation(b, p);
  mpz_class u = a, v = b;
  for (int i = 0; i < al; ++i) u /= p;
  for (int i = 0; i < be; ++i) v /= p;
  if (p == 2) {
    auto eps = [](const mpz_class& x) { return ((detail::mod8(x) - 1) / 2) % 2; };
    auto omega = [](const mpz_class& x) {
      int r = detail::mod8(x);
      return ((r * r - 1) / 8) % 2;
    };
    int e = eps(u) * eps(v) + al * omega(v) + be * omega(u);
    return e % 2 ? -1 : 1;
  }
  int sign = 1;
  mpz_class eps_p = (p - 1) / 2;
  if ((al * be) % 2 == 1 && mpz_odd_p(eps_p.get_mpz_t())) sign = -sign;
  if (be % 2) sign *= mpz_legendre(u.get_mpz_t(), p.get_mpz_t());
  if (al % 2) sign *= mpz_legendre(v.get_mpz_t(), p.get_mpz_t());
  return sign;
}

// Places where (a,b) may ramify: infinity, 2 and odd primes dividing ab.
inline std::vector<mpz_class> relevant_places(const mpq_class& a, const mpq_class& b) {
  std::vector<mpz_class> places{0, 2};
  for (const auto* q : {&a, &b})
    for (const auto& p : detail::square_class(*q).primes)
      if (p != 2 && std::find(places.begin(), places.end(), p) == places.end()) places.push_back(p);
  std::sort(places.begin() + 1, places.end());
  return places;
}

inline SymbolVerdict hilbert_symbol_Q(const mpq_class& a, const mpq_class& b) {
  SymbolVerdict v;
  int product = 1;
  for (const auto& p : relevant_places(a, b)) {
    int s = hilbert_local(a, b, p);
    product *= s;
    if (s == -1 && v.witness.empty()) v.witness = detail::place_name(p);
  }
  if (product != 1) throw std::logic_error("Hilbert product formula violated");
  v.value = v.witness.empty() ? SymbolValue::Zero : SymbolValue::NonZero;
  v.reason = v.witness.empty() ? "all local symbols trivial" : "local symbol -1 at " + v.witness;
  return v;
}

inline SymbolVerdict symbol_decide(const SymbolQuery& q) {
  if (q.a == 0 || q.b == 0) throw Error(ErrorCode::InvalidDescriptor, "symbol entries must be nonzero");
  SymbolVerdict v;
  if (std::holds_alternative<AbstractField>(q.field)) {
    v.reason = "field " + std::get<AbstractField>(q.field).name + " is abstract";
    return v;
  }
  const auto& d = std::get<FieldDescriptor>(q.field);
  if (q.kind == SymbolKind::ArtinSchreier) {
    if (d.p != 2) {
      v.reason = "Artin-Schreier symbols need characteristic 2";
      return v;
    }
    v.value = SymbolValue::Zero;
    v.reason = "finite field: trivial Brauer group";
    return v;
  }
  if (d.p != 0) {
    Field f(d);
    if (f.from_rational(q.a).is_zero() || f.from_rational(q.b).is_zero())
      throw Error(ErrorCode::InvalidDescriptor, "symbol entries vanish in the field");
    v.value = SymbolValue::Zero;
    v.reason = "finite field: trivial Brauer group";
    return v;
  }
  if (!d.adjoined.empty()) {
    v.reason = "number field " + d.to_string() + " is not supported";
    return v;
  }
  return hilbert_symbol_Q(q.a, q.b);
}

// Is d a square in Q_p (p = 0: the reals)?
inline bool is_local_square(const mpq_class& d, const mpz_class& p) {
  const mpz_class s = detail::square_class(d).squarefree;
  if (p == 0) return s > 0;
  if (detail::valuation(s, p) % 2) return false;
  if (p == 2) return detail::mod8(s) == 1;
  mpz_class u = s;
  return mpz_legendre(u.get_mpz_t(), p.get_mpz_t()) == 1;
}

struct RelativeBrauerVerdict {
  bool member = false;
  std::string reason;
};

// Is the class of (a,b) in Br(Q(sqrt(ac))/Q)?
inline RelativeBrauerVerdict symbol_in_relative_brauer(const mpq_class& a, const mpq_class& b, const mpq_class& c) {
  if (a == 0 || b == 0 || c == 0) throw Error(ErrorCode::InvalidDescriptor, "entries must be nonzero");
  RelativeBrauerVerdict r;
  auto sym = hilbert_symbol_Q(a, b);
  if (sym.value == SymbolValue::Zero) {
    r.member = true;
    r.reason = "(a,b) is trivial";
    return r;
  }
  const mpq_class d = a * c;
  for (const auto& p : relevant_places(a, b)) {
    if (hilbert_local(a, b, p) == 1) continue;
    if (is_local_square(d, p)) {
      r.member = false;
      r.reason = "ac is a local square at ramified place " + detail::place_name(p);
      return r;
    }
  }
  r.member = true;
  r.reason = "Q(sqrt(ac)) is non-split at every ramified place";
  return r;
}

}  // namespace qmono
