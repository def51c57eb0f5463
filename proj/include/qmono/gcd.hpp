#pragma once

// Multivariate gcd over a tower field: recursive content/primitive-part
// decomposition with a subresultant remainder sequence in the main variable,
// plus an evaluation probe that certifies coprimality cheaply.

#include <random>
#include <vector>

#include "qmono/poly.hpp"

namespace qmono {

namespace detail {

using UPoly = std::vector<Coeff>;  // dense univariate, index = degree

inline void utrim(UPoly& a) {
  while (!a.empty() && Field::is_zero_c(a.back())) a.pop_back();
}

inline UPoly urem(const Field& f, UPoly a, const UPoly& b) {
  const Coeff binv = f.inv(b.back());
  while (a.size() >= b.size()) {
    Coeff q = f.mul(a.back(), binv);
    const std::size_t s = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) f.sub_to(a[s + i], f.mul(q, b[i]));
    a.pop_back();
    utrim(a);
  }
  return a;
}

inline int ugcd_degree(const Field& f, UPoly a, UPoly b) {
  utrim(a);
  utrim(b);
  if (a.size() < b.size()) std::swap(a, b);
  while (!b.empty()) {
    UPoly r = urem(f, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return static_cast<int>(a.size()) - 1;
}

inline Poly ugcd(const Field& f, int n, int v, const Poly& A, const Poly& B) {
  auto to_u = [&](const Poly& p) {
    UPoly u(static_cast<std::size_t>(p.degree(v) + 1), f.zero_c());
    for (const auto& t : p.terms()) u[static_cast<std::size_t>(t.e[static_cast<std::size_t>(v)])] = t.c;
    return u;
  };
  UPoly a = to_u(A), b = to_u(B);
  if (a.size() < b.size()) std::swap(a, b);
  while (!b.empty()) {
    UPoly r = urem(f, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  std::vector<Term> out;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (Field::is_zero_c(a[k])) continue;
    Exps e{};
    e[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(k);
    out.push_back(Term{e, a[k]});
  }
  return Poly::from_terms(f, n, std::move(out)).monic();
}

inline Coeff random_point_coeff(const Field& f, std::mt19937_64& rng) {
  Coeff c = f.zero_c();
  if (f.characteristic() == 0) {
    std::uniform_int_distribution<int> d(-97, 97);
    c[0] = d(rng);
    for (std::size_t i = 1; i < c.size(); ++i) c[i] = d(rng) % 5;
  } else {
    const auto p = f.characteristic();
    std::uniform_int_distribution<std::uint64_t> d(0, p - 1);
    for (auto& x : c) x = mpq_class(std::to_string(d(rng)));
  }
  return c;
}

struct GcdEngine {
  const Field& f;
  int n;
  std::mt19937_64 rng{0x5eed};

  Poly one() const { return Poly::constant(f, n, f.one_c()); }

  std::vector<int> vars_of(const Poly& p) const {
    std::vector<int> vs;
    for (int i = 0; i < n; ++i)
      if (p.uses_var(i)) vs.push_back(i);
    return vs;
  }

  Poly content(const Poly& p, int v) {
    auto cs = p.coeffs_in(v);
    std::vector<Poly> nz;
    for (auto& c : cs)
      if (!c.is_zero()) nz.push_back(std::move(c));
    std::sort(nz.begin(), nz.end(), [](const Poly& a, const Poly& b) { return a.size() < b.size(); });
    Poly g = nz.front().monic();
    for (std::size_t i = 1; i < nz.size() && !g.is_one(); ++i) g = gcd(g, nz[i]);
    return g;
  }

  // gcd of a list of polynomials
  Poly gcd_all(std::vector<Poly> ps) {
    std::sort(ps.begin(), ps.end(), [](const Poly& a, const Poly& b) { return a.size() < b.size(); });
    Poly g(f, n);
    for (const auto& p : ps) {
      if (p.is_zero()) continue;
      g = g.is_zero() ? p.monic() : gcd(g, p);
      if (g.is_one()) break;
    }
    return g;
  }

  Poly gcd(const Poly& A, const Poly& B) {
    if (A.is_zero()) return B.monic();
    if (B.is_zero()) return A.monic();
    if (A.is_constant() || B.is_constant()) return one();
    const Exps ma = A.min_exps(), mb = B.min_exps();
    Exps mg{};
    bool has_mono = false;
    for (std::size_t i = 0; i < kMaxVars; ++i) {
      mg[i] = std::min(ma[i], mb[i]);
      has_mono = has_mono || ma[i] || mb[i];
    }
    Poly a = has_mono ? A.shift_down(ma) : A;
    Poly b = has_mono ? B.shift_down(mb) : B;
    Poly g = core(a, b);
    if (total_degree(mg) > 0) g = g.mul_term(mg, f.one_c());
    return g.monic();
  }

  Poly core(Poly a, Poly b) {
    if (a.is_constant() || b.is_constant()) return one();
    if (a == b) return a.monic();
    // variables present in only one input: reduce to its content
    for (int v = 0; v < n; ++v) {
      const bool ua = a.uses_var(v), ub = b.uses_var(v);
      if (ua && !ub) {
        auto cs = a.coeffs_in(v);
        cs.push_back(b);
        return gcd_all(std::move(cs));
      }
      if (ub && !ua) {
        auto cs = b.coeffs_in(v);
        cs.push_back(a);
        return gcd_all(std::move(cs));
      }
    }
    auto vs = vars_of(a);
    if (vs.size() == 1) return ugcd(f, n, vs[0], a, b);

    // main variable: smallest combined degree
    int v = vs[0];
    int best = 1 << 30;
    for (int w : vs) {
      int d = a.degree(w) + b.degree(w);
      if (d < best) {
        best = d;
        v = w;
      }
    }
    const int probe = probe_degree(a, b, v);

    Poly ca = content(a, v), cb = content(b, v);
    Poly pa = ca.is_one() ? a : a.exact_div(ca);
    Poly pb = cb.is_one() ? b : b.exact_div(cb);
    Poly c = gcd(ca, cb);
    if (probe == 0) return c;
    if (probe > 0) {
      if (probe == pb.degree(v) && pa.divide(pb)) return (c * pb).monic();
      if (probe == pa.degree(v) && pb.divide(pa)) return (c * pa).monic();
    }
    Poly g = subresultant(pa, pb, v);
    return (c * g).monic();
  }

  // degree in v of the gcd of a specialization, or -1 when no good point was found
  int probe_degree(const Poly& a, const Poly& b, int v) {
    auto ca = a.coeffs_in(v), cb = b.coeffs_in(v);
    const Poly& la = ca.back();
    const Poly& lb = cb.back();
    int best = -1;
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::vector<Coeff> pt(static_cast<std::size_t>(n), f.zero_c());
      for (int i = 0; i < n; ++i)
        if (i != v) pt[static_cast<std::size_t>(i)] = random_point_coeff(f, rng);
      if (Field::is_zero_c(la.eval(pt)) || Field::is_zero_c(lb.eval(pt))) continue;
      UPoly ua, ub;
      for (const auto& c : ca) ua.push_back(c.eval(pt));
      for (const auto& c : cb) ub.push_back(c.eval(pt));
      int d = ugcd_degree(f, ua, ub);
      if (best < 0 || d < best) best = d;
      if (best == 0) break;
    }
    return best;
  }

  std::vector<Poly> prem(std::vector<Poly> r, const std::vector<Poly>& b) {
    const Poly& lb = b.back();
    int e = static_cast<int>(r.size()) - static_cast<int>(b.size()) + 1;
    while (!r.empty() && r.size() >= b.size()) {
      Poly lr = r.back();
      const std::size_t s = r.size() - b.size();
      for (auto& c : r) c = c * lb;
      for (std::size_t i = 0; i < b.size(); ++i) r[s + i] -= lr * b[i];
      while (!r.empty() && r.back().is_zero()) r.pop_back();
      --e;
    }
    if (e > 0) {
      Poly m = lb.pow(static_cast<unsigned>(e));
      for (auto& c : r) c = c * m;
    }
    return r;
  }

  Poly subresultant(const Poly& pa, const Poly& pb, int v) {
    auto A = pa.coeffs_in(v), B = pb.coeffs_in(v);
    if (A.size() < B.size()) std::swap(A, B);
    Poly g = one(), h = one();
    while (true) {
      const int d = static_cast<int>(A.size()) - static_cast<int>(B.size());
      auto R = prem(A, B);
      if (R.empty()) break;
      if (R.size() == 1) return one();
      A = std::move(B);
      Poly div = g * h.pow(static_cast<unsigned>(d));
      for (auto& c : R) c = c.exact_div(div);
      B = std::move(R);
      g = A.back();
      if (d == 0) {
        // h unchanged
      } else if (d == 1) {
        h = g;
      } else {
        h = g.pow(static_cast<unsigned>(d)).exact_div(h.pow(static_cast<unsigned>(d - 1)));
      }
    }
    Poly res = Poly::from_coeffs(f, n, B, v);
    Poly c = content(res, v);
    return (c.is_one() ? res : res.exact_div(c)).monic();
  }
};

}  // namespace detail

// Monic gcd (leading graded-lex coefficient 1).
inline Poly gcd(const Poly& a, const Poly& b) {
  detail::GcdEngine eng{a.field(), std::max(a.nvars(), b.nvars())};
  return eng.gcd(a, b);
}

}  // namespace qmono
