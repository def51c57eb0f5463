#pragma once

// Quasi-monomial actions: sigma(x_j) = c_j(sigma) * prod_i x_i^{a_ij} with
// sigma acting on the coefficient field through a field automorphism.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qmono/expr.hpp"
#include "qmono/fiber.hpp"
#include "qmono/matgroup.hpp"

namespace qmono {

// A subfield of K given by generators, with coordinate conversion both ways.
struct Subfield {
  Field field;
  Field ambient;
  std::vector<Coeff> basis_in_K;  // images of the subfield basis {1, e0, e1, e0 e1}

  Coeff to_K(const Coeff& c) const {
    Coeff r = ambient.zero_c();
    for (std::size_t k = 0; k < c.size(); ++k)
      if (c[k] != 0) ambient.add_to(r, ambient.scale(basis_in_K[k], c[k]));
    return r;
  }
  // coordinates of x in the subfield basis, if x lies there
  std::optional<Coeff> from_K(const Coeff& x) const {
    const std::size_t rows = x.size(), cols = basis_in_K.size();
    std::vector<std::vector<mpq_class>> m(rows, std::vector<mpq_class>(cols + 1));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) m[i][j] = basis_in_K[j][i];
      m[i][cols] = x[i];
    }
    const auto& d = ambient.data();
    std::vector<int> pivcol;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
      std::size_t piv = rows;
      for (std::size_t i = r; i < rows; ++i)
        if (m[i][c] != 0) {
          piv = i;
          break;
        }
      if (piv == rows) continue;
      std::swap(m[piv], m[r]);
      mpq_class inv = d.base_inv(m[r][c]);
      for (auto& v : m[r]) {
        v *= inv;
        d.reduce(v);
      }
      for (std::size_t i = 0; i < rows; ++i) {
        if (i == r || m[i][c] == 0) continue;
        mpq_class f = m[i][c];
        for (std::size_t k = 0; k <= cols; ++k) {
          m[i][k] -= f * m[r][k];
          d.reduce(m[i][k]);
        }
      }
      pivcol.push_back(static_cast<int>(c));
      ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
      if (m[i][cols] != 0) return std::nullopt;
    Coeff out = field.zero_c();
    for (std::size_t i = 0; i < pivcol.size(); ++i) out[static_cast<std::size_t>(pivcol[i])] = m[i][cols];
    return out;
  }
  FieldAut restrict(const FieldAut& a) const {
    std::vector<Coeff> im;
    for (int g = 0; g < field.ngens(); ++g) {
      auto c = from_K(a.apply_c(basis_in_K[static_cast<std::size_t>(1) << g]));
      if (!c) throw Error(ErrorCode::NotInvariant, "automorphism does not preserve the subfield");
      im.push_back(*c);
    }
    return FieldAut(field, im);
  }
};

// Fixed field of a set of automorphisms, as a standalone tower field.
inline Subfield fixed_subfield(const Field& K, const std::vector<FieldAut>& auts) {
  const auto& d = K.data();
  const auto& adj = d.desc.adjoined;
  auto fixed = [&](const Coeff& e) {
    for (const auto& a : auts)
      if (a.apply_c(e) != e) return false;
    return true;
  };
  struct Cand {
    Coeff e;
    AdjKind kind;
    mpq_class a;
    std::string label;
  };
  std::vector<Cand> cands;
  const bool as = K.ngens() > 0 && adj[0].kind == AdjKind::ArtinSchreier;
  if (K.ngens() >= 1) cands.push_back({K.gen_c(0), adj[0].kind, d.a[0], adj[0].label});
  if (K.ngens() >= 2) {
    cands.push_back({K.gen_c(1), adj[1].kind, d.a[1], adj[1].label});
    if (as) {
      mpq_class s = d.a[0] + d.a[1];
      d.reduce(s);
      cands.push_back({K.add(K.gen_c(0), K.gen_c(1)), AdjKind::ArtinSchreier, s, adj[0].label + adj[1].label});
    } else {
      mpq_class s = d.a[0] * d.a[1];
      d.reduce(s);
      cands.push_back({K.mul(K.gen_c(0), K.gen_c(1)), AdjKind::SquareRoot, s, adj[0].label + adj[1].label});
    }
  }
  std::vector<Cand> fx;
  for (auto& c : cands)
    if (fixed(c.e)) fx.push_back(c);
  Subfield sf;
  sf.ambient = K;
  if (static_cast<int>(fx.size()) == static_cast<int>(cands.size())) {
    sf.field = K;
    for (int i = 0; i < K.dim(); ++i) {
      Coeff c = K.zero_c();
      c[static_cast<std::size_t>(i)] = 1;
      sf.basis_in_K.push_back(c);
    }
    return sf;
  }
  FieldDescriptor desc;
  desc.p = d.p;
  if (fx.empty()) {
    sf.field = Field(desc);
    sf.basis_in_K.push_back(K.one_c());
    return sf;
  }
  // a single quadratic subfield is fixed
  const Cand& c = fx.front();
  desc.adjoined.push_back(Adjunction{c.kind, c.a, c.label});
  sf.field = Field(desc);
  sf.basis_in_K = {K.one_c(), c.e};
  return sf;
}

struct ActionGenerator {
  std::string name;
  FieldAut aut;
  IntMat matrix;
  std::vector<Coeff> coeffs;
};

struct WordRelation {
  std::string lhs, rhs;
};

struct QuasiMonomialAction {
  Field field;
  int n = 0;
  std::vector<std::string> vars;
  std::vector<ActionGenerator> gens;
  bool purely = false;
  std::vector<WordRelation> relations;
};

inline std::vector<std::string> default_var_names(int n) {
  if (n == 1) return {"x"};
  if (n == 2) return {"x", "y"};
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

struct GroupElem {
  FieldAut aut;
  IntMat m;
  std::vector<Coeff> c;
  std::string word;

  auto key() const { return std::tie(m, aut, c); }
  bool operator<(const GroupElem& o) const { return key() < o.key(); }
  bool same_as(const GroupElem& o) const { return m == o.m && aut == o.aut && c == o.c; }
  bool is_identity() const {
    if (!m.is_identity() || !aut.is_identity()) return false;
    for (const auto& x : c)
      if (!Field::is_one_c(x)) return false;
    return true;
  }
  bool acts_trivially_on_field() const { return aut.is_identity(); }
};

inline GroupElem identity_elem(const Field& K, int n) {
  GroupElem e{FieldAut::identity(K), IntMat::identity(n), std::vector<Coeff>(static_cast<std::size_t>(n), K.one_c()), "1"};
  return e;
}

inline GroupElem from_generator(const ActionGenerator& g) { return GroupElem{g.aut, g.matrix, g.coeffs, g.name}; }

// (s o t): apply t first, then s
inline GroupElem compose(const Field& K, const GroupElem& s, const GroupElem& t) {
  GroupElem r;
  r.aut = s.aut.compose(t.aut);
  r.m = s.m * t.m;
  const int n = s.m.rows();
  r.c.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Coeff v = s.aut.apply_c(t.c[static_cast<std::size_t>(j)]);
    for (int i = 0; i < n; ++i) {
      long long e = t.m(i, j);
      if (e) v = K.mul(v, K.pow(s.c[static_cast<std::size_t>(i)], e));
    }
    r.c[static_cast<std::size_t>(j)] = std::move(v);
  }
  r.word = s.word == "1" ? t.word : (t.word == "1" ? s.word : s.word + " " + t.word);
  return r;
}

inline std::vector<GroupElem> closure(const Field& K, int n, const std::vector<GroupElem>& gens, std::size_t cap = 4096) {
  std::vector<GroupElem> all{identity_elem(K, n)};
  std::set<GroupElem> seen{all[0]};
  std::size_t head = 0;
  while (head < all.size()) {
    GroupElem x = all[head++];
    for (const auto& g : gens) {
      GroupElem y = compose(K, x, g);
      if (seen.insert(y).second) {
        if (seen.size() > cap) throw Error(ErrorCode::CapExceeded, "group is infinite or exceeds cap " + std::to_string(cap));
        all.push_back(std::move(y));
      }
    }
  }
  return all;
}

inline std::vector<GroupElem> group_elements(const QuasiMonomialAction& a, std::size_t cap = 4096) {
  std::vector<GroupElem> gens;
  for (const auto& g : a.gens) gens.push_back(from_generator(g));
  return closure(a.field, a.n, gens, cap);
}

inline Substitution to_substitution(const Field& K, const GroupElem& g) {
  const int n = g.m.rows();
  Substitution s;
  s.aut = g.aut;
  for (int j = 0; j < n; ++j) {
    Exps up{}, down{};
    for (int i = 0; i < n; ++i) {
      long long e = g.m(i, j);
      if (e > 0) up[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(e);
      if (e < 0) down[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(-e);
    }
    s.images.push_back(RatFunc::from_reduced(Poly::monomial(K, n, up, g.c[static_cast<std::size_t>(j)]), Poly::monomial(K, n, down, K.one_c())));
  }
  return s;
}

inline RatFunc apply(const Field& K, const GroupElem& g, const RatFunc& f) { return substitute(f, to_substitution(K, g)); }

inline GroupElem elem_power(const Field& K, const GroupElem& g, long e, std::size_t cap = 4096) {
  const int n = g.m.rows();
  if (e < 0) {
    // inverse as g^(ord-1)
    GroupElem x = g;
    std::size_t ord = 1;
    while (!x.is_identity()) {
      x = compose(K, x, g);
      if (++ord > cap) throw Error(ErrorCode::CapExceeded, "element of infinite order");
    }
    return elem_power(K, g, static_cast<long>(ord) - 1 + static_cast<long>(ord) * (-e - 1));
  }
  GroupElem r = identity_elem(K, n);
  for (long i = 0; i < e; ++i) r = compose(K, r, g);
  return r;
}

// Word such as "sigma tau^2" (= sigma o tau o tau) or "1".
inline GroupElem eval_word(const QuasiMonomialAction& a, const std::string& word) {
  std::string w;
  for (char ch : word) w += (ch == '*' ? ' ' : ch);
  std::istringstream in(w);
  std::string tok;
  GroupElem acc = identity_elem(a.field, a.n);
  while (in >> tok) {
    if (tok == "1" || tok == "id") continue;
    std::string name = tok;
    long e = 1;
    if (auto pos = tok.find('^'); pos != std::string::npos) {
      name = tok.substr(0, pos);
      std::string es = tok.substr(pos + 1);
      if (!es.empty() && es.front() == '(' && es.back() == ')') es = es.substr(1, es.size() - 2);
      try {
        e = std::stol(es);
      } catch (...) {
        throw Error(ErrorCode::ParseError, "bad exponent in word '" + word + "'");
      }
    }
    const ActionGenerator* g = nullptr;
    for (const auto& x : a.gens)
      if (x.name == name) g = &x;
    if (!g) throw Error(ErrorCode::ParseError, "unknown generator '" + name + "' in word '" + word + "'");
    acc = compose(a.field, acc, elem_power(a.field, from_generator(*g), e));
  }
  return acc;
}

// ---- JSON ----

inline Coeff parse_field_constant(const Field& K, const std::string& s) {
  ExprContext ctx{K, {}, {}};
  RatFunc r = parse_expr(s, ctx);
  if (!r.is_constant()) throw Error(ErrorCode::ParseError, "expected a field constant: '" + s + "'");
  return r.num().constant_term();
}

inline std::string field_constant_string(const Field& K, const Coeff& c) {
  return to_string(Poly::constant(K, 0, c), {});
}

inline QuasiMonomialAction action_from_json(const json& j) {
  QuasiMonomialAction a;
  a.field = Field(descriptor_from_json(j.at("field")));
  if (!j.contains("generators")) throw Error(ErrorCode::InvalidAction, "action needs 'generators'");
  const auto& gj = j.at("generators");
  if (j.contains("n"))
    a.n = j.at("n").get<int>();
  else if (!gj.empty())
    a.n = static_cast<int>(gj[0].at("matrix").size());
  if (a.n < 1 || a.n > kMaxVars) throw Error(ErrorCode::InvalidAction, "rank must be between 1 and 8");
  a.vars = j.contains("vars") ? j.at("vars").get<std::vector<std::string>>() : default_var_names(a.n);
  if (static_cast<int>(a.vars.size()) != a.n) throw Error(ErrorCode::InvalidAction, "vars size differs from n");
  bool all_one = true;
  for (const auto& g : gj) {
    ActionGenerator ag;
    ag.name = g.value("name", "g" + std::to_string(a.gens.size() + 1));
    ag.matrix = IntMat::from_json(g.at("matrix"));
    if (ag.matrix.rows() != a.n || ag.matrix.cols() != a.n)
      throw Error(ErrorCode::InvalidAction, "matrix of " + ag.name + " is not " + std::to_string(a.n) + "x" + std::to_string(a.n));
    std::vector<Coeff> im;
    for (int k = 0; k < a.field.ngens(); ++k) {
      const std::string& label = a.field.descriptor().adjoined[static_cast<std::size_t>(k)].label;
      if (g.contains("field_map") && g.at("field_map").contains(label))
        im.push_back(parse_field_constant(a.field, g.at("field_map").at(label).get<std::string>()));
      else
        im.push_back(a.field.gen_c(k));
    }
    ag.aut = FieldAut(a.field, im);
    if (g.contains("coeffs")) {
      for (const auto& c : g.at("coeffs"))
        ag.coeffs.push_back(parse_field_constant(a.field, c.is_string() ? c.get<std::string>() : c.dump()));
    } else {
      ag.coeffs.assign(static_cast<std::size_t>(a.n), a.field.one_c());
    }
    for (const auto& c : ag.coeffs) all_one = all_one && Field::is_one_c(c);
    a.gens.push_back(std::move(ag));
  }
  a.purely = j.contains("purely") ? j.at("purely").get<bool>() : all_one;
  if (j.contains("relations"))
    for (const auto& r : j.at("relations")) a.relations.push_back({r.at("lhs").get<std::string>(), r.at("rhs").get<std::string>()});
  return a;
}

inline json action_to_json(const QuasiMonomialAction& a) {
  json j;
  j["field"] = descriptor_to_json(a.field.descriptor());
  j["n"] = a.n;
  j["vars"] = a.vars;
  j["purely"] = a.purely;
  json gens = json::array();
  for (const auto& g : a.gens) {
    json gj;
    gj["name"] = g.name;
    if (a.field.ngens() > 0) {
      json fm = json::object();
      for (int k = 0; k < a.field.ngens(); ++k)
        fm[a.field.descriptor().adjoined[static_cast<std::size_t>(k)].label] = field_constant_string(a.field, g.aut.images()[static_cast<std::size_t>(k)]);
      gj["field_map"] = fm;
    }
    gj["matrix"] = g.matrix.to_json();
    json cs = json::array();
    for (const auto& c : g.coeffs) cs.push_back(field_constant_string(a.field, c));
    gj["coeffs"] = cs;
    gens.push_back(gj);
  }
  j["generators"] = gens;
  if (!a.relations.empty()) {
    json rs = json::array();
    for (const auto& r : a.relations) rs.push_back({{"lhs", r.lhs}, {"rhs", r.rhs}});
    j["relations"] = rs;
  }
  return j;
}

// ---- validation ----

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;
  std::size_t order = 0;
  std::optional<FieldDescriptor> invariant_field;  // K^G
  json to_json() const {
    json j;
    j["valid"] = valid;
    j["violations"] = violations;
    if (order) j["order"] = order;
    if (invariant_field) j["k"] = descriptor_to_json(*invariant_field);
    return j;
  }
};

inline std::vector<FieldAut> field_parts(const std::vector<GroupElem>& g) {
  std::vector<FieldAut> out;
  for (const auto& x : g)
    if (std::find(out.begin(), out.end(), x.aut) == out.end()) out.push_back(x.aut);
  return out;
}

inline ValidationReport validate_action(const QuasiMonomialAction& a, std::size_t cap = 4096) {
  ValidationReport rep;
  auto bad = [&](const std::string& s) {
    rep.valid = false;
    rep.violations.push_back(s);
  };
  for (const auto& g : a.gens) {
    if (g.matrix.rows() != a.n || g.matrix.cols() != a.n) {
      bad(g.name + ": matrix has wrong shape");
      continue;
    }
    if (!g.matrix.is_unimodular()) bad(g.name + ": matrix " + g.matrix.to_string() + " is not unimodular");
    if (!g.aut.is_valid()) bad(g.name + ": field_map is not a field automorphism");
    if (static_cast<int>(g.coeffs.size()) != a.n) bad(g.name + ": expected " + std::to_string(a.n) + " coefficients");
    for (std::size_t j = 0; j < g.coeffs.size(); ++j) {
      if (Field::is_zero_c(g.coeffs[j])) bad(g.name + ": coefficient of " + a.vars[j] + " is zero");
      if (a.purely && !Field::is_one_c(g.coeffs[j])) bad(g.name + ": purely monomial action with coefficient " + field_constant_string(a.field, g.coeffs[j]));
    }
  }
  if (!rep.valid) return rep;
  std::vector<GroupElem> elems;
  try {
    elems = group_elements(a, cap);
  } catch (const Error& e) {
    bad(std::string("group is not finite within cap: ") + e.what());
    return rep;
  }
  rep.order = elems.size();
  for (const auto& r : a.relations) {
    try {
      GroupElem l = eval_word(a, r.lhs), rr = eval_word(a, r.rhs);
      if (!l.same_as(rr)) bad("relation " + r.lhs + " = " + r.rhs + " fails");
    } catch (const Error& e) {
      bad("relation " + r.lhs + " = " + r.rhs + ": " + e.what());
    }
  }
  // composition law against direct substitution
  for (const auto& g : a.gens)
    for (const auto& h : a.gens) {
      GroupElem gh = compose(a.field, from_generator(g), from_generator(h));
      for (int j = 0; j < a.n; ++j) {
        RatFunc xj = RatFunc::var(a.field, a.n, j);
        RatFunc lhs = apply(a.field, from_generator(g), apply(a.field, from_generator(h), xj));
        if (lhs != apply(a.field, gh, xj)) bad("composition " + g.name + " " + h.name + " is inconsistent on " + a.vars[static_cast<std::size_t>(j)]);
      }
    }
  rep.invariant_field = fixed_subfield(a.field, field_parts(elems)).field.descriptor();
  return rep;
}

// ---- kernel and reduction ----

struct KernelInfo {
  std::vector<GroupElem> group, N, N0;
};

inline bool is_normal(const Field& K, const std::vector<GroupElem>& G, const std::vector<GroupElem>& H) {
  std::set<GroupElem> hs(H.begin(), H.end());
  for (const auto& g : G) {
    GroupElem gi = elem_power(K, g, -1);
    for (const auto& h : H)
      if (!hs.count(compose(K, compose(K, g, h), gi))) return false;
  }
  return true;
}

inline KernelInfo kernel_rho(const QuasiMonomialAction& a) {
  KernelInfo k;
  k.group = group_elements(a);
  for (const auto& g : k.group)
    if (g.m.is_identity()) {
      k.N.push_back(g);
      if (g.aut.is_identity()) k.N0.push_back(g);
    }
  if (!is_normal(a.field, k.group, k.N) || !is_normal(a.field, k.group, k.N0))
    throw std::logic_error("kernel subgroup is not normal");
  return k;
}

struct ReducedAction {
  QuasiMonomialAction action;  // over K^N, faithful on the lattice
  std::size_t order_N = 1, order_N0 = 1;
  IntMat lattice;              // columns are exponent vectors of the new variables
  std::vector<Coeff> scalings;  // new variable i = scalings[i] * x^{lattice col i}
  std::vector<RatFunc> new_vars;
  Subfield kN;
  std::vector<std::string> log;
};

namespace detail {

// cyclic group generated by the given roots of unity, with a generator
inline std::pair<Coeff, std::vector<Coeff>> root_of_unity_group(const Field& K, const std::vector<Coeff>& vals) {
  std::vector<Coeff> grp{K.one_c()};
  std::size_t head = 0;
  while (head < grp.size()) {
    Coeff x = grp[head++];
    for (const auto& v : vals) {
      Coeff y = K.mul(x, v);
      if (std::find(grp.begin(), grp.end(), y) == grp.end()) {
        grp.push_back(y);
        if (grp.size() > 4096) throw Error(ErrorCode::CapExceeded, "coefficient is not a root of unity");
      }
    }
  }
  for (const auto& z : grp) {
    std::vector<Coeff> pw{K.one_c()};
    Coeff x = z;
    while (!Field::is_one_c(x)) {
      pw.push_back(x);
      x = K.mul(x, z);
    }
    if (pw.size() == grp.size()) return {z, pw};
  }
  throw std::logic_error("finite subgroup of a field is not cyclic");
}

// solve E X = B for lower-triangular integer E, integral X expected
inline IntMat solve_lower(const IntMat& E, const IntMat& B) {
  const int n = E.rows();
  IntMat X(n, B.cols());
  for (int c = 0; c < B.cols(); ++c)
    for (int i = 0; i < n; ++i) {
      __int128 s = B(i, c);
      for (int k = 0; k < i; ++k) s -= static_cast<__int128>(E(i, k)) * X(k, c);
      if (E(i, i) == 0 || s % E(i, i) != 0) throw std::logic_error("lattice is not invariant");
      X(i, c) = detail::checked(s / E(i, i));
    }
  return X;
}

}  // namespace detail

inline ReducedAction reduce_faithful(const QuasiMonomialAction& a) {
  const Field& K = a.field;
  const int n = a.n;
  KernelInfo ker = kernel_rho(a);
  ReducedAction out;
  out.order_N = ker.N.size();
  out.order_N0 = ker.N0.size();

  // step 1: invariant monomials of N0
  IntMat E = IntMat::identity(n);
  if (ker.N0.size() > 1) {
    std::vector<Coeff> vals;
    for (const auto& g : ker.N0)
      for (const auto& c : g.c) vals.push_back(c);
    auto [zeta, powers] = detail::root_of_unity_group(K, vals);
    std::vector<Twist> twists;
    for (const auto& g : ker.N0) {
      Twist t;
      t.m = static_cast<long long>(powers.size());
      for (const auto& c : g.c) {
        auto it = std::find(powers.begin(), powers.end(), c);
        t.r.push_back(static_cast<long long>(it - powers.begin()));
      }
      twists.push_back(t);
    }
    E = invariant_monomial_lattice(n, twists);
    out.log.push_back("N0 of order " + std::to_string(ker.N0.size()) + " removed by the invariant monomial lattice");
  }
  out.lattice = E;

  // transformed generators on y_i = x^{E col i}
  struct Y {
    GroupElem g;
  };
  auto to_y = [&](const GroupElem& g) {
    GroupElem r;
    r.aut = g.aut;
    r.m = detail::solve_lower(E, g.m * E);
    r.word = g.word;
    for (int i = 0; i < n; ++i) {
      Coeff v = K.one_c();
      for (int j = 0; j < n; ++j) {
        long long e = E(j, i);
        if (e) v = K.mul(v, K.pow(g.c[static_cast<std::size_t>(j)], e));
      }
      r.c.push_back(v);
    }
    return r;
  };

  // step 2: Hilbert 90 for the part of N acting on K
  std::map<FieldAut, GroupElem> reps;
  for (const auto& g : ker.N)
    if (!reps.count(g.aut)) reps.emplace(g.aut, to_y(g));
  std::vector<FieldAut> nauts;
  for (const auto& [aut, g] : reps) nauts.push_back(aut);
  Subfield kN = fixed_subfield(K, nauts);
  std::vector<Coeff> scal(static_cast<std::size_t>(n), K.one_c());
  bool trivial_cocycle = true;
  for (const auto& [aut, g] : reps)
    for (const auto& c : g.c) trivial_cocycle = trivial_cocycle && Field::is_one_c(c);
  if (!trivial_cocycle) {
    for (int i = 0; i < n; ++i) {
      bool done = false;
      for (int b = 0; b < K.dim() && !done; ++b) {
        Coeff basis = K.zero_c();
        basis[static_cast<std::size_t>(b)] = 1;
        Coeff s = K.zero_c();
        for (const auto& [aut, g] : reps) K.add_to(s, K.mul(g.c[static_cast<std::size_t>(i)], aut.apply_c(basis)));
        if (!Field::is_zero_c(s)) {
          scal[static_cast<std::size_t>(i)] = s;
          done = true;
        }
      }
      if (!done) throw Error(ErrorCode::UnsupportedKernelQuotient, "no Hilbert 90 solution in the standard basis");
    }
    out.log.push_back("kernel acting on K (order " + std::to_string(reps.size()) + ") linearized by Hilbert 90");
  }
  out.scalings = scal;
  out.kN = kN;

  // new variables in terms of x
  for (int i = 0; i < n; ++i) {
    Exps up{}, down{};
    for (int j = 0; j < n; ++j) {
      long long e = E(j, i);
      if (e > 0) up[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(e);
      if (e < 0) down[static_cast<std::size_t>(j)] = static_cast<std::int32_t>(-e);
    }
    out.new_vars.push_back(RatFunc::from_reduced(Poly::monomial(K, n, up, scal[static_cast<std::size_t>(i)]), Poly::monomial(K, n, down, K.one_c())));
  }

  // generators of G/N on the new variables over K^N
  QuasiMonomialAction r;
  r.field = kN.field;
  r.n = n;
  r.vars = a.vars;
  r.purely = true;
  r.relations = {};
  for (const auto& gen : a.gens) {
    GroupElem y = to_y(from_generator(gen));
    ActionGenerator ng;
    ng.name = gen.name;
    ng.matrix = y.m;
    ng.aut = kN.restrict(gen.aut);
    for (int i = 0; i < n; ++i) {
      Coeff v = K.mul(gen.aut.apply_c(scal[static_cast<std::size_t>(i)]), y.c[static_cast<std::size_t>(i)]);
      for (int k = 0; k < n; ++k) {
        long long e = y.m(k, i);
        if (e) v = K.mul(v, K.pow(scal[static_cast<std::size_t>(k)], -e));
      }
      auto sub = kN.from_K(v);
      if (!sub) throw Error(ErrorCode::NotInvariant, "reduced coefficient is not in K^N");
      ng.coeffs.push_back(*sub);
      if (!Field::is_one_c(*sub)) r.purely = false;
    }
    bool trivial = ng.matrix.is_identity() && ng.aut.is_identity();
    for (const auto& c : ng.coeffs) trivial = trivial && Field::is_one_c(c);
    if (!trivial) r.gens.push_back(std::move(ng));
  }
  if (kN.field.dim() < K.dim())
    out.log.push_back("coefficient field reduced to " + kN.field.descriptor().to_string());
  out.action = std::move(r);
  return out;
}

// ---- candidate generators of a fixed field ----

struct SubfieldCheckReport {
  bool invariant = true;
  std::size_t subgroup_order = 1;
  std::optional<FiberReport> fiber;
  bool passed() const { return invariant && (!fiber || fiber->passed); }
  json to_json() const {
    json j{{"invariant", invariant}, {"subgroup_order", subgroup_order}, {"passed", passed()}};
    if (fiber) j["fiber"] = fiber->to_json();
    return j;
  }
};

struct FiberOptions {
  std::uint32_t p = 7;
  int trials = 200;
  std::uint64_t seed = 1;
  std::optional<int> bound;  // defaults to the subgroup order
};

// Invariance of each candidate under the subgroup generated by `words`, then a
// fiber-count certificate when there are as many candidates as variables.
inline SubfieldCheckReport fixed_subfield_check(const QuasiMonomialAction& a, const std::vector<RatFunc>& cands,
                                                const std::vector<std::string>& words, const FiberOptions& opt = {}) {
  SubfieldCheckReport rep;
  std::vector<GroupElem> gens;
  for (const auto& w : words) gens.push_back(eval_word(a, w));
  rep.subgroup_order = closure(a.field, a.n, gens).size();
  for (const auto& g : gens)
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (apply(a.field, g, cands[i]) != cands[i])
        throw Error(ErrorCode::NotInvariant, "candidate " + std::to_string(i + 1) + " (" + to_string(cands[i], a.vars) +
                                                 ") is not fixed by " + g.word);
  if (static_cast<int>(cands.size()) == a.n) {
    std::uint32_t p = a.field.characteristic() ? static_cast<std::uint32_t>(a.field.characteristic()) : opt.p;
    rep.fiber = fiber_degree_check(cands, opt.bound.value_or(static_cast<int>(rep.subgroup_order)), p, opt.trials, opt.seed);
  }
  return rep;
}

}  // namespace qmono
