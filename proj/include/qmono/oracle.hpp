#pragma once

// Rationality decisions for quasi-monomial actions: rank 1, rank 2 purely
// quasi-monomial (with explicit generators where formulas exist), decomposable
// rank 4 and rank 5 purely monomial actions, and decomposable tori.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmono/action.hpp"
#include "qmono/symbols.hpp"

namespace qmono {

enum class Status { Rational, ConditionallyRational, NotRational, NotKUnirational, NotRetractRational, Undecided };

inline std::string status_slug(Status s) {
  switch (s) {
    case Status::Rational: return "rational";
    case Status::ConditionallyRational: return "conditionally_rational";
    case Status::NotRational: return "not_rational";
    case Status::NotKUnirational: return "not_k_unirational";
    case Status::NotRetractRational: return "not_retract_rational";
    case Status::Undecided: return "undecided";
  }
  return "undecided";
}

inline std::string status_name(Status s) {
  switch (s) {
    case Status::Rational: return "Rational";
    case Status::ConditionallyRational: return "ConditionallyRational";
    case Status::NotRational: return "NotRational";
    case Status::NotKUnirational: return "NotKUnirational";
    case Status::NotRetractRational: return "NotRetractRational";
    case Status::Undecided: return "Undecided";
  }
  return "Undecided";
}

struct CaseDescriptor {
  std::string g_label;  // class of G/N
  std::string h_label;  // isomorphism type of HN/N
  std::string subcase;  // "H=G", "H=1" or the subcase name
  std::uint64_t characteristic = 0;
  bool exceptional = false;

  json to_json() const {
    return {{"G/N", g_label}, {"HN/N", h_label}, {"subcase", subcase}, {"char", characteristic}, {"exceptional", exceptional}};
  }
};

struct RationalityVerdict {
  Status status = Status::Undecided;
  bool not_k_unirational = false;
  std::vector<RatFunc> generators;
  std::vector<std::string> vars;
  std::optional<SymbolQuery> condition;
  std::optional<SymbolVerdict> condition_value;
  std::string condition_text;
  std::vector<std::string> trail;
  std::optional<CaseDescriptor> case_desc;
  std::optional<json> check;

  json to_json() const {
    json j;
    j["status"] = status_slug(status);
    j["not_k_unirational"] = not_k_unirational;
    json g = json::array();
    for (const auto& f : generators) g.push_back(to_string(f, vars));
    j["generators"] = g;
    if (condition || !condition_text.empty()) {
      json c;
      c["text"] = condition_text;
      if (condition) {
        c["kind"] = condition->kind == SymbolKind::Multiplicative ? "multiplicative" : "artin-schreier";
        c["symbol"] = {condition->a.get_str(), condition->b.get_str()};
        if (std::holds_alternative<FieldDescriptor>(condition->field))
          c["field"] = std::get<FieldDescriptor>(condition->field).to_string();
        else
          c["field"] = std::get<AbstractField>(condition->field).name;
      }
      if (condition_value) {
        c["value"] = symbol_value_name(condition_value->value);
        if (!condition_value->witness.empty()) c["witness"] = condition_value->witness;
        c["reason"] = condition_value->reason;
      }
      j["condition"] = c;
    } else {
      j["condition"] = nullptr;
    }
    j["trail"] = trail;
    if (case_desc) j["case"] = case_desc->to_json();
    if (check) j["check"] = *check;
    return j;
  }
};

struct DecideOptions {
  bool validate = true;
  std::uint64_t seed = 1;
  int trials = 200;
};

namespace detail {

inline std::string abstract_label(const std::string& catalog_label) {
  auto pos = catalog_label.find('_');
  return pos == std::string::npos ? catalog_label : catalog_label.substr(0, pos);
}

// X_j = prod_i base_i^{P(i,j)}
inline std::vector<RatFunc> monomial_images(const std::vector<RatFunc>& base, const IntMat& P) {
  std::vector<RatFunc> out;
  for (int j = 0; j < P.cols(); ++j) {
    RatFunc acc = RatFunc::constant(base[0].field(), base[0].nvars(), 1);
    for (int i = 0; i < P.rows(); ++i)
      if (P(i, j)) acc = acc * base[static_cast<std::size_t>(i)].pow(P(i, j));
    out.push_back(acc);
  }
  return out;
}

inline std::vector<RatFunc> variables(const Field& K, int n) {
  std::vector<RatFunc> v;
  for (int i = 0; i < n; ++i) v.push_back(RatFunc::var(K, n, i));
  return v;
}

// sum over the listed automorphisms of sign * aut(b), for the first basis element b giving a nonzero value
inline std::optional<Coeff> character_element(const Field& F, const std::vector<std::pair<FieldAut, int>>& chi) {
  for (int i = 0; i < F.dim(); ++i) {
    Coeff b = F.zero_c();
    b[static_cast<std::size_t>(i)] = 1;
    Coeff v = F.zero_c();
    for (const auto& [aut, sign] : chi) {
      Coeff im = aut.apply_c(b);
      if (sign > 0)
        F.add_to(v, im);
      else
        F.sub_to(v, im);
    }
    if (!Field::is_zero_c(v)) return v;
  }
  return std::nullopt;
}

// alpha with s(alpha) = -alpha, or s(alpha) = alpha + 1 in characteristic 2
inline Coeff quadratic_generator(const Field& F, const FieldAut& s) {
  if (F.characteristic() == 2) {
    for (int i = 0; i < F.dim(); ++i) {
      Coeff b = F.zero_c();
      b[static_cast<std::size_t>(i)] = 1;
      Coeff tr = F.add(b, s.apply_c(b));
      if (!Field::is_zero_c(tr)) return F.div(b, tr);
    }
    throw std::logic_error("trace form vanishes");
  }
  auto v = character_element(F, {{FieldAut::identity(F), 1}, {s, -1}});
  if (!v) throw std::logic_error("automorphism acts trivially");
  return *v;
}

inline std::optional<mpq_class> as_rational(const Field& F, const Coeff& c) {
  if (!F.is_base_c(c)) return std::nullopt;
  return c[0];
}

inline FieldDescriptor base_descriptor(const Field& F) {
  FieldDescriptor d;
  d.p = F.characteristic();
  return d;
}

inline std::string symbol_text(SymbolKind kind, const std::string& a, const std::string& b) {
  return kind == SymbolKind::Multiplicative ? "(" + a + "," + b + ")_k" : "[" + a + "," + b + ")_k";
}

// Resolve the condition symbol and set the status accordingly.
inline void resolve_condition(RationalityVerdict& v, const Field& F, const Field& k, SymbolKind kind, const Coeff& a,
                              const Coeff& b) {
  v.condition_text = symbol_text(kind, F.coeff_to_string(a), F.coeff_to_string(b));
  auto ra = as_rational(F, a), rb = as_rational(F, b);
  if (k.dim() != 1 || !ra || !rb) {
    v.status = Status::ConditionallyRational;
    v.trail.push_back("symbol over " + k.descriptor().to_string() + " left symbolic");
    return;
  }
  if (F.characteristic() == 0) {
    ra = mpq_class(square_class(*ra).squarefree);
    rb = mpq_class(square_class(*rb).squarefree);
    v.condition_text = symbol_text(kind, ra->get_str(), rb->get_str());
  }
  SymbolQuery q{kind, *ra, *rb, base_descriptor(F)};
  v.condition = q;
  v.condition_value = symbol_decide(q);
  switch (v.condition_value->value) {
    case SymbolValue::Zero:
      v.status = Status::Rational;
      v.trail.push_back("symbol " + v.condition_text + " vanishes: " + v.condition_value->reason);
      break;
    case SymbolValue::NonZero:
      v.status = Status::NotRational;
      v.not_k_unirational = true;
      v.trail.push_back("symbol " + v.condition_text + " is nonzero: " + v.condition_value->reason);
      v.trail.push_back("not k-unirational (Brauer-field obstruction)");
      break;
    case SymbolValue::Undecidable:
      v.status = Status::ConditionallyRational;
      v.trail.push_back("symbol " + v.condition_text + " undecided: " + v.condition_value->reason);
      break;
  }
}

// Invariance plus fiber certificate against the full group; tries a few primes.
inline std::optional<json> validate_generators(const QuasiMonomialAction& a, const std::vector<RatFunc>& gens,
                                               const DecideOptions& opt, std::string& failure) {
  std::vector<std::string> words;
  for (const auto& g : a.gens) words.push_back(g.name);
  if (words.empty()) words.push_back("1");
  const std::vector<std::uint32_t> primes =
      a.field.characteristic() ? std::vector<std::uint32_t>{static_cast<std::uint32_t>(a.field.characteristic())}
                               : std::vector<std::uint32_t>{7, 11, 13, 17, 19, 23};
  std::string last;
  for (auto p : primes) {
    FiberOptions fo;
    fo.p = p;
    fo.trials = opt.trials;
    fo.seed = opt.seed;
    try {
      auto rep = fixed_subfield_check(a, gens, words, fo);
      if (rep.passed()) return rep.to_json();
      last = "fiber certificate failed at p = " + std::to_string(p);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotInvariant) {
        failure = e.what();
        return std::nullopt;
      }
      last = e.what();
    }
  }
  failure = last;
  return std::nullopt;
}

inline void attach_generators(RationalityVerdict& v, const QuasiMonomialAction& a, std::vector<RatFunc> gens,
                              const DecideOptions& opt) {
  v.vars = a.vars;
  if (!opt.validate) {
    v.generators = std::move(gens);
    return;
  }
  std::string failure;
  if (auto rep = validate_generators(a, gens, opt, failure)) {
    v.generators = std::move(gens);
    v.check = *rep;
  } else {
    v.trail.push_back("generators withheld: " + failure);
  }
}

}  // namespace detail

// ---------------------------------------------------------------- rank 1

inline RationalityVerdict decide_dim1(const QuasiMonomialAction& a, const DecideOptions& opt = {}) {
  if (a.n != 1) throw Error(ErrorCode::InvalidAction, "decide_dim1 needs a rank-1 action");
  const Field& K = a.field;
  RationalityVerdict v;
  v.vars = a.vars;
  ReducedAction r = reduce_faithful(a);
  const Field& F = r.action.field;
  const RatFunc y = r.new_vars[0];
  for (const auto& l : r.log) v.trail.push_back(l);
  auto lift = [&](const Coeff& c) { return RatFunc::constant(K, 1, r.kN.to_K(c)); };
  auto one = RatFunc::constant(K, 1, 1);

  std::optional<ActionGenerator> sigma;
  for (const auto& g : r.action.gens)
    if (g.matrix(0, 0) == -1) sigma = g;
  if (!sigma) {
    v.status = Status::Rational;
    v.trail.push_back("Prop 1.7: G/N acts trivially on the variable; K(x)^G = k(y)");
    detail::attach_generators(v, a, {y}, opt);
    return v;
  }
  const Coeff& b = sigma->coeffs[0];
  if (sigma->aut.is_identity()) {
    v.status = Status::Rational;
    v.trail.push_back("Prop 1.7: K^N = k and sigma(y) = b/y; K(x)^G = k(y + b/y)");
    detail::attach_generators(v, a, {y + lift(b) / y}, opt);
    return v;
  }
  const Coeff alpha = detail::quadratic_generator(F, sigma->aut);
  const bool char2 = F.characteristic() == 2;
  if (Field::is_one_c(b)) {
    v.status = Status::Rational;
    if (char2) {
      v.trail.push_back("Prop 1.7 proof, Case 2: K(x)^G = k(1/(1+y) + alpha)");
      detail::attach_generators(v, a, {one / (one + y) + lift(alpha)}, opt);
    } else {
      v.trail.push_back("Prop 1.7 proof, Case 1: K(x)^G = k(alpha (1-y)/(1+y))");
      detail::attach_generators(v, a, {lift(alpha) * (one - y) / (one + y)}, opt);
    }
    return v;
  }
  Subfield k = fixed_subfield(F, {sigma->aut});
  v.trail.push_back("Prop 1.7(2): exceptional case, G/N = C2 acting non-trivially on K^N with sigma(y) = b/y");
  Coeff aval = char2 ? F.add(F.mul(alpha, alpha), alpha) : F.mul(alpha, alpha);
  detail::resolve_condition(v, F, k.field, char2 ? SymbolKind::ArtinSchreier : SymbolKind::Multiplicative, aval, b);
  return v;
}

// ---------------------------------------------------------------- rank 2

namespace detail {

struct Dim2Analysis {
  ReducedAction red;
  std::vector<GroupElem> elems;  // of the reduced action
  Identification id;
  MatList H;                     // normalized HN/N
  CaseDescriptor desc;
};

inline std::string subcase_of(const std::string& g, const MatList& H, std::size_t order) {
  using namespace mats;
  if (H.size() == order) return "H=G";
  if (H.size() == 1) return "H=1";
  auto is = [&](const MatList& gens) { return same_group(H, closure(gens, 2)); };
  const IntMat r2 = rho() * rho();
  const IntMat lam = tau() * sigma();
  if (g == "V4_1") {
    if (is({minus_I()})) return "1.1";
    if (is({lambda()})) return "1.2";
    if (is({-lambda()})) return "1.3";
  } else if (g == "V4_2") {
    if (is({minus_I()})) return "2.1";
    if (is({tau()})) return "2.2";
    if (is({-tau()})) return "2.3";
  } else if (g == "C4") {
    if (is({minus_I()})) return "3";
  } else if (g == "S3_1") {
    if (is({r2})) return "4";
  } else if (g == "S3_2") {
    if (is({r2})) return "5";
  } else if (g == "C6") {
    if (is({minus_I()})) return "6.1";
    if (is({r2})) return "6.2";
  } else if (g == "D4") {
    if (is({minus_I()})) return "7.1";
    if (is({minus_I(), lam})) return "7.2";
    if (is({minus_I(), tau()})) return "7.3";
    if (is({sigma()})) return "7.4";
  } else if (g == "D6") {
    if (is({minus_I()})) return "8.1";
    if (is({r2})) return "8.2";
    if (is({rho()})) return "8.3";
    if (is({r2, tau()})) return "8.4";
    if (is({r2, -tau()})) return "8.5";
  }
  throw std::logic_error("normal subgroup not in the case list for " + g);
}

inline Dim2Analysis analyze_dim2(const QuasiMonomialAction& a) {
  if (a.n != 2) throw Error(ErrorCode::InvalidAction, "expected a rank-2 action");
  Dim2Analysis d;
  d.red = reduce_faithful(a);
  const auto& ra = d.red.action;
  if (!ra.purely) throw Error(ErrorCode::InvalidAction, "action is not purely quasi-monomial after reduction");
  d.elems = group_elements(ra);
  MatList G, H;
  for (const auto& g : d.elems) {
    G.push_back(g.m);
    if (g.aut.is_identity()) H.push_back(g.m);
  }
  d.id = identify_gl2_class(G);
  d.H = conjugate_group(d.id.P, H);
  d.desc.g_label = d.id.label;
  d.desc.h_label = H.size() == 1 ? "C1" : abstract_label(identify_gl2_class(H).label);
  d.desc.characteristic = a.field.characteristic();
  d.desc.subcase = subcase_of(d.id.label, d.H, G.size());
  d.desc.exceptional = d.desc.characteristic != 2 && (d.desc.subcase == "3" || d.desc.subcase == "7.1");
  return d;
}

struct FormulaSet {
  std::vector<std::pair<std::string, std::string>> defs;
  std::vector<std::string> gens;
  std::string source;
};

// Generators of K(x,y)^G in normalized coordinates x, y; alpha is the
// quadratic generator of K^N over k.
inline std::optional<FormulaSet> subcase_formulas(const std::string& g, const std::string& sub, std::uint64_t p) {
  const bool c2 = p == 2, c3 = p == 3;
  const std::pair<std::string, std::string> s{"s", "(x*y+1)/(x+y)"};
  const std::pair<std::string, std::string> t{"t", c2 ? "x*(y^2+1)/(y*(x^2+1))" : "(x*y-1)/(x-y)"};
  const std::pair<std::string, std::string> S{"S", "(x^2*y+x*y^2-3*x*y+1)/(x^2*y^2-3*x*y+x+y)"};
  const std::pair<std::string, std::string> T{
      "T", c3 ? "x*(x^3*y^3+y^3+1)/(y*(x^3*y^3+x^3+1))"
              : "(x*y+y+1)*(x^2*y^2-x^2*y+x^2-x*y-x+1)/((x*y+x+1)*(x^2*y^2-3*x*y+x+y))"};
  if (sub == "H=G") {
    if (g == "C1") return FormulaSet{{}, {"x", "y"}, "trivial action"};
    if (g == "C2_1") return FormulaSet{{s, t}, {"s", "t"}, "Lemma 3.2"};
    if (g == "C3") return FormulaSet{{S, T}, {"S", "T"}, "Lemma 3.3"};
    return std::nullopt;
  }
  if (sub == "1.1")
    return c2 ? FormulaSet{{s, t}, {"alpha+1/(s+1)", "t"}, "Subcase 1.1"}
              : FormulaSet{{s, t}, {"alpha*(s+1)/(s-1)", "alpha*(t+1)/(t-1)"}, "Subcase 1.1"};
  if (sub == "1.2")
    return c2 ? FormulaSet{{}, {"alpha+1/(x+1)", "y+1/y"}, "Subcase 1.2"}
              : FormulaSet{{}, {"alpha*(x+1)/(x-1)", "y+1/y"}, "Subcase 1.2"};
  if (sub == "1.3")
    return c2 ? FormulaSet{{}, {"alpha+1/(y+1)", "x+1/x"}, "Subcase 1.3"}
              : FormulaSet{{}, {"alpha*(y+1)/(y-1)", "x+1/x"}, "Subcase 1.3"};
  if (sub == "2.1")
    return c2 ? FormulaSet{{s, t}, {"s", "alpha+1/(t+1)"}, "Subcase 2.1"}
              : FormulaSet{{s, t}, {"s", "alpha*t"}, "Subcase 2.1"};
  if (sub == "2.2" || sub == "2.3") {
    const std::string yy = sub == "2.2" ? "y" : "(1/y)";
    std::vector<std::pair<std::string, std::string>> uv{{"u", "x+" + yy}, {"v", "(x+" + yy + ")/(x*" + yy + ")"}};
    return c2 ? FormulaSet{uv, {"u+v", "alpha+u/(u+v)"}, "Subcase " + sub}
              : FormulaSet{uv, {"u+v", "alpha*(u-v)"}, "Subcase " + sub};
  }
  if (sub == "4" && c3) return FormulaSet{{S, T}, {"S", "alpha*(T+1)/(T-1)"}, "Case 4, char 3"};
  if (sub == "6.2" && c3) return FormulaSet{{S, T}, {"alpha*(S+1)/(S-1)", "alpha*(T+1)/(T-1)"}, "Subcase 6.2, char 3"};
  if (sub == "7.2") {
    if (c2) return FormulaSet{{s, t}, {"s+1/s", "alpha+1/(t+1)"}, "Subcase 7.2 via Subcase 1.3"};
    return FormulaSet{{s, t, {"u", "(s*t+1)/(s+t)"}, {"v", "(s*t-1)/(s-t)"}}, {"alpha*(u+v)", "u-v"}, "Subcase 7.2"};
  }
  if (sub == "7.3") {
    if (c2) return FormulaSet{{s, t}, {"alpha+1/(s+1)", "t+1/t"}, "Subcase 7.3 via Subcase 1.2"};
    return FormulaSet{{s, t}, {"alpha*(s+1)/(s-1)", "alpha*(t^2+1)/(t^2-1)"}, "Subcase 7.3"};
  }
  if (sub == "7.4") {
    if (c2)
      return FormulaSet{{s, t, {"s2", "(s*t+1)/(s+t)"}, {"t2", "s*(t^2+1)/(t*(s^2+1))"}},
                        {"alpha+1/(s2+1)", "t2"},
                        "Subcase 7.4 via Subcase 1.1"};
    return FormulaSet{{s, t, {"u", "(s-1/s)/(s*t+1/(s*t))"}, {"v", "(t+1/t)/(s*t+1/(s*t))"}}, {"alpha*u", "v"}, "Subcase 7.4"};
  }
  if (sub == "8.4" && c3) return FormulaSet{{S, T}, {"alpha*(S+1)/(S-1)", "T+1/T"}, "Subcase 8.4, char 3"};
  if (sub == "8.5" && c3) return FormulaSet{{S, T}, {"S+1/S", "alpha*(T+1)/(T-1)"}, "Subcase 8.5, char 3"};
  return std::nullopt;
}

inline std::string axiom_for(const std::string& sub, std::uint64_t p) {
  const bool c2 = p == 2, c3 = p == 3;
  if (sub == "3" || sub == "7.1") return "Thm 1.11 (char 2 branch)";
  if (sub == "4") return c3 ? "Case 4" : "Case 4 via Lemma 4.1";
  if (sub == "5") return "Case 5 via Thm 1.11";
  if (sub == "6.1") return "Subcase 6.1 via Thm 1.11";
  if (sub == "6.2") return c2 ? "Subcase 6.2 via Lemma 4.1(4)" : "Subcase 6.2 via Lemma 4.1(3)";
  if (sub == "8.1") return "Subcase 8.1 via Thm 1.11";
  if (sub == "8.2") return c3 ? "Subcase 8.2 via Thm 1.11" : (c2 ? "Subcase 8.2 via Lemma 4.1(4)" : "Subcase 8.2 via Lemma 4.1(3)");
  if (sub == "8.3") return "Subcase 8.3 via Case 5";
  if (sub == "8.4") return "Subcase 8.4 via Thm 1.11";
  if (sub == "8.5") return "Subcase 8.5 via Lemma 4.1(3),(4)";
  return "Subcase " + sub;
}

inline const GroupElem& elem_with_matrix(const Dim2Analysis& d, const IntMat& normalized) {
  const IntMat target = d.id.P * normalized * d.id.P.inverse();
  for (const auto& g : d.elems)
    if (g.m == target) return g;
  throw std::logic_error("normalized element missing");
}

}  // namespace detail

inline CaseDescriptor classify_case(const QuasiMonomialAction& a) {
  if (a.n != 2) throw Error(ErrorCode::InvalidAction, "classify_case needs a rank-2 action");
  ReducedAction r = reduce_faithful(a);
  if (!r.action.purely) {
    // normal forms (i)/(ii): sigma: sqrt(a) -> -sqrt(a), u -> 1/u, v -> c/v
    const auto& gens = r.action.gens;
    if (gens.size() == 1 && gens[0].matrix == mats::minus_I() && !gens[0].aut.is_identity() &&
        (Field::is_one_c(gens[0].coeffs[0]) || Field::is_one_c(gens[0].coeffs[1]))) {
      CaseDescriptor d;
      d.g_label = r.kN.field.dim() == a.field.dim() ? "C4" : "D4";
      d.h_label = "C2";
      d.subcase = d.g_label == "C4" ? "3" : "7.1";
      d.characteristic = a.field.characteristic();
      d.exceptional = d.characteristic != 2;
      return d;
    }
    throw Error(ErrorCode::InvalidAction, "not purely quasi-monomial and not in a reduced exceptional form");
  }
  return detail::analyze_dim2(a).desc;
}

inline RationalityVerdict decide_dim2_purely(const QuasiMonomialAction& a, const DecideOptions& opt = {}) {
  if (a.n != 2) throw Error(ErrorCode::InvalidAction, "decide_dim2_purely needs a rank-2 action");
  const Field& K = a.field;
  RationalityVerdict v;
  v.vars = a.vars;
  ReducedAction r0 = reduce_faithful(a);

  if (!r0.action.purely) {
    // reduced normal form sigma: u -> c1/u, v -> c2/v with one of c1, c2 equal to 1
    CaseDescriptor cd;
    try {
      cd = classify_case(a);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidAction) throw;
      v.status = Status::Undecided;
      v.trail.push_back("quasi-monomial rank-2 action outside the normal forms (i)/(ii)");
      return v;
    }
    v.case_desc = cd;
    const auto& g = r0.action.gens[0];
    const Field& F = r0.action.field;
    const Coeff c = Field::is_one_c(g.coeffs[0]) ? g.coeffs[1] : g.coeffs[0];
    v.trail.push_back("Thm 1.8 normal form " + std::string(cd.g_label == "C4" ? "(i)" : "(ii)") + ": (G/N,HN/N) = (" +
                      cd.g_label + ",C2)");
    if (cd.characteristic == 2) {
      v.status = Status::Rational;
      v.trail.push_back("Thm 1.11 (char 2 branch)");
      return v;
    }
    v.trail.push_back("Lemma 4.1(1): rational iff (a,c)_k = 0");
    Coeff alpha = detail::quadratic_generator(F, g.aut);
    Subfield k = fixed_subfield(F, {g.aut});
    detail::resolve_condition(v, F, k.field, SymbolKind::Multiplicative, F.mul(alpha, alpha), c);
    return v;
  }

  detail::Dim2Analysis d = detail::analyze_dim2(a);
  v.case_desc = d.desc;
  const Field& F = d.red.action.field;
  for (const auto& l : d.red.log) v.trail.push_back(l);
  const std::string& sub = d.desc.subcase;
  const std::string g = d.desc.g_label;
  const std::uint64_t p = d.desc.characteristic;
  v.trail.push_back("G/N identified as " + g + ", HN/N = " + d.desc.h_label);

  // normalized coordinates over K
  std::vector<RatFunc> XY = detail::monomial_images(d.red.new_vars, d.id.P);
  std::optional<Coeff> alphaK;
  const FieldAut* flip = nullptr;
  for (const auto& e : d.elems)
    if (!e.aut.is_identity()) flip = &e.aut;

  if (d.desc.exceptional) {
    if (sub == "3") {
      v.trail.push_back("Thm 1.8(i): (G/N,HN/N) = (C4,C2); rational iff (a,-1)_k = 0");
      Coeff alpha = detail::quadratic_generator(F, *flip);
      Subfield k = fixed_subfield(F, field_parts(d.elems));
      detail::resolve_condition(v, F, k.field, SymbolKind::Multiplicative, F.mul(alpha, alpha), F.scalar_c(-1));
    } else {
      v.trail.push_back("Thm 1.8(ii): (G/N,HN/N) = (D4,C2); rational iff (a,-b)_k = 0");
      const GroupElem& sg = detail::elem_with_matrix(d, mats::sigma());
      const GroupElem& tg = detail::elem_with_matrix(d, mats::tau());
      const FieldAut id = FieldAut::identity(F);
      const FieldAut st = sg.aut.compose(tg.aut);
      auto alpha = detail::character_element(F, {{id, 1}, {tg.aut, 1}, {sg.aut, -1}, {st, -1}});
      auto beta = detail::character_element(F, {{id, 1}, {sg.aut, 1}, {tg.aut, -1}, {st, -1}});
      if (!alpha || !beta) throw std::logic_error("K^N is not biquadratic");
      Subfield k = fixed_subfield(F, field_parts(d.elems));
      detail::resolve_condition(v, F, k.field, SymbolKind::Multiplicative, F.mul(*alpha, *alpha),
                                F.neg(F.mul(*beta, *beta)));
    }
    return v;
  }

  v.status = Status::Rational;
  if (sub == "H=1") {
    v.trail.push_back("Thm 1.11: G/N acts faithfully on K^N; two-dimensional tori are rational");
    return v;
  }
  if (sub == "H=G") v.trail.push_back("Thm 1.13: G/N acts trivially on K^N");
  auto fs = detail::subcase_formulas(g, sub, p);
  if (sub != "H=G") v.trail.push_back("Thm 1.8 proof, " + (fs ? fs->source : detail::axiom_for(sub, p)));
  if (!fs) return v;
  if (sub == "H=G") v.trail.push_back(fs->source);

  ExprContext ctx{K, a.vars, {}};
  ctx.defs["x"] = XY[0];
  ctx.defs["y"] = XY[1];
  if (flip) {
    alphaK = d.red.kN.to_K(detail::quadratic_generator(F, *flip));
    ctx.defs["alpha"] = RatFunc::constant(K, 2, *alphaK);
  }
  for (const auto& [name, text] : fs->defs) ctx.defs[name] = parse_expr(text, ctx);
  std::vector<RatFunc> gens;
  for (const auto& text : fs->gens) gens.push_back(parse_expr(text, ctx));
  detail::attach_generators(v, a, gens, opt);
  return v;
}

// Embedding-problem reading of the exceptional verdicts.
inline RationalityVerdict annotate_embedding(RationalityVerdict v, const CaseDescriptor& c) {
  if (!c.exceptional) return v;
  std::string a = "a", b = "b";
  if (v.condition) {
    a = v.condition->a.get_str();
    b = mpq_class(-v.condition->b).get_str();
  }
  std::string k = "k";
  if (v.condition && std::holds_alternative<FieldDescriptor>(v.condition->field))
    k = std::get<FieldDescriptor>(v.condition->field).p ? "F_" + std::to_string(std::get<FieldDescriptor>(v.condition->field).p) : "Q";
  std::string ext, target;
  if (c.g_label == "C4") {
    ext = k + "(sqrt(" + a + "))/" + k;
    target = "a C4-extension";
  } else {
    ext = k + "(sqrt(" + a + "),sqrt(" + b + "))/" + k;
    target = "a D4-extension";
  }
  std::string verb = v.status == Status::Rational ? " embeds in " : v.status == Status::NotRational ? " does not embed in " : " embeds iff the symbol vanishes in ";
  v.trail.push_back("Prop 4.2: " + ext + verb + target);
  return v;
}

// ---------------------------------------------------------------- affine invariants

struct AffineElem {
  FieldAut aut;  // action on L
  Coeff a, b;    // z -> a z + b
};

// G-invariant polynomial in one variable z over L of minimal degree.
inline Poly invariant_poly_affine(const Field& L, const std::vector<AffineElem>& group) {
  if (group.empty()) throw Error(ErrorCode::InvalidAction, "empty group");
  const Poly z = Poly::var(L, 1, 0);
  bool trivial = true, signs = true, shifts = true;
  for (const auto& g : group) {
    const bool a1 = Field::is_one_c(g.a), am1 = Field::is_one_c(L.neg(g.a)), b0 = Field::is_zero_c(g.b);
    trivial = trivial && a1 && b0;
    signs = signs && (a1 || am1) && b0;
    shifts = shifts && a1 && (b0 || Field::is_one_c(g.b));
  }
  if (trivial) return z;
  if (signs) return z * z;
  if (L.characteristic() == 2 && shifts) return z * z + z;
  const std::uint64_t p = L.characteristic();
  if (p && group.size() % p == 0)
    throw Error(ErrorCode::ModularCharacterUnsupported, "characteristic divides the group order");
  auto image = [&](const AffineElem& g) {
    return Poly::constant(L, 1, g.a) * z + Poly::constant(L, 1, g.b);
  };
  for (unsigned d = 1; d <= group.size(); ++d)
    for (int i = 0; i < L.dim(); ++i) {
      Coeff c = L.zero_c();
      c[static_cast<std::size_t>(i)] = 1;
      Poly f(L, 1);
      for (const auto& g : group) f = f + Poly::constant(L, 1, g.aut.apply_c(c)) * image(g).pow(d);
      if (f.total_degree() > 0) return f;
    }
  throw std::logic_error("Reynolds averaging found no invariant");
}

// ---------------------------------------------------------------- decomposable lattices

namespace detail {

inline IntMat block_of(const IntMat& m, int start, int size) {
  IntMat b(size, size);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) b(i, j) = m(start + i, start + j);
  return b;
}

inline IntMat block_diag(const IntMat& a, const IntMat& b) {
  IntMat m(a.rows() + b.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) m(a.rows() + i, a.cols() + j) = b(i, j);
  return m;
}

struct Split {
  MatList G;       // conjugated by U
  MatList B1, B2;  // block images, indexed like G
};

inline Split split_group(const QuasiMonomialAction& a, const IntMat& U, const std::vector<int>& blocks) {
  for (const auto& g : a.gens)
    if (!g.aut.is_identity()) throw Error(ErrorCode::InvalidAction, "expected a purely monomial action over k");
  if (!a.purely) throw Error(ErrorCode::InvalidAction, "expected a purely monomial action");
  if (U.rows() != a.n || U.cols() != a.n) throw Error(ErrorCode::DecompositionInvalid, "split matrix has the wrong size");
  MatList G;
  for (const auto& g : group_elements(a)) G.push_back(g.m);
  if (!check_block_decomposition(G, U, blocks))
    throw Error(ErrorCode::DecompositionInvalid, "U^-1 G U is not block diagonal for the given blocks");
  Split s;
  for (const auto& g : G) {
    IntMat c = conjugate(U, g);
    s.G.push_back(c);
    s.B1.push_back(block_of(c, 0, blocks[0]));
    s.B2.push_back(block_of(c, blocks[0], blocks[1]));
  }
  return s;
}

inline MatList distinct(const MatList& m) {
  std::set<IntMat> s(m.begin(), m.end());
  return {s.begin(), s.end()};
}

// image of {g : g acts trivially on `on`} in `other`
inline MatList kernel_image(const MatList& on, const MatList& other) {
  MatList out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i].is_identity()) out.push_back(other[i]);
  return distinct(out);
}

}  // namespace detail

inline RationalityVerdict decide_rank4_decomposable(const QuasiMonomialAction& a, const IntMat& U, const std::vector<int>& blocks) {
  if (a.n != 4) throw Error(ErrorCode::InvalidAction, "expected rank 4");
  if (blocks.size() != 2 || blocks[0] + blocks[1] != 4 || blocks[0] < 1 || blocks[1] < 1)
    throw Error(ErrorCode::DecompositionInvalid, "blocks must be 3+1, 1+3 or 2+2");
  detail::Split s = detail::split_group(a, U, blocks);
  RationalityVerdict v;
  v.vars = a.vars;
  v.status = Status::Rational;
  if (blocks[0] != 2) {
    v.trail.push_back("Thm 1.10: 3+1 split; z = (y-1)/(y+1) (or 1/(y+1) in char 2) and Lemma 5.1 give k(M)^G = k(x1,x2,x3)^G(f)");
    v.trail.push_back("Thm 1.14: k(x1,x2,x3)^G is rational over k");
    return v;
  }
  const std::uint64_t p = a.field.characteristic();
  MatList G1 = detail::distinct(s.B1), G2 = detail::distinct(s.B2);
  MatList N1on2 = detail::kernel_image(s.B1, s.B2), N2on1 = detail::kernel_image(s.B2, s.B1);
  auto exceptional = [&](const MatList& Gi, const MatList& Hi) {
    if (p == 2 || Hi.size() != 2) return std::string();
    std::string l = identify_gl2_class(Gi).label;
    return (l == "C4" || l == "D4") ? l : std::string();
  };
  const std::string e2 = exceptional(G2, N1on2), e1 = exceptional(G1, N2on1);
  v.trail.push_back("Thm 1.10: 2+2 split; Thm 1.8 applied to K(y1,y2)^G and K'(x1,x2)^G");
  if (e1.empty() || e2.empty()) {
    v.trail.push_back("Step 1: one side is not exceptional; Thm 1.13 finishes");
    return v;
  }
  v.trail.push_back("Step 2: both sides exceptional, N1 = N2 = C2");
  if (e1 == "D4") {
    v.trail.push_back("Step 3, Case 2: G/N1 = G/N2 = D4");
    return v;
  }
  v.trail.push_back("Step 3, Case 1: G/N1 = C4 and G/N2 = C4");
  // explicit chain in the normalized configuration
  const IntMat P1 = identify_gl2_class(G1).P, P2 = identify_gl2_class(G2).P;
  const IntMat V = U * detail::block_diag(P1, P2);
  MatList ref;
  for (int i = 0; i < 4; ++i)
    for (int j = i % 2; j < 4; j += 2) {
      IntMat si = IntMat::identity(2), sj = IntMat::identity(2);
      for (int k = 0; k < i; ++k) si = si * mats::sigma();
      for (int k = 0; k < j; ++k) sj = sj * mats::sigma();
      ref.push_back(detail::block_diag(si, sj));
    }
  MatList conj;
  for (const auto& g : group_elements(a)) conj.push_back(conjugate(V, g.m));
  if (!same_group(conj, ref)) {
    v.trail.push_back("configuration differs from the normalized Case 1 group; generators omitted");
    return v;
  }
  const Field& K = a.field;
  auto X = detail::monomial_images(detail::variables(K, 4), V);
  ExprContext ctx{K, a.vars, {}};
  const char* names[] = {"x1", "x2", "y1", "y2"};
  for (int i = 0; i < 4; ++i) ctx.defs[names[i]] = X[static_cast<std::size_t>(i)];
  const std::vector<std::pair<std::string, std::string>> defs = {
      {"s", "(x1*x2+1)/(x1+x2)"},       {"t", "(x1*x2-1)/(x1-x2)"},          {"u", "(s+1)/(s-1)"},
      {"z1", "(y1*y2+1)/(y1+y2)"},      {"z2", "(y1*y2-1)/(y1-y2)"},         {"f", "u*(z1-1/z1)"},
      {"w", "(z1+1)/(z1-1)*(z2+1/z2)"}, {"P", "(z2+1/z2)/(z2*t-1/(z2*t))"}, {"Q", "(t+1/t)/(z2*t-1/(z2*t))"}};
  for (const auto& [n, t] : defs) ctx.defs[n] = parse_expr(t, ctx);
  std::vector<RatFunc> gens{ctx.defs["f"], ctx.defs["w"], ctx.defs["P"], ctx.defs["Q"]};
  for (const auto& g : a.gens)
    for (const auto& f : gens)
      if (apply(K, from_generator(g), f) != f) throw std::logic_error("Case 1 generator not invariant under " + g.name);
  v.generators = gens;
  v.trail.push_back("generators f, w, P, Q from the chain s, t, u, z1, z2 (invariance verified; degree certified along the tower)");
  return v;
}

namespace detail {

// the exceptional rank-5 D4 lattice: x-block and y-block images of sigma and tau
inline std::pair<MatList, MatList> exceptional_rank5_lattice() {
  IntMat s1{{0, 1, -1}, {1, 0, -1}, {0, 0, -1}};
  IntMat t1{{0, -1, 1}, {0, -1, 0}, {1, -1, 0}};
  MatList full = closure({block_diag(s1, mats::sigma()), block_diag(t1, mats::tau())}, 5);
  MatList x, y;
  for (const auto& g : full) {
    x.push_back(block_of(g, 0, 3));
    y.push_back(block_of(g, 3, 2));
  }
  return {x, y};
}

// unimodular P with A_i P = P B_i for all i, searched over small combinations of an integral intertwiner basis
inline std::optional<IntMat> find_intertwiner(const MatList& A, const MatList& B, int range = 2) {
  const int n = A[0].rows();
  IntMat sys(static_cast<int>(A.size()) * n * n, n * n);
  int row = 0;
  for (std::size_t g = 0; g < A.size(); ++g)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j, ++row)
        for (int k = 0; k < n; ++k) {
          sys(row, k * n + j) += A[g](i, k);
          sys(row, i * n + k) -= B[g](k, j);
        }
  IntMat ker = integer_kernel(sys);
  const int d = ker.cols();
  if (d == 0) return std::nullopt;
  std::vector<int> c(static_cast<std::size_t>(d), -range);
  while (true) {
    IntMat P(n, n);
    for (int e = 0; e < n * n; ++e) {
      long long acc = 0;
      for (int k = 0; k < d; ++k) acc += c[static_cast<std::size_t>(k)] * ker(e, k);
      P(e / n, e % n) = acc;
    }
    if (P.is_unimodular()) return P;
    int k = 0;
    while (k < d && c[static_cast<std::size_t>(k)] == range) c[static_cast<std::size_t>(k++)] = -range;
    if (k == d) return std::nullopt;
    ++c[static_cast<std::size_t>(k)];
  }
}

}  // namespace detail

inline RationalityVerdict decide_rank5_3plus2(const QuasiMonomialAction& a, const IntMat& U, const std::vector<int>& blocks) {
  if (a.n != 5) throw Error(ErrorCode::InvalidAction, "expected rank 5");
  if (blocks != std::vector<int>{3, 2}) throw Error(ErrorCode::DecompositionInvalid, "blocks must be 3+2");
  detail::Split s = detail::split_group(a, U, blocks);
  const MatList K1 = detail::kernel_image(s.B1, s.G), K2 = detail::kernel_image(s.B2, s.G);
  if (K1.size() > 1 && K2.size() > 1)
    throw Error(ErrorCode::FaithfulnessPreconditionFailed, "neither block is a faithful G-lattice");
  RationalityVerdict v;
  v.vars = a.vars;
  v.status = Status::Rational;
  if (K1.size() == 1) {
    v.trail.push_back("Thm 6.2: M1 faithful; Thm 1.11 over k(M1)^G and Thm 1.14");
    return v;
  }
  if (K1.size() == s.G.size()) {
    v.trail.push_back("Thm 6.2 Step 1: H = G acts trivially on M1; Thm 1.13");
    return v;
  }
  const std::uint64_t p = a.field.characteristic();
  bool match = false;
  if (p != 2 && s.G.size() == 8) {
    const auto id2 = identify_gl2_class(detail::distinct(s.B2));
    if (id2.label == "D4") {
      auto [rx, ry] = detail::exceptional_rank5_lattice();
      MatList A, B;
      for (std::size_t i = 0; i < s.G.size(); ++i) {
        IntMat n2 = conjugate(id2.P, s.B2[i]);
        for (std::size_t j = 0; j < ry.size(); ++j)
          if (ry[j] == n2) {
            A.push_back(s.B1[i]);
            B.push_back(rx[j]);
          }
      }
      match = A.size() == s.G.size() && detail::find_intertwiner(A, B).has_value();
    }
  }
  if (match) {
    v.status = Status::NotRetractRational;
    v.not_k_unirational = false;
    v.trail.push_back("Thm 6.2: exceptional D4 lattice matched; the x-block is conjugate to G_{3,1,4}");
    v.trail.push_back("Thm 6.4: k(M)^G is not retract k-rational, in particular not k-rational");
    return v;
  }
  v.trail.push_back("Thm 6.2 Steps 2-3: M2 faithful, H a proper normal subgroup, not the exceptional lattice");
  return v;
}

// Free composite of two torus function fields.
inline RationalityVerdict decide_tori_decomposable(const RationalityVerdict& v1, const RationalityVerdict& v2, int r1, int r2) {
  RationalityVerdict v;
  auto is = [](const RationalityVerdict& x, Status s) { return x.status == s; };
  if (is(v1, Status::NotRetractRational) || is(v2, Status::NotRetractRational)) {
    v.status = Status::NotRetractRational;
    v.trail.push_back("Thm 6.5(1): retract rationality holds iff it holds for both factors");
    return v;
  }
  if (is(v1, Status::Rational) && is(v2, Status::Rational)) {
    v.status = Status::Rational;
    v.trail.push_back("Thm 6.5(2): both factors rational");
    return v;
  }
  auto nonrational = [](const RationalityVerdict& x) {
    return x.status == Status::NotRational || x.status == Status::NotKUnirational;
  };
  if (r1 <= 3 && r2 <= 3 && (nonrational(v1) || nonrational(v2))) {
    v.status = Status::NotRational;
    v.trail.push_back("Thm 6.5(3): ranks at most 3, rational iff both factors rational");
    return v;
  }
  v.status = Status::Undecided;
  v.trail.push_back("Thm 6.5: insufficient information on the factors");
  return v;
}

// ---------------------------------------------------------------- dispatch

struct SplitSpec {
  IntMat U;
  std::vector<int> blocks;
};

inline SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  s.U = IntMat::from_json(j.at("U"));
  s.blocks = j.at("blocks").get<std::vector<int>>();
  return s;
}

inline RationalityVerdict decide(const QuasiMonomialAction& a, const std::optional<SplitSpec>& split = std::nullopt,
                                 const DecideOptions& opt = {}) {
  auto rep = validate_action(a);
  if (!rep.valid) throw Error(ErrorCode::InvalidAction, rep.violations.front());
  if (a.n == 1) return decide_dim1(a, opt);
  if (a.n == 2) {
    RationalityVerdict v = decide_dim2_purely(a, opt);
    if (v.case_desc) {
      const CaseDescriptor cd = *v.case_desc;
      v = annotate_embedding(std::move(v), cd);
    }
    return v;
  }
  if (split) {
    if (a.n == 4) return decide_rank4_decomposable(a, split->U, split->blocks);
    if (a.n == 5) return decide_rank5_3plus2(a, split->U, split->blocks);
  }
  RationalityVerdict v;
  v.vars = a.vars;
  v.trail.push_back("rank " + std::to_string(a.n) + (split ? " split" : " without a split") + " is outside the decided range");
  return v;
}

}  // namespace qmono
