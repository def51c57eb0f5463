// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "qmono/oracle.hpp"
#include "qmono/verify.hpp"

using namespace qmono;

namespace {

constexpr std::uint64_t kSeed = 20240601;

json read(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

QuasiMonomialAction data_action(const std::string& name) { return action_from_json(read(std::string(QMONO_DATA_DIR) + "/" + name)); }
SplitSpec data_split(const std::string& name) { return split_from_json(read(std::string(QMONO_DATA_DIR) + "/" + name)); }

const std::vector<json>& corpus() {
  static const std::vector<json> c = load_corpus(QMONO_FIXTURE_DIR);
  return c;
}

std::optional<QuasiMonomialAction> action_of(const json& fx) {
  if (!fx.contains("action")) return std::nullopt;
  json j = fx.at("action");
  j["field"] = fx.at("field");
  j["vars"] = fx.at("vars");
  return action_from_json(j);
}

json fixture(const std::string& id) {
  for (const auto& fx : corpus())
    if (fx.value("id", "") == id) return fx;
  throw std::runtime_error("missing fixture " + id);
}

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// ---------------------------------------------------------------- 1. catalog

Outcome catalog() {
  Outcome o;
  const std::vector<int> orders = {1, 2, 2, 2, 3, 4, 6, 4, 4, 6, 6, 8, 12};
  const auto& cat = gl2_catalog();
  if (cat.size() != 13) {
    o.fail("catalog has " + std::to_string(cat.size()) + " entries");
    return o;
  }
  for (std::size_t i = 0; i < cat.size(); ++i) {
    MatList g = closure(cat[i].gens, 2);
    if (static_cast<int>(g.size()) != orders[i]) o.fail(cat[i].label + " closes to order " + std::to_string(g.size()));
    for (std::size_t j = 0; j < i; ++j)
      if (group_invariants(g) == group_invariants(cat[j].elements)) o.fail(cat[i].label + " and " + cat[j].label + " share invariants");
    auto id = identify_gl2_class(g);
    if (id.label != cat[i].label || !same_group(conjugate_group(id.P, g), g)) o.fail(cat[i].label + " is not a fixed point");
  }
  o.detail = o.ok ? "13 classes, orders (1,2,2,2,3,4,6,4,4,6,6,8,12)" : o.detail;
  return o;
}

// ---------------------------------------------------------------- 2. identity suite

Outcome suite() {
  Outcome o;
  SuiteSummary s = run_suite(corpus(), "", kSeed);
  auto m = check_manifest(read(std::string(QMONO_FIXTURE_DIR) + "/manifest.json"), corpus());
  for (const auto& r : s.results)
    if (!r.passed) o.fail(r.id + ": " + r.error);
  if (!m.complete) o.fail("manifest unmapped: " + m.to_json()["unmapped"].dump());
  if (o.ok)
    o.detail = std::to_string(s.results.size()) + " fixtures, " + std::to_string(m.mapped) + " manifest entries mapped, " +
               std::to_string(m.out_of_scope) + " out of scope";
  return o;
}

// ---------------------------------------------------------------- 3. Hilbert symbols

// a x^2 + b y^2 = z^2 has a primitive solution modulo p^k
bool locally_solvable_mod(long a, long b, long p, int k) {
  long q = 1;
  for (int i = 0; i < k; ++i) q *= p;
  std::vector<char> sq(static_cast<std::size_t>(q), 0);
  for (long z = 0; z < q; ++z) sq[static_cast<std::size_t>(z * z % q)] = 1;
  auto md = [&](long v) { return ((v % q) + q) % q; };
  // primitive forces x or y to be a unit; scale it to 1
  for (long t = 0; t < q; ++t) {
    if (sq[static_cast<std::size_t>(md(a + b * md(t * t)))]) return true;
    if (sq[static_cast<std::size_t>(md(a * md(t * t) + b))]) return true;
  }
  return false;
}

// brute-force point on a x^2 + b y^2 = z^2 with height <= H
bool has_point(long a, long b, long H) {
  for (long x = 0; x <= H; ++x)
    for (long y = 0; y <= H; ++y) {
      if (x == 0 && y == 0) continue;
      const long v = a * x * x + b * y * y;
      if (v < 0) continue;
      const long z = std::lround(std::sqrt(static_cast<double>(v)));
      for (long c = std::max(0L, z - 1); c <= z + 1; ++c)
        if (c * c == v) return true;
    }
  return false;
}

std::vector<long> prime_factors(long n) {
  std::vector<long> out;
  n = std::labs(n);
  for (long p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  if (n > 1) out.push_back(n);
  return out;
}

Outcome hilbert() {
  Outcome o;
  std::vector<long> sf;
  for (long v = 1; v <= 30; ++v) {
    bool ok = true;
    for (long p = 2; p * p <= v; ++p)
      if (v % (p * p) == 0) ok = false;
    if (ok) {
      sf.push_back(v);
      sf.push_back(-v);
    }
  }
  std::size_t pairs = 0, split = 0, certified = 0;
  for (long a : sf)
    for (long b : sf) {
      ++pairs;
      const bool point = has_point(a, b, 200);
      // an obstruction at some place certifies insolubility
      bool obstructed = a < 0 && b < 0;
      std::vector<long> ps = prime_factors(2 * a * b);
      for (long p : ps)
        if (!locally_solvable_mod(a, b, p, p == 2 ? 4 : 2)) obstructed = true;
      if (point && obstructed) o.fail("point found despite local obstruction at (" + std::to_string(a) + "," + std::to_string(b) + ")");
      if (!point && !obstructed) o.fail("no point and no obstruction at (" + std::to_string(a) + "," + std::to_string(b) + ")");
      if (!point && obstructed) ++certified;
      split += point;
      const bool zero = hilbert_symbol_Q(a, b).value == SymbolValue::Zero;
      if (zero != point) o.fail("hilbert_symbol_Q(" + std::to_string(a) + "," + std::to_string(b) + ") disagrees with the conic search");
    }
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<long> num(-100000, 100000), den(1, 1000);
  int formula = 0;
  for (int i = 0; i < 1000; ++i) {
    mpq_class a(num(rng), den(rng)), b(num(rng), den(rng));
    a.canonicalize();
    b.canonicalize();
    if (a == 0 || b == 0) continue;
    int prod = 1;
    for (const auto& p : relevant_places(a, b)) prod *= hilbert_local(a, b, p);
    if (prod != 1) o.fail("product formula fails for (" + a.get_str() + "," + b.get_str() + ")");
    ++formula;
  }
  if (o.ok)
    o.detail = std::to_string(pairs) + " pairs (" + std::to_string(split) + " split, " + std::to_string(certified) +
               " with local obstruction), product formula on " + std::to_string(formula) + " pairs";
  return o;
}

// ---------------------------------------------------------------- 4. decision table

Outcome table() {
  Outcome o;
  const std::map<std::string, Status> expected = {
      {"example4.3/L-alpha-beta", Status::NotRational},   {"example4.3/L-alpha-alphabeta", Status::NotRational},
      {"example4.3/L-beta-alpha", Status::Rational},      {"example4.3/L-beta-alphabeta", Status::Rational},
      {"example4.3/L-alphabeta-alpha", Status::Rational}, {"example4.3/L-alphabeta-beta", Status::Rational}};
  for (const auto& [id, status] : expected) {
    auto v = decide(*action_of(fixture(id)));
    if (v.status != status) o.fail(id + " gives " + status_slug(v.status));
  }
  if (decide(data_action("prop17_b2.json")).status != Status::Rational) o.fail("b = 2 is not rational");
  if (decide(data_action("prop17_b3.json")).status != Status::NotRational) o.fail("b = 3 is not non-rational");
  if (o.ok) o.detail = "6 biquadratic fields and b in {2,3} reproduced";
  return o;
}

// ---------------------------------------------------------------- 5. exceptional lattice

Outcome exceptional() {
  Outcome o;
  auto s = data_split("split_3_2.json");
  auto ex = decide(data_action("rank5_exceptional.json"), s);
  auto pert = decide(data_action("rank5_split_y.json"), s);
  if (ex.status != Status::NotRetractRational) o.fail("exceptional action gives " + status_slug(ex.status));
  if (pert.status != Status::Rational) o.fail("split y-block gives " + status_slug(pert.status));
  if (o.ok) o.detail = "not_retract_rational vs rational";
  return o;
}

// ---------------------------------------------------------------- 6. generator certification

// Rank-4 cyclic chain: every degree-2 stage certified at p, so the composite has degree <= 8.
bool tower_certificate(std::uint32_t p) {
  int stages = 0;
  for (const auto& fx : corpus()) {
    if (fx.value("id", "").rfind("thm1.10/case1/", 0) != 0) continue;
    json g = fx;
    bool fiber = false;
    for (auto& c : g.at("claims"))
      if (c.at("kind") == "fiber") {
        c["p"] = p;
        fiber = true;
      }
    if (!fiber) continue;
    if (!run_fixture(g, kSeed).passed) return false;
    ++stages;
  }
  return stages >= 3;
}

Outcome certification() {
  Outcome o;
  struct Item {
    std::string name;
    QuasiMonomialAction a;
    std::optional<SplitSpec> split;
  };
  std::vector<Item> items;
  std::set<std::string> seen;
  for (const auto& fx : corpus()) {
    auto a = action_of(fx);
    if (!a || a->n > 2) continue;
    if (!seen.insert(action_to_json(*a).dump()).second) continue;
    items.push_back({fx.value("id", ""), *a, std::nullopt});
  }
  for (const char* f : {"inversion.json", "prop17_b2.json", "prop17_b3.json", "case3_qi.json"}) items.push_back({f, data_action(f), std::nullopt});
  items.push_back({"rank4_case1.json", data_action("rank4_case1.json"), data_split("split_2_2.json")});

  DecideOptions opt;
  opt.validate = false;
  std::size_t verdicts = 0, runs = 0, towers = 0;
  double worst = 1.0;
  for (const auto& it : items) {
    RationalityVerdict v;
    try {
      v = decide(it.a, it.split, opt);
    } catch (const Error& e) {
      o.fail(it.name + ": " + e.what());
      continue;
    }
    if (v.status != Status::Rational || v.generators.empty()) continue;
    ++verdicts;
    std::vector<std::string> words;
    for (const auto& g : it.a.gens) words.push_back(g.name);
    const std::uint64_t ch = it.a.field.characteristic();
    const std::vector<std::uint32_t> primes = ch ? std::vector<std::uint32_t>{static_cast<std::uint32_t>(ch)} : std::vector<std::uint32_t>{5, 7, 11};
    for (auto p : primes) {
      try {
        auto rep = fixed_subfield_check(it.a, v.generators, words, FiberOptions{p, 200, kSeed, std::nullopt});
        ++runs;
        if (!rep.fiber) {
          o.fail(it.name + ": candidate count differs from the rank");
          continue;
        }
        if (!rep.passed() && it.split && tower_certificate(p)) {
          ++towers;
          continue;
        }
        worst = std::min(worst, rep.fiber->fraction);
        if (!rep.passed()) o.fail(it.name + " at p = " + std::to_string(p) + ": " + rep.to_json().dump());
      } catch (const Error& e) {
        o.fail(it.name + " at p = " + std::to_string(p) + ": " + e.what());
      }
    }
  }
  if (o.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", worst);
    o.detail = std::to_string(verdicts) + " verdicts, " + std::to_string(runs) + " certificates (" + std::to_string(towers) +
               " rank-4 via the degree-2 tower), worst direct fraction " + buf;
  }
  return o;
}

// ---------------------------------------------------------------- 7. reduction

IntMat random_signed_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  IntMat m(n, n);
  for (int j = 0; j < n; ++j) m(perm[static_cast<std::size_t>(j)], j) = (rng() & 1) ? 1 : -1;
  return m;
}

json random_action(std::mt19937_64& rng) {
  static const std::vector<std::string> radicands = {"", "-1", "2", "3", "-3", "5"};
  const int n = 1 + static_cast<int>(rng() % 3);
  const std::string d = radicands[rng() % radicands.size()];
  json j;
  j["field"] = d.empty() ? json{{"base", "Q"}} : json{{"base", "Q"}, {"adjoined", {{{"sqrt", d}, {"label", "alpha"}}}}};
  std::vector<std::string> vars;
  for (int i = 0; i < n; ++i) vars.push_back("x" + std::to_string(i + 1));
  j["vars"] = vars;
  const int ngens = 1 + static_cast<int>(rng() % 2);
  json gens = json::array();
  for (int g = 0; g < ngens; ++g) {
    IntMat m = (rng() % 4 == 0) ? IntMat::identity(n) : random_signed_permutation(n, rng);
    json coeffs = json::array();
    for (int i = 0; i < n; ++i) {
      const auto r = rng() % 6;
      coeffs.push_back(r < 2 ? "1" : r < 4 ? "-1" : (d.empty() ? "-1" : (r == 4 ? "alpha" : "-alpha")));
    }
    json gj{{"name", "g" + std::to_string(g + 1)}, {"matrix", m.to_json()}, {"coeffs", coeffs}};
    if (!d.empty() && (rng() & 1)) gj["field_map"] = {{"alpha", "-alpha"}};
    gens.push_back(gj);
  }
  j["generators"] = gens;
  return j;
}

Outcome reduction() {
  Outcome o;
  std::mt19937_64 rng(kSeed);
  int accepted = 0, attempts = 0, nontrivial = 0;
  while (accepted < 50 && attempts < 5000) {
    ++attempts;
    json j = random_action(rng);
    QuasiMonomialAction a;
    std::vector<GroupElem> G;
    try {
      a = action_from_json(j);
      G = group_elements(a, 8);
      if (!validate_action(a, 8).valid) continue;
    } catch (const Error&) {
      continue;
    }
    ++accepted;
    const std::string tag = "action " + j.dump();
    try {
      KernelInfo k = kernel_rho(a);
      ReducedAction r = reduce_faithful(a);
      if (k.N.size() > 1) ++nontrivial;
      auto q = group_elements(r.action);
      std::set<IntMat> mats;
      for (const auto& g : q) mats.insert(g.m);
      if (mats.size() != q.size() || q.size() * k.N.size() != G.size()) o.fail(tag + ": reduced rho is not injective");
      for (const auto& g : k.N)
        for (const auto& f : r.new_vars)
          if (apply(a.field, g, f) != f) o.fail(tag + ": new variable not N-invariant");
      bool certified = false;
      std::string last;
      for (std::uint32_t p : {7u, 11u, 13u}) {
        try {
          auto rep = fiber_degree_check(r.new_vars, static_cast<int>(k.N.size()), p, 100, kSeed);
          if (rep.passed) {
            certified = true;
            break;
          }
          last = rep.to_json().dump();
        } catch (const Error& e) {
          last = e.what();
        }
      }
      if (!certified) o.fail(tag + ": no fiber certificate: " + last);
    } catch (const Error& e) {
      o.fail(tag + ": " + e.what());
    }
  }
  if (accepted < 50) o.fail("only " + std::to_string(accepted) + " actions generated");
  if (o.ok) o.detail = std::to_string(accepted) + " actions, " + std::to_string(nontrivial) + " with non-trivial kernel";
  return o;
}

// ---------------------------------------------------------------- 8. mutation controls

Outcome mutation() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> targets = {
      {"lemma3.2/char0/eq1", "s"}, {"lemma3.3/char0/eq2-invariance", "S"}, {"thm1.8/subcase1.1/char0", "g1"}};
  std::size_t total = 0;
  for (const auto& [id, def] : targets) {
    json fx = fixture(id);
    if (!run_fixture(fx, kSeed).passed) o.fail(id + " fails unmutated");
    for (const auto& m : all_semantic_mutants(fx, def)) {
      ++total;
      if (run_fixture(with_mutated_def(fx, def, m.mutated), kSeed).passed) o.fail(id + " accepts " + def + " = " + m.mutated);
    }
  }
  if (o.ok) o.detail = std::to_string(total) + " well-formed mutants across 3 formulas, all rejected";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double limit_s;  // 0 when unbounded
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "catalog", 1.0, catalog},           {2, "identity suite", 120.0, suite},
      {3, "hilbert symbol oracle", 60.0, hilbert}, {4, "decision table", 0.0, table},
      {5, "exceptional lattice", 0.0, exceptional}, {6, "generator certification", 120.0, certification},
      {7, "reduction", 120.0, reduction},      {8, "mutation controls", 0.0, mutation}};
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && s > c.limit_s) o.fail("runtime " + std::to_string(s) + " s exceeds " + std::to_string(c.limit_s) + " s");
    char head[160];
    std::snprintf(head, sizeof head, "%s %d %-24s %7.2fs  ", o.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), s);
    std::cout << head << o.detail << std::endl;
    failed += !o.ok;
  }
  return failed ? 1 : 0;
}
