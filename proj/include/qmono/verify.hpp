#pragma once

// Fixture-driven verification of explicit identities: invariance of candidate
// generators, induced images, rational-function identities and fiber-count
// degree certificates.

#include <fnmatch.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "qmono/action.hpp"

namespace qmono {

struct ClaimResult {
  std::string kind;
  bool passed = false;
  std::string detail;
  json extra;
};

struct FixtureResult {
  std::string id;
  bool passed = true;
  std::string error;
  std::vector<ClaimResult> claims;

  json to_json() const {
    json j{{"id", id}, {"passed", passed}};
    if (!error.empty()) j["error"] = error;
    json cs = json::array();
    for (const auto& c : claims) {
      json cj{{"kind", c.kind}, {"passed", c.passed}};
      if (!c.detail.empty()) cj["detail"] = c.detail;
      if (!c.extra.is_null()) cj["report"] = c.extra;
      cs.push_back(cj);
    }
    j["claims"] = cs;
    return j;
  }
};

struct SuiteSummary {
  std::uint64_t seed = 0;
  std::string filter;
  std::vector<FixtureResult> results;

  std::size_t failed() const {
    return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; }));
  }
  bool passed() const { return failed() == 0; }
  json to_json() const {
    json rs = json::array();
    for (const auto& r : results) rs.push_back(r.to_json());
    return {{"seed", seed}, {"filter", filter}, {"total", results.size()}, {"failed", failed()},
            {"passed", results.size() - failed()}, {"results", rs}};
  }
};

inline bool glob_match(const std::string& pattern, const std::string& text) {
  return fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

namespace detail {

// Fixture state after parsing field, variables, definitions and maps.
struct FixtureEnv {
  ExprContext ctx;
  std::optional<QuasiMonomialAction> action;
  std::map<std::string, Substitution> maps;

  RatFunc expr(const json& v) const {
    if (!v.is_string()) return parse_expr(v.dump(), ctx);
    return parse_expr(v.get<std::string>(), ctx);
  }

  // words act right to left: "a b" applies b first
  RatFunc apply_word(const std::string& word, const RatFunc& f) const {
    std::vector<std::string> toks;
    {
      std::string w;
      for (char ch : word) w += (ch == '*' ? ' ' : ch);
      std::istringstream in(w);
      std::string t;
      while (in >> t) toks.push_back(t);
    }
    bool all_maps = !toks.empty();
    for (const auto& t : toks) all_maps = all_maps && maps.count(t.substr(0, t.find('^')));
    if (!all_maps) {
      if (!action) throw Error(ErrorCode::ParseError, "word '" + word + "' names no map and the fixture has no action");
      return apply(action->field, eval_word(*action, word), f);
    }
    RatFunc r = f;
    for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
      std::string name = *it;
      long e = 1;
      if (auto pos = it->find('^'); pos != std::string::npos) {
        name = it->substr(0, pos);
        e = std::stol(it->substr(pos + 1));
        if (e < 0) throw Error(ErrorCode::ParseError, "negative powers of maps are not supported");
      }
      for (long k = 0; k < e; ++k) r = substitute(r, maps.at(name));
    }
    return r;
  }

  std::vector<RatFunc> candidates(const json& claim, const json& fx) const {
    const json& names = claim.contains("candidates") ? claim.at("candidates") : fx.at("candidates");
    std::vector<RatFunc> out;
    for (const auto& c : names) out.push_back(expr(c));
    return out;
  }

  std::vector<std::string> words(const json& claim) const {
    if (claim.contains("by")) {
      const auto& b = claim.at("by");
      if (b.is_string()) return {b.get<std::string>()};
      return b.get<std::vector<std::string>>();
    }
    std::vector<std::string> w;
    if (action)
      for (const auto& g : action->gens) w.push_back(g.name);
    else
      for (const auto& [name, s] : maps) w.push_back(name);
    return w;
  }
};

inline FixtureEnv build_env(const json& fx) {
  Field K(descriptor_from_json(fx.at("field")));
  std::vector<std::string> vars = fx.at("vars").get<std::vector<std::string>>();
  FixtureEnv env{ExprContext{K, vars, {}}, std::nullopt, {}};
  if (fx.contains("action")) {
    json aj = fx.at("action");
    aj["field"] = fx.at("field");
    aj["vars"] = vars;
    aj["n"] = vars.size();
    env.action = action_from_json(aj);
    auto rep = validate_action(*env.action);
    if (!rep.valid) {
      std::string v;
      for (const auto& s : rep.violations) v += (v.empty() ? "" : "; ") + s;
      throw Error(ErrorCode::InvalidAction, "invalid action: " + v);
    }
  }
  if (fx.contains("maps"))
    for (const auto& [name, mj] : fx.at("maps").items()) {
      Substitution s;
      std::vector<Coeff> im;
      for (int k = 0; k < K.ngens(); ++k) {
        const std::string& label = K.descriptor().adjoined[static_cast<std::size_t>(k)].label;
        if (mj.contains("field_map") && mj.at("field_map").contains(label))
          im.push_back(parse_field_constant(K, mj.at("field_map").at(label).get<std::string>()));
        else
          im.push_back(K.gen_c(k));
      }
      s.aut = FieldAut(K, im);
      if (!s.aut.is_valid()) throw Error(ErrorCode::InvalidAction, "map " + name + ": field_map is not an automorphism");
      const json& ims = mj.at("images");
      for (std::size_t i = 0; i < vars.size(); ++i)
        s.images.push_back(ims.contains(vars[i]) ? env.expr(ims.at(vars[i])) : RatFunc::var(K, static_cast<int>(vars.size()), static_cast<int>(i)));
      env.maps.emplace(name, std::move(s));
    }
  if (fx.contains("defs"))
    for (const auto& d : fx.at("defs")) {
      const std::string name = d.at(0).get<std::string>();
      RatFunc v = env.expr(d.at(1));
      env.ctx.defs.insert_or_assign(name, std::move(v));
    }
  return env;
}

inline std::string show(const RatFunc& f, const FixtureEnv& env) { return to_string(f, env.ctx.vars); }

inline ClaimResult run_claim(const FixtureEnv& env, const json& fx, const json& c, std::uint64_t seed) {
  ClaimResult r;
  r.kind = c.at("kind").get<std::string>();
  if (r.kind == "invariance") {
    auto cands = env.candidates(c, fx);
    r.passed = true;
    for (const auto& w : env.words(c))
      for (std::size_t i = 0; i < cands.size(); ++i) {
        RatFunc img = env.apply_word(w, cands[i]);
        if (img != cands[i]) {
          r.passed = false;
          r.detail = "candidate " + std::to_string(i + 1) + " moved by " + w + ": " + show(img, env);
          return r;
        }
      }
  } else if (r.kind == "image") {
    RatFunc f = env.expr(c.at("of"));
    RatFunc img = env.apply_word(c.at("by").get<std::string>(), f);
    RatFunc want = env.expr(c.at("expected"));
    r.passed = img == want;
    if (!r.passed) r.detail = "image " + show(img, env) + " differs from expected " + show(want, env);
  } else if (r.kind == "identity") {
    RatFunc diff = env.expr(c.at("lhs")) - env.expr(c.at("rhs"));
    r.passed = diff.is_zero();
    if (!r.passed) r.detail = "lhs - rhs = " + show(diff, env);
  } else if (r.kind == "fiber") {
    auto cands = env.candidates(c, fx);
    const Field& K = env.ctx.field;
    std::uint32_t p = K.characteristic() ? static_cast<std::uint32_t>(K.characteristic()) : c.value("p", 7u);
    FiberReport rep = fiber_degree_check(cands, c.at("bound").get<int>(), p, c.value("trials", 200), seed);
    r.passed = rep.passed;
    r.extra = rep.to_json();
    if (!r.passed)
      r.detail = "fiber certificate failed: " + std::to_string(rep.within_bound) + "/" + std::to_string(rep.valid_trials) + " within bound";
  } else {
    throw Error(ErrorCode::ParseError, "unknown claim kind '" + r.kind + "'");
  }
  return r;
}

}  // namespace detail

inline FixtureResult run_fixture(const json& fx, std::uint64_t seed) {
  FixtureResult res;
  res.id = fx.value("id", "");
  try {
    auto env = detail::build_env(fx);
    for (const auto& c : fx.at("claims")) {
      ClaimResult cr;
      try {
        cr = detail::run_claim(env, fx, c, seed);
      } catch (const std::exception& e) {
        cr.kind = c.value("kind", "?");
        cr.passed = false;
        cr.detail = e.what();
      }
      res.passed = res.passed && cr.passed;
      res.claims.push_back(std::move(cr));
    }
  } catch (const std::exception& e) {
    res.passed = false;
    res.error = e.what();
  }
  return res;
}

// ---- corpus ----

inline std::vector<json> load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ParseError, "fixture directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<json> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, f.string() + ": " + e.what());
    }
    if (j.contains("fixtures")) {
      // shared settings are inherited by each entry
      for (auto fx : j.at("fixtures")) {
        for (const auto& [k, v] : j.items())
          if (k != "fixtures" && !fx.contains(k)) fx[k] = v;
        out.push_back(std::move(fx));
      }
    } else {
      out.push_back(std::move(j));
    }
  }
  std::sort(out.begin(), out.end(), [](const json& a, const json& b) { return a.value("id", "") < b.value("id", ""); });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].value("id", "") == out[i - 1].value("id", ""))
      throw Error(ErrorCode::ParseError, "duplicate fixture id " + out[i].value("id", ""));
  return out;
}

inline SuiteSummary run_suite(const std::vector<json>& corpus, const std::string& filter, std::uint64_t seed) {
  SuiteSummary s;
  s.seed = seed;
  s.filter = filter;
  for (const auto& fx : corpus)
    if (filter.empty() || glob_match(filter, fx.value("id", ""))) s.results.push_back(run_fixture(fx, seed));
  return s;
}

// ---- manifest ----

struct ManifestReport {
  bool complete = true;
  std::size_t entries = 0, mapped = 0, out_of_scope = 0;
  std::vector<std::string> unmapped;
  json to_json() const {
    return {{"complete", complete}, {"entries", entries}, {"mapped", mapped}, {"out_of_scope", out_of_scope}, {"unmapped", unmapped}};
  }
};

inline ManifestReport check_manifest(const json& manifest, const std::vector<json>& corpus) {
  ManifestReport r;
  for (const auto& e : manifest.at("entries")) {
    ++r.entries;
    const std::string ref = e.at("ref").get<std::string>();
    if (e.contains("out_of_scope") && !e.at("out_of_scope").get<std::string>().empty()) {
      ++r.out_of_scope;
      continue;
    }
    bool hit = false;
    if (e.contains("fixtures"))
      for (const auto& pat : e.at("fixtures"))
        for (const auto& fx : corpus) hit = hit || glob_match(pat.get<std::string>(), fx.value("id", ""));
    if (hit)
      ++r.mapped;
    else
      r.unmapped.push_back(ref);
  }
  r.complete = r.unmapped.empty();
  return r;
}

// ---- mutation controls ----

struct Mutant {
  std::string original, mutated;
  std::size_t position = 0;
};

// Single-character mutations of a formula: each character is replaced by
// another of the same class (digit, operator, letter).
inline std::vector<Mutant> single_char_mutants(const std::string& text, std::size_t count, std::uint64_t seed) {
  static const std::string digits = "0123456789", ops = "+-*/", letters = "xyzstuvab";
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (std::isdigit(static_cast<unsigned char>(ch)) || ops.find(ch) != std::string::npos || std::isalpha(static_cast<unsigned char>(ch)))
      positions.push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<Mutant> out;
  if (positions.empty()) return out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t pos = positions[rng() % positions.size()];
    char ch = text[pos];
    const std::string& pool = std::isdigit(static_cast<unsigned char>(ch)) ? digits : (std::isalpha(static_cast<unsigned char>(ch)) ? letters : ops);
    char rep = ch;
    while (rep == ch) rep = pool[rng() % pool.size()];
    Mutant m{text, text, pos};
    m.mutated[pos] = rep;
    out.push_back(std::move(m));
  }
  return out;
}

// Replaces definition `def` of the fixture with the mutated text.
inline json with_mutated_def(json fx, const std::string& def, const std::string& text) {
  for (auto& d : fx.at("defs"))
    if (d.at(0).get<std::string>() == def) d[1] = text;
  return fx;
}

inline std::string def_text(const json& fx, const std::string& def) {
  for (const auto& d : fx.at("defs"))
    if (d.at(0).get<std::string>() == def) return d.at(1).get<std::string>();
  throw Error(ErrorCode::ParseError, "fixture " + fx.value("id", "") + " has no definition " + def);
}

// Every single-character mutant of `def` that still parses in the fixture and
// changes its value.
inline std::vector<Mutant> all_semantic_mutants(const json& fx, const std::string& def) {
  static const std::string digits = "0123456789", ops = "+-*/", letters = "xyzstuvab";
  const std::string text = def_text(fx, def);
  const RatFunc original = detail::build_env(fx).ctx.defs.at(def);
  std::vector<Mutant> out;
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const char ch = text[pos];
    const std::string* pool = std::isdigit(static_cast<unsigned char>(ch)) ? &digits
                              : std::isalpha(static_cast<unsigned char>(ch)) ? &letters
                              : ops.find(ch) != std::string::npos ? &ops
                                                                  : nullptr;
    if (!pool) continue;
    for (char rep : *pool) {
      if (rep == ch) continue;
      Mutant m{text, text, pos};
      m.mutated[pos] = rep;
      try {
        if (detail::build_env(with_mutated_def(fx, def, m.mutated)).ctx.defs.at(def) != original) out.push_back(std::move(m));
      } catch (const Error&) {
      }
    }
  }
  return out;
}

// Mutants of `def` that still parse in the fixture and change its value.
inline std::vector<Mutant> semantic_mutants(const json& fx, const std::string& def, std::size_t count, std::uint64_t seed) {
  const RatFunc original = detail::build_env(fx).ctx.defs.at(def);
  std::vector<Mutant> out;
  std::set<std::string> seen;
  std::uint64_t s = seed;
  for (int round = 0; round < 64 && out.size() < count; ++round)
    for (auto& m : single_char_mutants(def_text(fx, def), 16, s++)) {
      if (out.size() >= count || !seen.insert(m.mutated).second) continue;
      try {
        if (detail::build_env(with_mutated_def(fx, def, m.mutated)).ctx.defs.at(def) != original) out.push_back(std::move(m));
      } catch (const Error&) {
      }
    }
  return out;
}

}  // namespace qmono
