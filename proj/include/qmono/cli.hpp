#pragma once

// Command-line front end: catalog, validate, reduce, decide, symbol, verify.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qmono/oracle.hpp"
#include "qmono/verify.hpp"

#ifndef QMONO_FIXTURE_DIR
#define QMONO_FIXTURE_DIR "fixtures"
#endif

namespace qmono::cli {

enum Exit { Ok = 0, CheckFailed = 1, Usage = 2, UndecidedOnly = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// "Q", "F7" or a JSON descriptor
inline FieldDescriptor parse_field_arg(const std::string& s) {
  if (s == "Q") return FieldDescriptor{};
  if (s.size() > 1 && (s[0] == 'F' || s[0] == 'f') && s.find_first_not_of("0123456789", 1) == std::string::npos) {
    FieldDescriptor d;
    d.p = std::stoull(s.substr(1));
    Field f(d);  // validates primality
    return d;
  }
  try {
    return descriptor_from_json(json::parse(s));
  } catch (const json::exception&) {
    throw UsageError("field must be Q, F<p> or a JSON descriptor: " + s);
  }
}

inline void render_text(std::ostream& out, const json& j, const std::string& indent = "") {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (v.is_structured() && !v.empty()) {
        out << indent << k << ":\n";
        render_text(out, v, indent + "  ");
      } else {
        out << indent << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (v.is_structured()) {
        out << indent << "-\n";
        render_text(out, v, indent + "  ");
      } else {
        out << indent << "- " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
      }
    }
  } else {
    out << indent << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

inline json catalog_json() {
  json arr = json::array();
  for (const auto& e : gl2_catalog()) {
    json gens = json::array();
    for (const auto& g : e.gens) gens.push_back(g.to_json());
    arr.push_back({{"label", e.label}, {"order", e.order}, {"generators", gens}});
  }
  return arr;
}

inline json reduce_json(const QuasiMonomialAction& a) {
  ReducedAction r = reduce_faithful(a);
  json nv = json::array();
  for (const auto& f : r.new_vars) nv.push_back(to_string(f, a.vars));
  return {{"order_N", r.order_N},
          {"order_N0", r.order_N0},
          {"lattice", r.lattice.to_json()},
          {"new_vars", nv},
          {"coefficient_field", descriptor_to_json(r.kN.field.descriptor())},
          {"action", action_to_json(r.action)},
          {"log", r.log}};
}

inline json symbol_json(const SymbolQuery& q) {
  SymbolVerdict v = symbol_decide(q);
  json j{{"kind", q.kind == SymbolKind::Multiplicative ? "multiplicative" : "artin-schreier"},
         {"symbol", {q.a.get_str(), q.b.get_str()}},
         {"field", std::get<FieldDescriptor>(q.field).to_string()},
         {"value", symbol_value_name(v.value)},
         {"reason", v.reason}};
  if (!v.witness.empty()) j["witness"] = v.witness;
  return j;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"qmono: rationality of fixed fields of quasi-monomial actions"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "json";
  bool strict = false;
  std::uint64_t seed = 1;
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--strict", strict, "exit 3 when the only outcome is Undecided");
  app.add_option("--seed", seed, "random seed for fiber certificates");

  auto* catalog = app.add_subcommand("catalog", "list the 13 finite subgroups of GL2(Z)");

  std::string action_path, split_path;
  auto* validate = app.add_subcommand("validate", "check an action file");
  validate->add_option("--action", action_path, "action JSON")->required();

  auto* reduce = app.add_subcommand("reduce", "reduce an action to a faithful one");
  reduce->add_option("--action", action_path, "action JSON")->required();

  bool no_check = false;
  int trials = 200;
  auto* decide_cmd = app.add_subcommand("decide", "decide rationality of the fixed field");
  decide_cmd->add_option("--action", action_path, "action JSON")->required();
  decide_cmd->add_option("--split", split_path, "split JSON {U, blocks}");
  decide_cmd->add_flag("--no-check", no_check, "skip generator certification");
  decide_cmd->add_option("--trials", trials, "fiber certificate trials")->check(CLI::PositiveNumber);

  std::string sa, sb, sfield = "Q", skind = "multiplicative";
  auto* symbol = app.add_subcommand("symbol", "evaluate a symbol (a,b)_k or [a,b)_k");
  symbol->add_option("-a", sa, "first entry")->required();
  symbol->add_option("-b", sb, "second entry")->required();
  symbol->add_option("--field", sfield, "Q, F<p> or JSON descriptor");
  symbol->add_option("--kind", skind, "symbol kind")->check(CLI::IsMember({"multiplicative", "artin-schreier"}));

  std::string filter, fixtures = QMONO_FIXTURE_DIR;
  auto* verify = app.add_subcommand("verify", "run the fixture suite");
  verify->add_option("--filter", filter, "glob over fixture ids");
  verify->add_option("--fixtures", fixtures, "fixture directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "run with --help for usage\n";
    return Usage;
  }

  auto emit = [&](const json& j) {
    if (format == "text")
      render_text(out, j);
    else
      out << j.dump(2) << "\n";
  };

  try {
    if (*catalog) {
      emit(catalog_json());
      return Ok;
    }
    if (*validate) {
      auto a = action_from_json(read_json_file(action_path));
      auto rep = validate_action(a);
      emit(rep.to_json());
      return rep.valid ? Ok : CheckFailed;
    }
    if (*reduce) {
      auto a = action_from_json(read_json_file(action_path));
      auto rep = validate_action(a);
      if (!rep.valid) {
        emit(rep.to_json());
        return CheckFailed;
      }
      emit(reduce_json(a));
      return Ok;
    }
    if (*decide_cmd) {
      auto a = action_from_json(read_json_file(action_path));
      auto rep = validate_action(a);
      if (!rep.valid) {
        emit(rep.to_json());
        return CheckFailed;
      }
      std::optional<SplitSpec> split;
      if (!split_path.empty()) split = split_from_json(read_json_file(split_path));
      DecideOptions opt;
      opt.validate = !no_check;
      opt.seed = seed;
      opt.trials = trials;
      RationalityVerdict v = decide(a, split, opt);
      emit(v.to_json());
      return strict && v.status == Status::Undecided ? UndecidedOnly : Ok;
    }
    if (*symbol) {
      SymbolQuery q;
      q.kind = skind == "multiplicative" ? SymbolKind::Multiplicative : SymbolKind::ArtinSchreier;
      try {
        q.a = parse_rational(sa);
        q.b = parse_rational(sb);
      } catch (const Error&) {
        throw UsageError("symbol entries must be rationals");
      }
      q.field = parse_field_arg(sfield);
      json j = symbol_json(q);
      emit(j);
      return strict && j["value"] == "undecidable" ? UndecidedOnly : Ok;
    }
    if (*verify) {
      auto corpus = load_corpus(fixtures);
      SuiteSummary s = run_suite(corpus, filter, seed);
      json j = s.to_json();
      bool ok = s.passed() && !s.results.empty();
      const auto manifest = std::filesystem::path(fixtures) / "manifest.json";
      if (filter.empty() && std::filesystem::exists(manifest)) {
        ManifestReport m = check_manifest(read_json_file(manifest.string()), corpus);
        j["manifest"] = m.to_json();
        ok = ok && m.complete;
      }
      if (format == "text") {
        for (const auto& r : s.results) out << (r.passed ? "PASS " : "FAIL ") << r.id << (r.error.empty() ? "" : "  " + r.error) << "\n";
        out << (s.results.size() - s.failed()) << "/" << s.results.size() << " fixtures passed (seed " << seed << ")\n";
        if (j.contains("manifest")) out << "manifest " << (j["manifest"]["complete"].get<bool>() ? "complete" : "incomplete") << "\n";
      } else {
        emit(j);
      }
      return ok ? Ok : CheckFailed;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return Usage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ParseError ? Usage : CheckFailed;
  } catch (const json::exception& e) {
    err << "malformed input: " << e.what() << "\n";
    return Usage;
  }
  return Usage;
}

}  // namespace qmono::cli
