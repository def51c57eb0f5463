#include <gtest/gtest.h>

#include <fstream>

#include "qmono/oracle.hpp"
#include "qmono/verify.hpp"

using namespace qmono;

namespace {

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

QuasiMonomialAction fixture_action(const std::string& id) {
  for (const auto& fx : corpus())
    if (fx.value("id", "") == id) return *action_of(fx);
  throw std::runtime_error("missing fixture " + id);
}

QuasiMonomialAction act(const std::string& text) { return action_from_json(json::parse(text)); }

bool trail_has(const RationalityVerdict& v, const std::string& needle) {
  for (const auto& t : v.trail)
    if (t.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------- rank 1

TEST(Rank1, InversionGivesTrace) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["x"], "generators": [{"name": "s", "matrix": [[-1]]}]})");
  auto v = decide(a);
  EXPECT_EQ(v.status, Status::Rational);
  ASSERT_EQ(v.generators.size(), 1u);
  Field Q = a.field;
  EXPECT_EQ(v.generators[0], parse_expr("x+1/x", ExprContext{Q, {"x"}, {}}));
}

TEST(Rank1, ConicConditionDecides) {
  auto b2 = decide(data_action("prop17_b2.json"));
  EXPECT_EQ(b2.status, Status::Rational);
  EXPECT_FALSE(b2.not_k_unirational);
  auto b3 = decide(data_action("prop17_b3.json"));
  EXPECT_EQ(b3.status, Status::NotRational);
  EXPECT_TRUE(b3.not_k_unirational);
  ASSERT_TRUE(b3.condition.has_value());
  ASSERT_TRUE(b3.condition_value.has_value());
  EXPECT_EQ(b3.condition_value->value, SymbolValue::NonZero);
}

TEST(Rank1, UntwistedCoefficientFieldIsRational) {
  auto a = act(R"({"field": {"base": "Q", "adjoined": [{"sqrt": "-1", "label": "i"}]}, "vars": ["y"],
    "generators": [{"name": "s", "matrix": [[-1]], "field_map": {"i": "-i"}}]})");
  auto v = decide(a);
  EXPECT_EQ(v.status, Status::Rational);
  ASSERT_EQ(v.generators.size(), 1u);
  ASSERT_TRUE(v.check.has_value());
}

TEST(Rank1, FiniteFieldConicsSplit) {
  auto a = act(R"({"field": {"base": {"Fp": 7}, "adjoined": [{"sqrt": "3", "label": "alpha"}]}, "vars": ["y"],
    "generators": [{"name": "s", "matrix": [[-1]], "coeffs": ["3"], "field_map": {"alpha": "-alpha"}}]})");
  EXPECT_EQ(decide(a).status, Status::Rational);
}

// ---------------------------------------------------------------- rank 2

TEST(Rank2, ExceptionalFlagMatchesTable) {
  std::size_t seen = 0;
  for (const auto& fx : corpus()) {
    if (fx.at("vars").size() != 2) continue;
    const std::string id = fx.value("id", "");
    if (id.rfind("thm1.8/", 0) != 0) continue;
    auto a = action_of(fx);
    if (!a) continue;
    CaseDescriptor c = classify_case(*a);
    const bool expected = id == "thm1.8/case3/char0" || id == "thm1.8/subcase7.1/char0";
    EXPECT_EQ(c.exceptional, expected) << id << " " << c.to_json().dump();
    if (c.exceptional) {
      EXPECT_TRUE(c.subcase == "3" || c.subcase == "7.1");
      EXPECT_NE(c.characteristic, 2u);
    }
    ++seen;
  }
  EXPECT_GE(seen, 40u);
}

TEST(Rank2, SubcaseLabels) {
  EXPECT_EQ(classify_case(fixture_action("thm1.8/subcase1.1/char0")).subcase, "1.1");
  EXPECT_EQ(classify_case(fixture_action("thm1.8/subcase7.4/char0")).h_label, "C4");
  EXPECT_EQ(classify_case(fixture_action("thm1.8/case4/char3")).g_label, "S3_1");
  EXPECT_EQ(classify_case(fixture_action("lemma3.3/char0/eq2-invariance")).subcase, "H=G");
}

TEST(Rank2, BiquadraticTable) {
  const std::map<std::string, Status> expected = {
      {"example4.3/L-alpha-beta", Status::NotRational},    {"example4.3/L-alpha-alphabeta", Status::NotRational},
      {"example4.3/L-beta-alpha", Status::Rational},       {"example4.3/L-beta-alphabeta", Status::Rational},
      {"example4.3/L-alphabeta-alpha", Status::Rational},  {"example4.3/L-alphabeta-beta", Status::Rational}};
  for (const auto& [id, status] : expected) {
    auto v = decide(fixture_action(id));
    EXPECT_EQ(v.status, status) << id << " " << v.to_json().dump();
    EXPECT_TRUE(trail_has(v, "D4-extension")) << id;
    if (status == Status::NotRational) EXPECT_TRUE(v.not_k_unirational) << id;
  }
}

TEST(Rank2, CyclicFourObstruction) {
  auto v = decide(data_action("case3_qi.json"));
  EXPECT_EQ(v.status, Status::NotRational);
  ASSERT_TRUE(v.condition.has_value());
  EXPECT_EQ(v.condition->a, -1);
  EXPECT_EQ(v.condition->b, -1);
  EXPECT_EQ(v.condition_value->witness, "infinity");
  EXPECT_TRUE(trail_has(v, "does not embed in a C4-extension"));

  auto split = act(R"({"field": {"base": "Q", "adjoined": [{"sqrt": "2", "label": "alpha"}]}, "vars": ["x", "y"],
    "generators": [{"name": "sigma", "matrix": [[0, -1], [1, 0]], "field_map": {"alpha": "-alpha"}}]})");
  auto w = decide(split);
  EXPECT_EQ(w.status, Status::Rational);
  EXPECT_TRUE(trail_has(w, "embeds in a C4-extension"));
}

TEST(Rank2, CharacteristicTwoIsRational) {
  auto a = fixture_action("thm1.8/case3/char2");
  EXPECT_EQ(decide(a).status, Status::Rational);
}

TEST(Rank2, SubcaseGeneratorsCertified) {
  for (const char* id : {"thm1.8/subcase1.1/char0", "thm1.8/subcase7.2/char0", "thm1.8/subcase2.1/char0"}) {
    auto v = decide(fixture_action(id));
    EXPECT_EQ(v.status, Status::Rational) << id;
    EXPECT_EQ(v.generators.size(), 2u) << id << " " << v.to_json().dump();
    ASSERT_TRUE(v.check.has_value()) << id;
  }
}

TEST(Rank2, NonNormalFormIsUndecided) {
  auto v = decide(fixture_action("lemma3.1/a2-b3"));
  EXPECT_EQ(v.status, Status::Undecided);
}

TEST(Rank2, EmbeddingAnnotationOnlyForExceptional) {
  RationalityVerdict v;
  v.status = Status::ConditionallyRational;
  CaseDescriptor plain{"D4", "V4", "7.2", 0, false};
  EXPECT_TRUE(annotate_embedding(v, plain).trail.empty());
  CaseDescriptor exc{"D4", "C2", "7.1", 0, true};
  auto w = annotate_embedding(v, exc);
  ASSERT_EQ(w.trail.size(), 1u);
  EXPECT_NE(w.trail[0].find("embeds iff the symbol vanishes in a D4-extension"), std::string::npos);
}

TEST(Rank2, FiniteFieldExceptionalIsRational) {
  auto a = act(R"({"field": {"base": {"Fp": 5}, "adjoined": [{"sqrt": "2", "label": "alpha"}]}, "vars": ["x", "y"],
    "generators": [{"name": "sigma", "matrix": [[0, -1], [1, 0]], "field_map": {"alpha": "-alpha"}}]})");
  auto v = decide(a);
  EXPECT_EQ(v.status, Status::Rational);
  ASSERT_TRUE(v.condition_value.has_value());
  EXPECT_EQ(v.condition_value->value, SymbolValue::Zero);
}

// ---------------------------------------------------------------- affine invariants

TEST(Affine, InvariantPolynomials) {
  Field Q = Field::rationals();
  const Poly z = Poly::var(Q, 1, 0);
  const FieldAut id = FieldAut::identity(Q);
  EXPECT_EQ(invariant_poly_affine(Q, {{id, Q.one_c(), Q.zero_c()}}), z);
  EXPECT_EQ(invariant_poly_affine(Q, {{id, Q.one_c(), Q.zero_c()}, {id, Q.scalar_c(-1), Q.zero_c()}}), z * z);

  Field F2 = Field::prime(2);
  const Poly w = Poly::var(F2, 1, 0);
  const FieldAut id2 = FieldAut::identity(F2);
  EXPECT_EQ(invariant_poly_affine(F2, {{id2, F2.one_c(), F2.zero_c()}, {id2, F2.one_c(), F2.one_c()}}), w * w + w);

  Field F3 = Field::prime(3);
  const FieldAut id3 = FieldAut::identity(F3);
  std::vector<AffineElem> shifts;
  for (int b = 0; b < 3; ++b) shifts.push_back({id3, F3.one_c(), F3.scalar_c(b)});
  try {
    invariant_poly_affine(F3, shifts);
    FAIL() << "expected ModularCharacterUnsupported";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModularCharacterUnsupported);
  }
}

TEST(Affine, ReynoldsInvariantIsInvariant) {
  Field Q = Field::rationals();
  const FieldAut id = FieldAut::identity(Q);
  std::vector<AffineElem> g{{id, Q.one_c(), Q.zero_c()}, {id, Q.scalar_c(-1), Q.scalar_c(2)}};
  Poly f = invariant_poly_affine(Q, g);
  EXPECT_GT(f.total_degree(), 0);
  RatFunc fr(f);
  Substitution s{id, {parse_expr("2-z", ExprContext{Q, {"z"}, {}})}};
  EXPECT_EQ(substitute(fr, s), fr);
}

// ---------------------------------------------------------------- decomposable lattices

TEST(Rank4, TwoPlusTwoCyclicCase) {
  auto a = data_action("rank4_case1.json");
  auto v = decide(a, data_split("split_2_2.json"));
  EXPECT_EQ(v.status, Status::Rational);
  ASSERT_EQ(v.generators.size(), 4u);
  EXPECT_TRUE(trail_has(v, "Case 1"));
  for (const auto& g : group_elements(a))
    for (const auto& f : v.generators) EXPECT_EQ(apply(a.field, g, f), f);
}

TEST(Rank4, RejectsBadSplits) {
  auto a = data_action("rank4_case1.json");
  try {
    decide(a, data_split("split_3_1.json"));
    FAIL() << "expected DecompositionInvalid";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DecompositionInvalid);
  }
  SplitSpec bad{IntMat{{2, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}, {2, 2}};
  EXPECT_THROW(decide(a, bad), Error);
  SplitSpec shape{IntMat::identity(4), {2, 1}};
  EXPECT_THROW(decide(a, shape), Error);
}

TEST(Rank4, ThreePlusOne) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["x1", "x2", "x3", "y"],
    "generators": [{"name": "g", "matrix": [[0, 0, 1, 0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1]]}]})");
  SplitSpec s{IntMat::identity(4), {3, 1}};
  auto v = decide(a, s);
  EXPECT_EQ(v.status, Status::Rational);
  EXPECT_TRUE(trail_has(v, "3+1"));
}

TEST(Rank5, ExceptionalLatticeVersusPerturbation) {
  auto s = data_split("split_3_2.json");
  auto ex = decide(data_action("rank5_exceptional.json"), s);
  EXPECT_EQ(ex.status, Status::NotRetractRational);
  auto pert = decide(data_action("rank5_split_y.json"), s);
  EXPECT_EQ(pert.status, Status::Rational);
}

TEST(Rank5, FaithfulnessPrecondition) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["x1", "x2", "x3", "y1", "y2"],
    "generators": [
      {"name": "g", "matrix": [[-1, 0, 0, 0, 0], [0, -1, 0, 0, 0], [0, 0, -1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]]},
      {"name": "h", "matrix": [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, -1, 0], [0, 0, 0, 0, -1]]}]})");
  try {
    decide(a, SplitSpec{IntMat::identity(5), {3, 2}});
    FAIL() << "expected FaithfulnessPreconditionFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FaithfulnessPreconditionFailed);
  }
}

TEST(Rank5, TrivialOnFirstBlock) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["x1", "x2", "x3", "y1", "y2"],
    "generators": [{"name": "g", "matrix": [[1, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 0, -1], [0, 0, 0, 1, 0]]}]})");
  auto v = decide(a, SplitSpec{IntMat::identity(5), {3, 2}});
  EXPECT_EQ(v.status, Status::Rational);
  EXPECT_TRUE(trail_has(v, "H = G"));
}

TEST(Tori, Combinators) {
  RationalityVerdict r, n, x, u;
  r.status = Status::Rational;
  n.status = Status::NotRational;
  x.status = Status::NotRetractRational;
  EXPECT_EQ(decide_tori_decomposable(r, r, 2, 3).status, Status::Rational);
  EXPECT_EQ(decide_tori_decomposable(r, x, 2, 5).status, Status::NotRetractRational);
  EXPECT_EQ(decide_tori_decomposable(x, r, 5, 2).status, Status::NotRetractRational);
  EXPECT_EQ(decide_tori_decomposable(r, n, 2, 3).status, Status::NotRational);
  EXPECT_EQ(decide_tori_decomposable(r, n, 2, 4).status, Status::Undecided);
  EXPECT_EQ(decide_tori_decomposable(r, u, 1, 1).status, Status::Undecided);
}

TEST(Dispatch, OutsideDecidedRange) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["a", "b", "c"],
    "generators": [{"name": "g", "matrix": [[0, 0, 1], [1, 0, 0], [0, 1, 0]]}]})");
  EXPECT_EQ(decide(a).status, Status::Undecided);
}

TEST(Dispatch, InvalidActionThrows) {
  auto a = act(R"({"field": {"base": "Q"}, "vars": ["x", "y"],
    "generators": [{"name": "g", "matrix": [[2, 0], [0, 1]]}]})");
  EXPECT_THROW(decide(a), Error);
}

TEST(Dispatch, DeterministicOutput) {
  for (const char* id : {"thm1.8/subcase1.1/char0", "example4.3/L-alpha-beta"}) {
    auto a = fixture_action(id);
    EXPECT_EQ(decide(a).to_json(), decide(a).to_json()) << id;
  }
}

TEST(Dispatch, VerdictJsonShape) {
  json j = decide(data_action("case3_qi.json")).to_json();
  EXPECT_EQ(j["status"], "not_rational");
  EXPECT_EQ(j["condition"]["symbol"], json::array({"-1", "-1"}));
  EXPECT_EQ(j["condition"]["field"], "Q");
  EXPECT_TRUE(j["trail"].is_array());
  EXPECT_EQ(j["case"]["G/N"], "C4");
}
