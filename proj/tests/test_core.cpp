#include <gtest/gtest.h>

#include <random>

#include "qmono/expr.hpp"
#include "qmono/matgroup.hpp"
#include "qmono/symbols.hpp"

using namespace qmono;

namespace {

FieldDescriptor desc(const std::string& text) { return descriptor_from_json(json::parse(text)); }

Coeff random_coeff(const Field& F, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-9, 9);
  Coeff c = F.zero_c();
  for (auto& x : c) {
    mpq_class q(d(rng), F.characteristic() ? 1 : 1 + static_cast<int>(rng() % 4));
    q.canonicalize();
    x = F.scalar_c(q)[0];
  }
  return c;
}

RatFunc rf(const std::string& text, const Field& F, std::vector<std::string> vars = {"x", "y"}) {
  return parse_expr(text, ExprContext{F, std::move(vars), {}});
}

}  // namespace

// ---------------------------------------------------------------- field

TEST(Field, QuadraticOverRationals) {
  Field K(desc(R"({"base":"Q","adjoined":[{"sqrt":"-1","label":"i"}]})"));
  EXPECT_EQ(K.dim(), 2);
  EXPECT_EQ(K.galois_group().size(), 2u);
  FieldElem i = K.gen(0);
  EXPECT_EQ(i * i, K.from_rational(-1));
}

TEST(Field, RedundantSquareRootRejected) {
  try {
    Field K(desc(R"({"base":{"Fp":5},"adjoined":[{"sqrt":"4"}]})"));
    FAIL() << "expected RedundantAdjunction";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RedundantAdjunction);
  }
}

TEST(Field, ArtinSchreierGivesF4) {
  Field K(desc(R"({"base":{"Fp":2},"adjoined":[{"as":"1","label":"w"}]})"));
  EXPECT_EQ(K.cardinality(), 4);
  FieldElem w = K.gen(0);
  EXPECT_EQ(w * w + w, K.one());
  for (int a = 0; a < 2; ++a) EXPECT_NE((a * a + a) % 2, 1);
}

TEST(Field, NonPrimeModulusRejected) {
  EXPECT_THROW(Field(desc(R"({"base":{"Fp":9}})")), Error);
}

TEST(Field, SquareTests) {
  EXPECT_TRUE(Field::rationals().from_rational(4).is_square());
  EXPECT_TRUE(Field::prime(7).from_rational(2).is_square());
  EXPECT_FALSE(Field::rationals().from_rational(-1).is_square());
}

TEST(Field, BiquadraticGaloisGroupIsKleinFour) {
  Field K(desc(R"({"base":"Q","adjoined":[{"sqrt":"2","label":"a"},{"sqrt":"3","label":"b"}]})"));
  auto G = K.galois_group();
  ASSERT_EQ(G.size(), 4u);
  for (const auto& g : G) {
    EXPECT_TRUE(g.compose(g).is_identity());
    for (const auto& h : G) EXPECT_NE(std::find(G.begin(), G.end(), g.compose(h)), G.end());
  }
}

class FieldAxioms : public ::testing::TestWithParam<std::string> {};

TEST_P(FieldAxioms, RandomTriples) {
  Field K(desc(GetParam()));
  std::mt19937_64 rng(7);
  auto auts = K.galois_group();
  for (int trial = 0; trial < 1000; ++trial) {
    FieldElem a = K.elem(random_coeff(K, rng)), b = K.elem(random_coeff(K, rng)), c = K.elem(random_coeff(K, rng));
    ASSERT_EQ((a * b) * c, a * (b * c));
    ASSERT_EQ(a * (b + c), a * b + a * c);
    ASSERT_EQ((a + b) + c, a + (b + c));
    if (!a.is_zero()) ASSERT_EQ(a * a.inv(), K.one());
    const auto& g = auts[static_cast<std::size_t>(trial) % auts.size()];
    ASSERT_EQ(g.apply(a * b), g.apply(a) * g.apply(b));
    ASSERT_EQ(g.apply(a + b), g.apply(a) + g.apply(b));
  }
}

INSTANTIATE_TEST_SUITE_P(Descriptors, FieldAxioms,
                         ::testing::Values(R"({"base":"Q"})", R"({"base":"Q","adjoined":[{"sqrt":"-1"}]})",
                                           R"({"base":"Q","adjoined":[{"sqrt":"-1"},{"sqrt":"5"}]})",
                                           R"({"base":{"Fp":7},"adjoined":[{"sqrt":"3"}]})",
                                           R"({"base":{"Fp":2},"adjoined":[{"as":"1"}]})"));

TEST(Field, DescriptorJsonRoundTrip) {
  auto d = desc(R"({"base":{"Fp":7},"adjoined":[{"sqrt":"3","label":"alpha"}]})");
  EXPECT_EQ(descriptor_from_json(descriptor_to_json(d)), d);
}

// ---------------------------------------------------------------- rational functions

TEST(RatFunc, Arithmetic) {
  Field Q = Field::rationals();
  EXPECT_EQ(rf("(x/y)*(y/x)", Q), RatFunc::constant(Q, 2, 1));
  EXPECT_TRUE(rf("(x*y+1)/(x+y) - (x*y+1)/(x+y)", Q).is_zero());
  Field F2 = Field::prime(2);
  EXPECT_EQ(rf("(x+y)^2", F2), rf("x^2+y^2", F2));
}

TEST(RatFunc, SubstitutionImages) {
  Field Q = Field::rationals();
  RatFunc s = rf("(x*y+1)/(x+y)", Q);
  Substitution inv{FieldAut::identity(Q), {rf("1/x", Q), rf("1/y", Q)}};
  EXPECT_EQ(substitute(s, inv), s);
  Substitution r{FieldAut::identity(Q), {rf("x*y", Q), rf("1/x", Q)}};
  EXPECT_EQ(substitute(rf("x", Q), r), rf("x*y", Q));
  RatFunc u = rf("(x-1/x)/(x*y-1/(x*y))", Q);
  EXPECT_EQ(substitute(u, inv), u);
}

TEST(RatFunc, LaurentMonomials) {
  Field Q = Field::rationals();
  Field K(desc(R"({"base":"Q","adjoined":[{"sqrt":"2","label":"alpha"}]})"));
  EXPECT_EQ(rf("x*y", Q), RatFunc::var(Q, 2, 0) * RatFunc::var(Q, 2, 1));
  EXPECT_EQ(rf("-1/y", Q), -RatFunc::var(Q, 2, 1).inverse());
  RatFunc m = RatFunc::constant(K, 2, K.gen_c(0)) * RatFunc::var(K, 2, 0).pow(2) * RatFunc::var(K, 2, 1).pow(-3);
  EXPECT_EQ(m, rf("alpha*x^2/y^3", K));
  EXPECT_TRUE(m.is_laurent_monomial());
}

TEST(RatFunc, Evaluation) {
  Field Q = Field::rationals();
  RatFunc s = rf("(x*y+1)/(x+y)", Q);
  EXPECT_EQ(s.evaluate({Q.scalar_c(2), Q.scalar_c(3)}), Q.scalar_c(mpq_class(7, 5)));
  try {
    s.evaluate({Q.scalar_c(1), Q.scalar_c(-1)});
    FAIL() << "expected a pole";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoleAtPoint);
  }
  Field F5 = Field::prime(5);
  RatFunc S = rf("(x^2*y+x*y^2-3*x*y+1)/(x^2*y^2-3*x*y+x+y)", F5);
  EXPECT_EQ(S.evaluate({F5.scalar_c(2), F5.scalar_c(1)}), F5.one_c());
}

TEST(RatFunc, RandomProperties) {
  Field K(desc(R"({"base":"Q","adjoined":[{"sqrt":"-1","label":"i"}]})"));
  std::mt19937_64 rng(3);
  const std::vector<std::string> atoms = {"x", "y", "i", "2", "x*y", "1/x", "(x+1)", "(y-i)", "(x^2+3)"};
  auto random_rf = [&] {
    std::string s = atoms[rng() % atoms.size()];
    for (int k = 0; k < 3; ++k) s = "(" + s + ")" + "+-*/"[rng() % 4] + atoms[rng() % atoms.size()];
    return rf(s, K);
  };
  const FieldAut conj = K.galois_group()[1].is_identity() ? K.galois_group()[0] : K.galois_group()[1];
  Substitution sub{conj, {rf("i*y", K), rf("1/x", K)}};
  for (int t = 0; t < 40; ++t) {
    RatFunc f, g;
    try {
      f = random_rf();
      g = random_rf();
    } catch (const Error&) {
      continue;
    }
    if (g.is_zero()) continue;
    EXPECT_EQ(substitute(f + g, sub), substitute(f, sub) + substitute(g, sub));
    EXPECT_EQ(substitute(f * g, sub), substitute(f, sub) * substitute(g, sub));
    EXPECT_EQ(gcd(f.num(), f.den()).total_degree(), 0);
    EXPECT_EQ(rf(to_string(f, {"x", "y"}), K), f);
    EXPECT_EQ(f * g.inverse() * g, f);
  }
}

TEST(RatFunc, CompositionLaw) {
  Field K(desc(R"({"base":"Q","adjoined":[{"sqrt":"-1","label":"i"}]})"));
  const FieldAut conj = K.galois_group()[0].is_identity() ? K.galois_group()[1] : K.galois_group()[0];
  RatFunc f = rf("(i*x^2+y)/(x-y+1)", K);
  Substitution s{conj, {rf("y", K), rf("-1/x", K)}};
  Substitution t{FieldAut::identity(K), {rf("i*x*y", K), rf("y", K)}};
  // composite t∘s: x -> s-image of (i x y), y -> s-image of y, field part from s
  Substitution ts{conj, {substitute(rf("i*x*y", K), s), substitute(rf("y", K), s)}};
  EXPECT_EQ(substitute(substitute(f, t), s), substitute(f, ts));
}

// ---------------------------------------------------------------- integer matrices and groups

TEST(LatGroup, ClosureOrders) {
  using namespace mats;
  EXPECT_EQ(closure({rho()}, 2).size(), 6u);
  EXPECT_EQ(closure({}, 2).size(), 1u);
  EXPECT_EQ(closure({sigma(), tau()}, 2).size(), 8u);
  try {
    closure({IntMat{{1, 1}, {0, 1}}}, 2);
    FAIL() << "expected CapExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapExceeded);
  }
}

TEST(LatGroup, CatalogOrdersAndInvariants) {
  const std::vector<int> orders = {1, 2, 2, 2, 3, 4, 6, 4, 4, 6, 6, 8, 12};
  const auto& cat = gl2_catalog();
  ASSERT_EQ(cat.size(), 13u);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    EXPECT_EQ(cat[i].order, orders[i]) << cat[i].label;
    for (const auto& a : cat[i].elements)
      for (const auto& b : cat[i].elements) EXPECT_NE(std::find(cat[i].elements.begin(), cat[i].elements.end(), a * b), cat[i].elements.end());
    for (std::size_t j = 0; j < i; ++j) EXPECT_FALSE(group_invariants(cat[i].elements) == group_invariants(cat[j].elements));
    auto id = identify_gl2_class(cat[i].elements);
    EXPECT_EQ(id.label, cat[i].label);
    EXPECT_TRUE(same_group(conjugate_group(id.P, cat[i].elements), cat[i].elements));
  }
}

TEST(LatGroup, IdentifyConjugatedCyclicFour) {
  IntMat Q{{1, 1}, {0, 1}};
  MatList G = closure({conjugate(Q, mats::sigma())}, 2);
  auto id = identify_gl2_class(G);
  EXPECT_EQ(id.label, "C4");
  EXPECT_TRUE(same_group(conjugate_group(id.P, G), catalog_entry("C4").elements));
  EXPECT_EQ(identify_gl2_class(closure({}, 2)).label, "C1");
}

TEST(LatGroup, NormalSubgroupsOfDihedralEight) {
  using namespace mats;
  const MatList G = catalog_entry("D4").elements;
  std::vector<MatList> expected = {closure({minus_I()}, 2), closure({minus_I(), tau() * sigma()}, 2),
                                   closure({minus_I(), tau()}, 2), closure({sigma()}, 2)};
  std::size_t proper = 0;
  for (const auto& N : normal_subgroups(G)) {
    if (N.size() == 1 || N.size() == G.size()) continue;
    ++proper;
    bool hit = false;
    for (const auto& e : expected) hit = hit || same_group(N, e);
    EXPECT_TRUE(hit);
  }
  EXPECT_EQ(proper, expected.size());
  std::size_t s3 = 0;
  for (const auto& N : normal_subgroups(catalog_entry("S3_1").elements))
    if (N.size() == 3) ++s3;
    else EXPECT_TRUE(N.size() == 1 || N.size() == 6);
  EXPECT_EQ(s3, 1u);
  EXPECT_EQ(normal_subgroups(catalog_entry("C1").elements).size(), 1u);
}

TEST(LatGroup, SmithNormalForm) {
  auto check = [](const IntMat& A, std::vector<long long> diag) {
    SmithForm s = smith_normal_form(A);
    EXPECT_EQ(s.U * A * s.V, s.D);
    EXPECT_TRUE(s.U.is_unimodular());
    EXPECT_TRUE(s.V.is_unimodular());
    for (std::size_t i = 0; i < diag.size(); ++i) EXPECT_EQ(std::llabs(s.D(static_cast<int>(i), static_cast<int>(i))), diag[i]);
  };
  check(IntMat{{2, 0}, {0, 3}}, {1, 6});
  check(IntMat::identity(2), {1, 1});
  check(IntMat{{4, 6}}, {2});
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    IntMat A(3, 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) A(i, j) = static_cast<long long>(rng() % 13) - 6;
    SmithForm s = smith_normal_form(A);
    ASSERT_EQ(s.U * A * s.V, s.D);
    for (int i = 0; i + 1 < 3; ++i) {
      long long a = s.D(i, i), b = s.D(i + 1, i + 1);
      if (a != 0) ASSERT_EQ(b % a, 0);
      else ASSERT_EQ(b, 0);
    }
  }
}

TEST(LatGroup, InvariantMonomialLattice) {
  auto brute_index = [](int m, std::vector<long long> r) {
    int hits = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) hits += ((r[0] * a + r[1] * b) % m == 0);
    return m * m / hits;
  };
  IntMat L = invariant_monomial_lattice(2, {Twist{2, {1, 1}}});
  EXPECT_EQ(std::llabs(L.det()), 2);
  EXPECT_EQ(std::llabs(L.det()), brute_index(2, {1, 1}));
  for (int j = 0; j < 2; ++j) EXPECT_EQ((L(0, j) + L(1, j)) % 2, 0);
  EXPECT_TRUE(invariant_monomial_lattice(2, {}).is_identity());
  IntMat L3 = invariant_monomial_lattice(2, {Twist{3, {1, 2}}});
  EXPECT_EQ(std::llabs(L3.det()), 3);
  for (int j = 0; j < 2; ++j) EXPECT_EQ((L3(0, j) + 2 * L3(1, j)) % 3, 0);
}

TEST(LatGroup, BlockDecomposition) {
  using namespace mats;
  auto diag2 = [](const IntMat& a, const IntMat& b) {
    IntMat m(4, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        m(i, j) = a(i, j);
        m(2 + i, 2 + j) = b(i, j);
      }
    return m;
  };
  MatList G = closure({diag2(sigma(), tau()), diag2(minus_I(), IntMat::identity(2))}, 4);
  EXPECT_TRUE(check_block_decomposition(G, IntMat::identity(4), {2, 2}));
  IntMat mix = IntMat::identity(4);
  mix(0, 2) = 1;
  mix(1, 3) = 1;
  MatList mixed = closure({conjugate(mix, diag2(sigma(), IntMat::identity(2)))}, 4);
  EXPECT_FALSE(check_block_decomposition(mixed, IntMat::identity(4), {2, 2}));
  auto U = search_decomposition(mixed, {2, 2}, 1);
  ASSERT_TRUE(U.has_value());
  EXPECT_TRUE(check_block_decomposition(mixed, *U, {2, 2}));
  EXPECT_FALSE(search_decomposition(closure({sigma()}, 2), {1, 1}, 2).has_value());
}

// ---------------------------------------------------------------- symbols

TEST(Symbols, LocalValues) {
  EXPECT_EQ(hilbert_local(-1, -1, 0), -1);
  EXPECT_EQ(hilbert_local(-1, -1, 5), 1);
  EXPECT_EQ(hilbert_local(2, 5, 5), -1);
}

TEST(Symbols, RationalSymbols) {
  auto v = hilbert_symbol_Q(-1, -1);
  EXPECT_EQ(v.value, SymbolValue::NonZero);
  EXPECT_EQ(v.witness, "infinity");
  EXPECT_EQ(hilbert_symbol_Q(7, -7).value, SymbolValue::Zero);
  EXPECT_EQ(hilbert_symbol_Q(1, 13).value, SymbolValue::Zero);
  EXPECT_EQ(hilbert_symbol_Q(-1, 2).value, SymbolValue::Zero);
  EXPECT_EQ(hilbert_symbol_Q(-1, 3).value, SymbolValue::NonZero);
}

TEST(Symbols, FiniteAndAbstractFields) {
  FieldDescriptor f5;
  f5.p = 5;
  FieldDescriptor f3;
  f3.p = 3;
  FieldDescriptor f2;
  f2.p = 2;
  FieldDescriptor f7;
  f7.p = 7;
  EXPECT_EQ(symbol_decide({SymbolKind::Multiplicative, 2, 3, f5}).value, SymbolValue::Zero);
  EXPECT_EQ(symbol_decide({SymbolKind::Multiplicative, 1, 1, f3}).value, SymbolValue::Zero);
  EXPECT_EQ(symbol_decide({SymbolKind::ArtinSchreier, 1, 1, f2}).value, SymbolValue::Zero);
  EXPECT_EQ(symbol_decide({SymbolKind::Multiplicative, -1, -1, FieldDescriptor{}}).value, SymbolValue::NonZero);
  EXPECT_EQ(symbol_decide({SymbolKind::Multiplicative, -1, -1, f7}).value, SymbolValue::Zero);
  EXPECT_EQ(symbol_decide({SymbolKind::Multiplicative, -1, -1, AbstractField{}}).value, SymbolValue::Undecidable);
}

TEST(Symbols, RelativeBrauer) {
  EXPECT_TRUE(symbol_in_relative_brauer(-1, -1, 1).member);
  EXPECT_TRUE(symbol_in_relative_brauer(-1, 4, 5).member);
  EXPECT_TRUE(symbol_in_relative_brauer(-1, 3, 3).member);
  EXPECT_FALSE(symbol_in_relative_brauer(-1, -1, -1).member);
}

TEST(Symbols, ProductFormulaAndRelations) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(-50, 50);
  auto rnd = [&] {
    int n = 0, m = 0;
    while (n == 0) n = d(rng);
    while (m <= 0) m = d(rng);
    mpq_class q(n, m);
    q.canonicalize();
    return q;
  };
  auto nonzero = [](const mpq_class& a, const mpq_class& b) { return hilbert_symbol_Q(a, b).value == SymbolValue::NonZero; };
  for (int t = 0; t < 300; ++t) {
    mpq_class a = rnd(), b = rnd(), c = rnd();
    int prod = 1;
    for (const auto& p : relevant_places(a, b)) prod *= hilbert_local(a, b, p);
    ASSERT_EQ(prod, 1);
    ASSERT_EQ(nonzero(a, b), nonzero(b, a));
    for (const mpz_class p : {0, 2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47})
      ASSERT_EQ(hilbert_local(a, b * c, p), hilbert_local(a, b, p) * hilbert_local(a, c, p));
    if (!nonzero(a, b)) ASSERT_EQ(nonzero(a, b * c), nonzero(a, c));
    ASSERT_FALSE(nonzero(a, -a));
    if (a != 1) ASSERT_FALSE(nonzero(a, 1 - a));
  }
}
