#pragma once

// Finite subgroups of GL_n(Z): closure, the GL_2(Z) conjugacy catalog,
// identification, subgroup enumeration, invariant lattices and block splits.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "qmono/intmat.hpp"

namespace qmono {

using MatList = std::vector<IntMat>;

namespace mats {
inline IntMat minus_I() { return IntMat{{-1, 0}, {0, -1}}; }
inline IntMat lambda() { return IntMat{{1, 0}, {0, -1}}; }
inline IntMat tau() { return IntMat{{0, 1}, {1, 0}}; }
inline IntMat sigma() { return IntMat{{0, -1}, {1, 0}}; }
inline IntMat rho() { return IntMat{{1, -1}, {1, 0}}; }
}  // namespace mats

// conjugate P^-1 g P
inline IntMat conjugate(const IntMat& P, const IntMat& g) { return P.inverse() * g * P; }

inline MatList closure(const MatList& gens, int n, std::size_t cap = 4096) {
  std::set<IntMat> seen{IntMat::identity(n)};
  std::vector<IntMat> frontier{IntMat::identity(n)};
  while (!frontier.empty()) {
    std::vector<IntMat> next;
    for (const auto& x : frontier)
      for (const auto& g : gens) {
        IntMat y = x * g;
        if (seen.insert(y).second) {
          if (seen.size() > cap) throw Error(ErrorCode::CapExceeded, "group closure exceeds cap " + std::to_string(cap));
          next.push_back(y);
        }
      }
    frontier = std::move(next);
  }
  return MatList(seen.begin(), seen.end());
}

inline bool same_group(const MatList& a, const MatList& b) {
  std::set<IntMat> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  return sa == sb;
}

inline MatList conjugate_group(const IntMat& P, const MatList& g) {
  IntMat Pi = P.inverse();
  MatList out;
  for (const auto& x : g) out.push_back(Pi * x * P);
  std::sort(out.begin(), out.end());
  return out;
}

struct CatalogEntry {
  std::string label;
  int order = 0;
  MatList gens;
  MatList elements;
};

inline const std::vector<CatalogEntry>& gl2_catalog() {
  static const std::vector<CatalogEntry> cat = [] {
    using namespace mats;
    std::vector<std::pair<std::string, MatList>> defs = {
        {"C1", {}},
        {"C2_1", {minus_I()}},
        {"C2_2", {lambda()}},
        {"C2_3", {tau()}},
        {"C3", {rho() * rho()}},
        {"C4", {sigma()}},
        {"C6", {rho()}},
        {"V4_1", {lambda(), minus_I()}},
        {"V4_2", {tau(), minus_I()}},
        {"S3_1", {rho() * rho(), tau()}},
        {"S3_2", {rho() * rho(), -tau()}},
        {"D4", {sigma(), tau()}},
        {"D6", {rho(), tau()}},
    };
    std::vector<CatalogEntry> out;
    for (auto& [label, gens] : defs) {
      CatalogEntry e;
      e.label = label;
      e.gens = gens;
      e.elements = closure(gens, 2);
      e.order = static_cast<int>(e.elements.size());
      out.push_back(std::move(e));
    }
    return out;
  }();
  return cat;
}

inline const CatalogEntry& catalog_entry(const std::string& label) {
  for (const auto& e : gl2_catalog())
    if (e.label == label) return e;
  throw Error(ErrorCode::Unidentified, "no catalog class " + label);
}

// Conjugacy invariants used to pre-filter catalog candidates.
struct GroupInvariants {
  int order = 0;
  std::vector<long long> dets, traces;
  int fix2 = 0, fix3 = 0;
  auto tie() const { return std::tie(order, dets, traces, fix2, fix3); }
  bool operator==(const GroupInvariants& o) const { return tie() == o.tie(); }
};

inline int common_fixed_points(const MatList& g, int m) {
  const int n = g.empty() ? 0 : g[0].rows();
  int total = 1;
  for (int i = 0; i < n; ++i) total *= m;
  int count = 0;
  for (int idx = 0; idx < total; ++idx) {
    std::vector<long long> v(static_cast<std::size_t>(n));
    int r = idx;
    for (auto& x : v) {
      x = r % m;
      r /= m;
    }
    bool fixed = true;
    for (const auto& x : g) {
      auto w = x * v;
      for (int i = 0; i < n && fixed; ++i)
        if (((w[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(i)]) % m + m) % m != 0) fixed = false;
      if (!fixed) break;
    }
    if (fixed) ++count;
  }
  return count;
}

inline GroupInvariants group_invariants(const MatList& g) {
  GroupInvariants inv;
  inv.order = static_cast<int>(g.size());
  for (const auto& x : g) {
    inv.dets.push_back(x.det());
    inv.traces.push_back(x.trace());
  }
  std::sort(inv.dets.begin(), inv.dets.end());
  std::sort(inv.traces.begin(), inv.traces.end());
  inv.fix2 = common_fixed_points(g, 2);
  inv.fix3 = common_fixed_points(g, 3);
  return inv;
}

// Unimodular 2x2 matrices with entries in [-bound, bound], small entries first.
inline const std::vector<IntMat>& unimodular_candidates_2x2(int bound) {
  static std::map<int, std::vector<IntMat>> cache;
  auto it = cache.find(bound);
  if (it != cache.end()) return it->second;
  std::vector<IntMat> out;
  for (long long a = -bound; a <= bound; ++a)
    for (long long b = -bound; b <= bound; ++b)
      for (long long c = -bound; c <= bound; ++c)
        for (long long d = -bound; d <= bound; ++d) {
          long long det = a * d - b * c;
          if (det == 1 || det == -1) out.push_back(IntMat{{a, b}, {c, d}});
        }
  std::stable_sort(out.begin(), out.end(), [](const IntMat& x, const IntMat& y) {
    auto key = [](const IntMat& m) {
      long long s = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s += m(i, j) < 0 ? -m(i, j) : m(i, j);
      return std::make_tuple(m.max_abs(), s, m.is_identity() ? 0 : 1, m.det() == 1 ? 0 : 1);
    };
    return key(x) < key(y);
  });
  return cache.emplace(bound, std::move(out)).first->second;
}

// P with P^-1 G P = T (and P^-1 H P = HT when given), searched over small entries.
inline std::optional<IntMat> find_conjugator_2x2(const MatList& G, const MatList& T, int bound,
                                                 const MatList* H = nullptr, const MatList* HT = nullptr) {
  if (G.size() != T.size()) return std::nullopt;
  if (H && HT && H->size() != HT->size()) return std::nullopt;
  std::set<IntMat> tset(T.begin(), T.end());
  std::set<IntMat> htset;
  if (HT) htset.insert(HT->begin(), HT->end());
  for (const auto& P : unimodular_candidates_2x2(bound)) {
    IntMat Pi = P.inverse();
    bool ok = true;
    for (const auto& g : G)
      if (!tset.count(Pi * g * P)) {
        ok = false;
        break;
      }
    if (ok && H && HT)
      for (const auto& h : *H)
        if (!htset.count(Pi * h * P)) {
          ok = false;
          break;
        }
    if (ok) return P;
  }
  return std::nullopt;
}

struct Identification {
  std::string label;
  IntMat P;  // P^-1 G P is the catalog representative
};

inline Identification identify_gl2_class(const MatList& G, int bound = 5) {
  if (G.empty() || G[0].rows() != 2) throw Error(ErrorCode::Unidentified, "expected a subgroup of GL_2(Z)");
  for (const auto& g : G)
    if (!g.is_unimodular()) throw Error(ErrorCode::NotUnimodular, "group element " + g.to_string() + " is not unimodular");
  const auto inv = group_invariants(G);
  for (const auto& e : gl2_catalog()) {
    if (!(group_invariants(e.elements) == inv)) continue;
    if (auto P = find_conjugator_2x2(G, e.elements, bound)) return {e.label, *P};
  }
  throw Error(ErrorCode::Unidentified, "no catalog class matches within bound " + std::to_string(bound));
}

inline bool is_subgroup_normal(const MatList& G, const MatList& H) {
  std::set<IntMat> hs(H.begin(), H.end());
  for (const auto& g : G) {
    IntMat gi = g.inverse();
    for (const auto& h : H)
      if (!hs.count(g * h * gi)) return false;
  }
  return true;
}

// All subgroups generated by at most two elements (every subgroup of a finite
// subgroup of GL_2(Z) or GL_3(Z) of order at most 12 is of this kind).
inline std::vector<MatList> subgroups(const MatList& G) {
  const int n = G.empty() ? 0 : G[0].rows();
  std::set<MatList> found;
  for (std::size_t i = 0; i < G.size(); ++i)
    for (std::size_t j = i; j < G.size(); ++j) found.insert(closure({G[i], G[j]}, n));
  found.insert(closure({}, n));
  std::vector<MatList> out(found.begin(), found.end());
  std::stable_sort(out.begin(), out.end(), [](const MatList& a, const MatList& b) { return a.size() < b.size(); });
  return out;
}

inline std::vector<MatList> normal_subgroups(const MatList& G) {
  std::vector<MatList> out;
  for (auto& h : subgroups(G))
    if (is_subgroup_normal(G, h)) out.push_back(std::move(h));
  return out;
}

// Twist: the coefficient of x_j is zeta_m^{r_j} for a primitive m-th root zeta.
struct Twist {
  long long m = 1;
  std::vector<long long> r;
};

// Lattice {v in Z^n : sum_j r_j v_j = 0 mod m for every twist}, as Hermite basis columns.
inline IntMat invariant_monomial_lattice(int n, const std::vector<Twist>& twists) {
  const int k = static_cast<int>(twists.size());
  if (k == 0) return IntMat::identity(n);
  IntMat A(k, n + k);
  for (int i = 0; i < k; ++i) {
    const auto& t = twists[static_cast<std::size_t>(i)];
    if (t.m <= 0 || static_cast<int>(t.r.size()) != n) throw Error(ErrorCode::InvalidAction, "malformed twist");
    for (int j = 0; j < n; ++j) A(i, j) = t.r[static_cast<std::size_t>(j)];
    A(i, n + i) = -t.m;
  }
  IntMat K = integer_kernel(A);
  IntMat proj(n, K.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < K.cols(); ++j) proj(i, j) = K(i, j);
  return hermite_columns(proj);
}

// U^-1 g U block diagonal with the given block sizes for every g.
inline bool check_block_decomposition(const MatList& G, const IntMat& U, const std::vector<int>& blocks) {
  if (!U.is_unimodular()) throw Error(ErrorCode::NotUnimodular, "split matrix is not unimodular");
  int total = 0;
  for (int b : blocks) total += b;
  if (total != U.rows()) return false;
  std::vector<int> block_of;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int i = 0; i < blocks[b]; ++i) block_of.push_back(static_cast<int>(b));
  for (const auto& g : G) {
    IntMat c = conjugate(U, g);
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 0; j < c.cols(); ++j)
        if (c(i, j) != 0 && block_of[static_cast<std::size_t>(i)] != block_of[static_cast<std::size_t>(j)]) return false;
  }
  return true;
}

// Best-effort search for a unimodular U realizing the block split, built from
// saturated invariant sublattices spanned by orbits of small vectors.
inline std::optional<IntMat> search_decomposition(const MatList& G, const std::vector<int>& blocks, int bound) {
  const int n = G.empty() ? 0 : G[0].rows();
  if (check_block_decomposition(G, IntMat::identity(n), blocks)) return IntMat::identity(n);
  std::map<int, std::set<IntMat>> by_rank;
  std::vector<IntMat> found;
  std::vector<long long> v(static_cast<std::size_t>(n), -bound);
  auto add_lattice = [&](const IntMat& gensm) {
    if (gensm.cols() == 0) return;
    IntMat sat = saturate(gensm);
    if (by_rank[sat.cols()].insert(sat).second) found.push_back(sat);
  };
  while (true) {
    if (std::any_of(v.begin(), v.end(), [](long long x) { return x != 0; })) {
      std::vector<std::vector<long long>> orbit;
      for (const auto& g : G) orbit.push_back(g * v);
      add_lattice(hermite_columns(IntMat::from_columns(orbit, n)));
    }
    int i = 0;
    while (i < n && v[static_cast<std::size_t>(i)] == bound) v[static_cast<std::size_t>(i++)] = -bound;
    if (i == n) break;
    ++v[static_cast<std::size_t>(i)];
  }
  // sums of pairs of small invariant sublattices
  const std::size_t base = found.size();
  for (std::size_t a = 0; a < base && a < 200; ++a)
    for (std::size_t b = a + 1; b < base && b < 200; ++b) {
      std::vector<std::vector<long long>> cols;
      for (int j = 0; j < found[a].cols(); ++j) cols.push_back(found[a].column(j));
      for (int j = 0; j < found[b].cols(); ++j) cols.push_back(found[b].column(j));
      add_lattice(hermite_columns(IntMat::from_columns(cols, n)));
    }

  std::vector<IntMat> chosen;
  std::function<std::optional<IntMat>(std::size_t)> rec = [&](std::size_t bi) -> std::optional<IntMat> {
    if (bi == blocks.size()) {
      std::vector<std::vector<long long>> cols;
      for (const auto& L : chosen)
        for (int j = 0; j < L.cols(); ++j) cols.push_back(L.column(j));
      IntMat U = IntMat::from_columns(cols, n);
      if (U.is_unimodular() && check_block_decomposition(G, U, blocks)) return U;
      return std::nullopt;
    }
    for (const auto& L : by_rank[blocks[bi]]) {
      chosen.push_back(L);
      // prune: partial columns must stay independent and primitive
      bool ok = true;
      if (bi > 0) {
        std::vector<std::vector<long long>> cols;
        for (const auto& M : chosen)
          for (int j = 0; j < M.cols(); ++j) cols.push_back(M.column(j));
        IntMat part = IntMat::from_columns(cols, n);
        ok = saturate(part) == hermite_columns(part) && hermite_columns(part).cols() == part.cols();
      }
      if (ok)
        if (auto r = rec(bi + 1)) return r;
      chosen.pop_back();
    }
    return std::nullopt;
  };
  return rec(0);
}

}  // namespace qmono
