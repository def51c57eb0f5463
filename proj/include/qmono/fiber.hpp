#pragma once

// Fiber-degree certificate: reduce candidate maps modulo p, tabulate images of
// every point of a small finite domain and bound the fiber through random
// sample points.

#include <cstdint>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "qmono/ratfunc.hpp"

namespace qmono {

// GF(p^m) with elements encoded as base-p digit integers and log tables.
class GaloisField {
 public:
  GaloisField(std::uint32_t p, int m) : p_(p), m_(m) {
    q_ = 1;
    for (int i = 0; i < m; ++i) q_ *= p;
    if (q_ > (1u << 20)) throw Error(ErrorCode::CapExceeded, "finite field too large");
    find_modulus();
  }
  std::uint32_t p() const { return p_; }
  int degree() const { return m_; }
  std::uint32_t size() const { return q_; }

  std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
    if (m_ == 1) return (a + b) % p_;
    std::uint32_t r = 0, mul = 1;
    for (int i = 0; i < m_; ++i) {
      r += ((a % p_ + b % p_) % p_) * mul;
      a /= p_;
      b /= p_;
      mul *= p_;
    }
    return r;
  }
  std::uint32_t neg(std::uint32_t a) const {
    if (m_ == 1) return (p_ - a) % p_;
    std::uint32_t r = 0, mul = 1;
    for (int i = 0; i < m_; ++i) {
      r += ((p_ - a % p_) % p_) * mul;
      a /= p_;
      mul *= p_;
    }
    return r;
  }
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const { return add(a, neg(b)); }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
    if (a == 0 || b == 0) return 0;
    if (m_ == 1) return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) % p_);
    return exp_[(log_[a] + log_[b]) % (q_ - 1)];
  }
  std::uint32_t inv(std::uint32_t a) const {
    if (a == 0) throw Error(ErrorCode::DivisionByZero, "inverse of zero in GF(q)");
    return exp_[(q_ - 1 - log_[a]) % (q_ - 1)];
  }
  std::uint32_t pow(std::uint32_t a, std::uint32_t e) const {
    if (e == 0) return 1;
    if (a == 0) return 0;
    return exp_[static_cast<std::uint32_t>((static_cast<std::uint64_t>(log_[a]) * e) % (q_ - 1))];
  }
  std::uint32_t from_int(long long v) const {
    long long r = v % static_cast<long long>(p_);
    if (r < 0) r += p_;
    return static_cast<std::uint32_t>(r);
  }
  // elements of the prime subfield or all elements
  std::vector<std::uint32_t> elements() const {
    std::vector<std::uint32_t> out(q_);
    for (std::uint32_t i = 0; i < q_; ++i) out[i] = i;
    return out;
  }

 private:
  // polynomial multiplication by x modulo the current modulus
  std::uint32_t times_x(std::uint32_t a, const std::vector<std::uint32_t>& f) const {
    std::vector<std::uint32_t> d(static_cast<std::size_t>(m_ + 1), 0);
    for (int i = 0; i < m_; ++i) {
      d[static_cast<std::size_t>(i + 1)] = a % p_;
      a /= p_;
    }
    std::uint32_t top = d[static_cast<std::size_t>(m_)];
    for (int i = 0; i < m_; ++i)
      d[static_cast<std::size_t>(i)] = (d[static_cast<std::size_t>(i)] + (p_ - top) * f[static_cast<std::size_t>(i)] % p_) % p_;
    std::uint32_t r = 0, mul = 1;
    for (int i = 0; i < m_; ++i) {
      r += d[static_cast<std::size_t>(i)] * mul;
      mul *= p_;
    }
    return r;
  }
  void find_modulus() {
    exp_.assign(q_, 0);
    log_.assign(q_, 0);
    if (m_ == 1) {
      // primitive root mod p
      for (std::uint32_t g = 1; g < p_; ++g) {
        std::vector<bool> seen(p_, false);
        std::uint32_t x = 1;
        bool ok = true;
        for (std::uint32_t k = 0; k + 1 < p_; ++k) {
          if (seen[x]) {
            ok = false;
            break;
          }
          seen[x] = true;
          exp_[k] = x;
          log_[x] = k;
          x = static_cast<std::uint32_t>((static_cast<std::uint64_t>(x) * g) % p_);
        }
        if (ok && x == 1) return;
      }
      throw Error(ErrorCode::BadPrime, "no primitive root");
    }
    // monic f of degree m with x primitive modulo f
    for (std::uint32_t code = 0; code < q_; ++code) {
      std::vector<std::uint32_t> f(static_cast<std::size_t>(m_));
      std::uint32_t c = code;
      for (auto& v : f) {
        v = c % p_;
        c /= p_;
      }
      if (f[0] == 0) continue;
      std::vector<bool> seen(q_, false);
      std::uint32_t x = 1;
      bool ok = true;
      for (std::uint32_t k = 0; k + 1 < q_; ++k) {
        if (x == 0 || seen[x]) {
          ok = false;
          break;
        }
        seen[x] = true;
        exp_[k] = x;
        log_[x] = k;
        x = times_x(x, f);
      }
      if (ok && x == 1) return;
    }
    throw Error(ErrorCode::BadPrime, "no primitive modulus found");
  }

  std::uint32_t p_;
  int m_;
  std::uint32_t q_;
  std::vector<std::uint32_t> exp_, log_;
};

// Ring map from a tower field into GF(p^m).
class ModularEmbedding {
 public:
  ModularEmbedding(const Field& K, std::uint32_t p, int m) : K_(K), gf_(p, m) {
    if (K.characteristic() != 0 && K.characteristic() != p)
      throw Error(ErrorCode::BadPrime, "prime differs from the field characteristic");
    const auto& d = K.data();
    std::vector<std::uint32_t> roots;
    for (int g = 0; g < K.ngens(); ++g) {
      const std::uint32_t a = scalar(d.a[g]);
      const std::uint32_t t = gf_.from_int(d.t[g]);
      bool found = false;
      for (std::uint32_t r = 0; r < gf_.size() && !found; ++r) {
        // r^2 = a + t r
        if (gf_.mul(r, r) == gf_.add(a, gf_.mul(t, r))) {
          roots.push_back(r);
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::BadPrime, "generator has no root in GF(p^m)");
    }
    basis_.push_back(1);
    if (K.ngens() >= 1) basis_.push_back(roots[0]);
    if (K.ngens() >= 2) {
      basis_.push_back(roots[1]);
      basis_.push_back(gf_.mul(roots[0], roots[1]));
    }
  }
  const GaloisField& gf() const { return gf_; }

  std::uint32_t scalar(const mpq_class& q) const {
    const long long p = gf_.p();
    mpz_class n, dn;
    mpz_fdiv_r_ui(n.get_mpz_t(), q.get_num().get_mpz_t(), static_cast<unsigned long>(p));
    mpz_fdiv_r_ui(dn.get_mpz_t(), q.get_den().get_mpz_t(), static_cast<unsigned long>(p));
    if (dn == 0) throw Error(ErrorCode::BadPrime, "coefficient denominator divisible by p");
    return gf_.mul(gf_.from_int(n.get_si()), gf_.inv(gf_.from_int(dn.get_si())));
  }
  std::uint32_t map(const Coeff& c) const {
    std::uint32_t r = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] != 0) r = gf_.add(r, gf_.mul(scalar(c[i]), basis_[i]));
    return r;
  }

 private:
  Field K_;
  GaloisField gf_;
  std::vector<std::uint32_t> basis_;
};

struct FiberReport {
  bool passed = false;
  std::uint32_t p = 0;
  int ext_degree = 1;        // coefficients live in GF(p^ext_degree)
  std::uint32_t domain = 0;  // points per coordinate
  int bound = 0;
  int trials = 0;
  int valid_trials = 0;
  int within_bound = 0;
  int max_fiber = 0;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::string note;

  json to_json() const {
    json j{{"kind", "certificate"}, {"passed", passed},          {"p", p},
           {"ext_degree", ext_degree}, {"domain", domain},      {"bound", bound},
           {"trials", trials},         {"valid_trials", valid_trials}, {"within_bound", within_bound},
           {"max_fiber", max_fiber},   {"fraction", fraction},  {"seed", seed}};
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

namespace detail {

inline int embedding_degree(const Field& K, std::uint32_t p) {
  // smallest m in {1,2} so that every generator has a root in GF(p^m)
  if (K.ngens() == 0) return 1;
  try {
    ModularEmbedding e(K, p, 1);
    return 1;
  } catch (const Error&) {
    return 2;
  }
}

}  // namespace detail

namespace detail {

// Fiber counter for one block of variables. A first stage of variables carrying
// at least one candidate is tabulated; remaining variables are enumerated one
// at a time, pruning by the candidates they complete.
class StagedBlock {
 public:
  static constexpr double kTableCap = 3.0e6;
  static constexpr double kStepCap = 3.0e5;
  static constexpr std::size_t kPartialCap = 20000;

  StagedBlock(const std::vector<const RatFunc*>& cands, const std::vector<int>& vars, std::uint32_t p, int m0)
      : n_(cands[0]->nvars()) {
    auto fits = [&](int mm) {
      const double q = std::pow(static_cast<double>(p), mm);
      return q <= 4096.0 && std::pow(q, stage0_) <= kTableCap && std::pow(q, work_exponent_) <= kStepCap;
    };
    // the plan admitting the largest GF(p^m): small fields are dominated by contracted curves
    int m = 0;
    std::size_t best = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      order(cands, vars, c);
      if (!fits(m0)) continue;
      int mm = m0;
      while (fits(mm + m0)) mm += m0;
      if (mm > m) {
        m = mm;
        best = c;
      }
    }
    if (m == 0) throw Error(ErrorCode::CapExceeded, "fiber domain too large");
    order(cands, vars, best);
    emb_.emplace(cands[0]->field(), p, m);
    const GaloisField& gf = emb_->gf();
    domain_ = gf.elements();
    auto reduce = [&](const Poly& P) {
      std::vector<Term> mp;
      for (const auto& t : P.terms()) {
        std::uint32_t c = emb_->map(t.c);
        if (!c) continue;
        Term term{c, {}};
        for (int i = 0; i < n_; ++i)
          if (const long k = t.e[static_cast<std::size_t>(i)]) {
            term.powers.emplace_back(i, static_cast<int>(k));
            maxdeg_ = std::max(maxdeg_, static_cast<int>(k));
          }
        mp.push_back(std::move(term));
      }
      return mp;
    };
    for (const auto* r : cands_) {
      nums_.push_back(reduce(r->num()));
      dens_.push_back(reduce(r->den()));
      if (dens_.back().empty()) throw Error(ErrorCode::BadPrime, "denominator vanishes modulo p");
    }
    build_table();
  }

  int ext_degree() const { return emb_->gf().degree(); }
  std::uint32_t domain() const { return static_cast<std::uint32_t>(domain_.size()); }

  // Fiber size through a random point; nullopt at poles. Degenerate fibers
  // that blow past the enumeration cap report kPartialCap.
  std::optional<std::size_t> sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, domain_.size() - 1);
    Point pt = make_point();
    for (int v : vars_) set(pt, v, domain_[pick(rng)]);
    std::vector<std::uint32_t> target(cands_.size());
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      auto val = value(c, pt);
      if (!val) return std::nullopt;
      target[c] = *val;
    }
    const std::uint64_t h = hash_stage0(target);
    auto lo = std::lower_bound(table_.begin(), table_.end(), std::make_pair(h, std::size_t{0}));
    std::vector<Point> partial;
    for (auto it = lo; it != table_.end() && it->first == h; ++it) {
      Point q = make_point();
      decode(it->second, q);
      if (matches(q, target, 0)) partial.push_back(std::move(q));
    }
    for (std::size_t lvl = 1; lvl < levels_.size(); ++lvl) {
      std::vector<Point> next;
      const int v = levels_[lvl];
      for (auto& q : partial)
        for (std::uint32_t x : domain_) {
          set(q, v, x);
          if (matches(q, target, lvl)) {
            next.push_back(q);
            if (next.size() >= kPartialCap) return kPartialCap;
          }
        }
      partial = std::move(next);
    }
    return partial.size();
  }

 private:
  // Candidate order and variable levels: level 0 is the support of candidate
  // `first`, each later level adds the variable completing the most candidates.
  void order(const std::vector<const RatFunc*>& cands, const std::vector<int>& vars, std::size_t first) {
    cands_.clear();
    level_of_.clear();
    work_exponent_ = 0;
    std::vector<std::vector<int>> support;
    for (const auto* r : cands) {
      std::vector<int> sp;
      for (int v : vars)
        if (r->num().degree(v) > 0 || r->den().degree(v) > 0) sp.push_back(v);
      support.push_back(std::move(sp));
    }
    std::vector<int> placed = support[first];
    if (placed.empty()) placed.push_back(vars[0]);
    stage0_ = static_cast<int>(placed.size());
    auto inside = [&](const std::vector<int>& sp) {
      return std::all_of(sp.begin(), sp.end(), [&](int v) { return std::find(placed.begin(), placed.end(), v) != placed.end(); });
    };
    std::vector<bool> done(cands.size(), false);
    auto take = [&](int lvl) {
      for (std::size_t c = 0; c < cands.size(); ++c)
        if (!done[c] && inside(support[c])) {
          done[c] = true;
          cands_.push_back(cands[c]);
          level_of_.push_back(lvl);
        }
    };
    take(0);
    vars_ = placed;
    levels_.assign(1, -1);
    // expected dimension of the partial fibers, and the largest enumeration exponent
    int dim = std::max(0, stage0_ - static_cast<int>(cands_.size()));
    while (placed.size() < vars.size()) {
      int best = -1, best_gain = -1;
      for (int v : vars) {
        if (std::find(placed.begin(), placed.end(), v) != placed.end()) continue;
        placed.push_back(v);
        int gain = 0;
        for (std::size_t c = 0; c < cands.size(); ++c) gain += !done[c] && inside(support[c]);
        placed.pop_back();
        if (gain > best_gain) {
          best = v;
          best_gain = gain;
        }
      }
      placed.push_back(best);
      vars_.push_back(best);
      levels_.push_back(best);
      take(static_cast<int>(levels_.size()) - 1);
      work_exponent_ = std::max(work_exponent_, dim + 1);
      dim = std::max(0, dim + 1 - best_gain);
    }
  }

  struct Term {
    std::uint32_t c;
    std::vector<std::pair<int, int>> powers;  // (variable, exponent)
  };
  struct Point {
    std::vector<std::vector<std::uint32_t>> pw;  // pw[v][k] = x_v^k
  };

  Point make_point() const {
    return Point{std::vector<std::vector<std::uint32_t>>(static_cast<std::size_t>(n_), std::vector<std::uint32_t>(static_cast<std::size_t>(maxdeg_ + 1), 0))};
  }

  void set(Point& pt, int v, std::uint32_t x) const {
    auto& row = pt.pw[static_cast<std::size_t>(v)];
    row[0] = 1;
    for (std::size_t k = 1; k < row.size(); ++k) row[k] = emb_->gf().mul(row[k - 1], x);
  }

  std::optional<std::uint32_t> value(std::size_t c, const Point& pt) const {
    const GaloisField& gf = emb_->gf();
    auto evalp = [&](const std::vector<Term>& mp) {
      std::uint32_t acc = 0;
      for (const auto& t : mp) {
        std::uint32_t v = t.c;
        for (const auto& [i, k] : t.powers) v = gf.mul(v, pt.pw[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
        acc = gf.add(acc, v);
      }
      return acc;
    };
    std::uint32_t dv = evalp(dens_[c]);
    if (dv == 0) return std::nullopt;
    return gf.mul(evalp(nums_[c]), gf.inv(dv));
  }

  bool matches(const Point& q, const std::vector<std::uint32_t>& target, std::size_t lvl) const {
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      if (static_cast<std::size_t>(level_of_[c]) != lvl) continue;
      auto val = value(c, q);
      if (!val || *val != target[c]) return false;
    }
    return true;
  }

  std::uint64_t hash_stage0(const std::vector<std::uint32_t>& vals) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      if (level_of_[c] != 0) continue;
      h ^= vals[c] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 1099511628211ull;
    }
    return h;
  }

  void decode(std::size_t idx, Point& q) const {
    const std::size_t dom = domain_.size();
    for (int i = 0; i < stage0_; ++i) {
      set(q, vars_[static_cast<std::size_t>(i)], domain_[idx % dom]);
      idx /= dom;
    }
  }

  void build_table() {
    const auto npts = static_cast<std::size_t>(std::pow(static_cast<double>(domain_.size()), stage0_));
    Point q = make_point();
    std::vector<std::uint32_t> vals(cands_.size(), 0);
    for (std::size_t idx = 0; idx < npts; ++idx) {
      decode(idx, q);
      bool pole = false;
      for (std::size_t c = 0; c < cands_.size() && !pole; ++c) {
        if (level_of_[c] != 0) continue;
        auto val = value(c, q);
        if (!val) pole = true;
        else vals[c] = *val;
      }
      if (!pole) table_.emplace_back(hash_stage0(vals), idx);
    }
    std::sort(table_.begin(), table_.end());
  }

  int n_;
  int stage0_ = 0;
  int work_exponent_ = 0;
  std::vector<int> vars_;    // level-0 variables first, then one per level
  std::vector<int> levels_;  // variable added at each level (-1 for level 0)
  std::vector<const RatFunc*> cands_;
  std::vector<int> level_of_;
  std::optional<ModularEmbedding> emb_;
  std::vector<std::uint32_t> domain_;
  int maxdeg_ = 0;
  std::vector<std::vector<Term>> nums_, dens_;
  std::vector<std::pair<std::uint64_t, std::size_t>> table_;  // sorted (stage-0 hash, point index)
};

// Groups candidates whose variable supports overlap; the map is the product of the blocks.
inline std::vector<std::pair<std::vector<const RatFunc*>, std::vector<int>>> variable_blocks(const std::vector<RatFunc>& cands) {
  const int n = cands[0].nvars();
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
    return v;
  };
  std::vector<std::vector<int>> support;
  for (const auto& r : cands) {
    std::vector<int> s;
    for (int v = 0; v < n; ++v)
      if (r.num().degree(v) > 0 || r.den().degree(v) > 0) s.push_back(v);
    for (std::size_t k = 1; k < s.size(); ++k) parent[static_cast<std::size_t>(find(s[k]))] = find(s[0]);
    support.push_back(std::move(s));
  }
  std::vector<std::pair<std::vector<const RatFunc*>, std::vector<int>>> blocks;
  std::vector<int> block_of(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    int root = find(v);
    if (block_of[static_cast<std::size_t>(root)] < 0) {
      block_of[static_cast<std::size_t>(root)] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(block_of[static_cast<std::size_t>(root)])].second.push_back(v);
  }
  for (std::size_t c = 0; c < cands.size(); ++c) {
    // constant candidates travel with the first block
    int b = support[c].empty() ? 0 : block_of[static_cast<std::size_t>(find(support[c][0]))];
    blocks[static_cast<std::size_t>(b)].first.push_back(&cands[c]);
  }
  // a block without candidates is a free direction: every fiber through it is infinite
  std::vector<std::pair<std::vector<const RatFunc*>, std::vector<int>>> out;
  for (auto& b : blocks) {
    if (b.first.empty()) b.first.push_back(nullptr);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace detail

// Checks that the map given by `cands` has generic fiber size at most `bound`
// on points of finite domains, one per block of variables the candidates couple.
inline FiberReport fiber_degree_check(const std::vector<RatFunc>& cands, int bound, std::uint32_t p, int trials,
                                      std::uint64_t seed) {
  if (cands.empty()) throw Error(ErrorCode::InvalidAction, "no candidate functions");
  const Field& K = cands[0].field();
  if (!is_prime_u64(p)) throw Error(ErrorCode::NonPrimeModulus, std::to_string(p) + " is not prime");
  if (K.characteristic() != 0 && K.characteristic() != p)
    throw Error(ErrorCode::BadPrime, "prime must equal the field characteristic");
  const int m0 = detail::embedding_degree(K, p);
  auto blocks = detail::variable_blocks(cands);
  FiberReport rep;
  rep.p = p;
  rep.bound = bound;
  rep.trials = trials;
  rep.seed = seed;
  for (const auto& c : cands)
    if (c.is_constant()) {
      rep.note = "constant candidate";
      return rep;
    }
  for (const auto& b : blocks)
    if (b.first[0] == nullptr) {
      rep.note = "candidates do not involve every variable";
      return rep;
    }
  std::vector<detail::StagedBlock> tables;
  for (const auto& b : blocks) tables.emplace_back(b.first, b.second, p, m0);
  rep.ext_degree = tables[0].ext_degree();
  rep.domain = tables[0].domain();
  for (const auto& t : tables)
    if (t.domain() < rep.domain) {
      rep.domain = t.domain();
      rep.ext_degree = t.ext_degree();
    }
  if (tables.size() > 1) rep.note = "product of " + std::to_string(tables.size()) + " variable blocks";
  std::mt19937_64 rng(seed);
  bool hopeless = false;
  for (int t = 0; t < trials && !hopeless; ++t) {
    long long f = 1;
    bool valid = true;
    for (const auto& bt : tables) {
      auto sz = bt.sample(rng);
      if (!sz) {
        valid = false;
        continue;
      }
      f = std::min<long long>(f * static_cast<long long>(*sz), INT32_MAX);
    }
    if (!valid) continue;
    ++rep.valid_trials;
    rep.max_fiber = std::max(rep.max_fiber, static_cast<int>(f));
    if (f <= bound) ++rep.within_bound;
    // stop once 95% is out of reach even if every remaining trial succeeds
    const int rest = trials - t - 1;
    hopeless = static_cast<double>(rep.within_bound + rest) < 0.95 * (rep.valid_trials + rest);
  }
  if (hopeless) {
    rep.note = rep.note.empty() ? "stopped early" : rep.note + "; stopped early";
  } else if (rep.valid_trials * 2 < trials)
    throw Error(ErrorCode::DegenerateSampling, "too many sample points hit poles");
  rep.fraction = rep.valid_trials ? static_cast<double>(rep.within_bound) / rep.valid_trials : 0.0;
  rep.passed = rep.fraction >= 0.95;
  return rep;
}

}  // namespace qmono
