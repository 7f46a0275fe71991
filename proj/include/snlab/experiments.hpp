// Product-set and random-walk experiments over subsets of the symmetric
// group: bitset-backed sets with exact product layers, covering numbers with
// per-element first-hit profiles, Schreier-graph diameters, stabilizer
// recovery inside product powers, growth reports, walk mixing profiles,
// triple product mixing, three-term progression search, covering by
// subgroup translates, and the band / half-window example families with
// their exact linear statistics.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "snlab/combinatorics.hpp"
#include "snlab/globalness.hpp"

namespace snlab {

// ---------------------------------------------------------------------------
// Rank sets

// Subset of S_n stored as a bitset over permutation ranks.
struct RankSet {
  int n = 0;
  boost::dynamic_bitset<> bits;

  static RankSet empty(int n) {
    RankSet s;
    s.n = n;
    s.bits.resize(factorial(n));
    return s;
  }

  std::uint64_t count() const { return bits.count(); }
  bool test(std::uint32_t r) const { return bits.test(r); }
  void insert(std::uint32_t r) { bits.set(r); }
  Rat mu() const { return rat(static_cast<long long>(count()), static_cast<long long>(factorial(n))); }
};

inline RankSet full_set(int n) {
  RankSet s = RankSet::empty(n);
  s.bits.set();
  return s;
}

inline RankSet even_set(int n) {
  RankSet s = RankSet::empty(n);
  const PermTable& T = perm_table(n);
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (T.sgn[r] > 0) s.bits.set(r);
  return s;
}

inline RankSet set_from_indicator(const GroupFunction& f, double threshold = 0.5) {
  RankSet s = RankSet::empty(f.n);
  for (std::uint32_t r = 0; r < f.v.size(); ++r)
    if (f.v[r] > threshold) s.bits.set(r);
  return s;
}

inline GroupFunction indicator(const RankSet& A) {
  GroupFunction f = GroupFunction::zero(A.n);
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    f.v[r] = 1.0;
  return f;
}

inline RankSet inverse_set(const RankSet& A) {
  const PermTable& T = perm_table(A.n);
  RankSet s = RankSet::empty(A.n);
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    s.bits.set(T.inv[r]);
  return s;
}

inline bool is_symmetric_set(const RankSet& A) { return A.bits == inverse_set(A).bits; }

inline bool is_even_support(const RankSet& A) {
  const PermTable& T = perm_table(A.n);
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    if (T.sgn[r] < 0) return false;
  return true;
}

inline bool contains_identity(const RankSet& A) { return A.bits.test(perm_rank(Perm::identity(A.n))); }

// {x a : x in X, a in A}.
inline RankSet product_set(const RankSet& X, const RankSet& A) {
  if (X.n != A.n) throw std::invalid_argument("product_set: size mismatch");
  const PermTable& T = perm_table(A.n);
  std::vector<std::uint32_t> as;
  as.reserve(A.count());
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    as.push_back(r);
  RankSet out = RankSet::empty(A.n);
  for (std::size_t x = X.bits.find_first(); x != boost::dynamic_bitset<>::npos;
       x = X.bits.find_next(x)) {
    const std::uint8_t* xi = T.images(x);
    for (std::uint32_t a : as) out.bits.set(rank_compose(xi, T.images(a), A.n));
  }
  return out;
}

// Measure of A inside the chosen ambient group.
inline Rat set_density(const RankSet& A, Ambient amb) {
  if (amb == Ambient::Sn) return A.mu();
  if (!is_even_support(A)) throw std::invalid_argument("set_density: odd element in alternating ambient");
  return rat(static_cast<long long>(A.count()), static_cast<long long>(factorial(A.n) / 2));
}

// ---------------------------------------------------------------------------
// Covering number

struct CoveringReport {
  Ambient ambient = Ambient::Sn;
  bool directed = false;
  bool covered = false;
  int m = -1;                   // least power with A^m = ambient; -1 when the layers cycle first
  bool stabilized = false;      // both parity chains repeated without covering
  std::vector<Rat> layer_mu;    // ambient measure of A^j, j = 1..layers.size()
  std::vector<boost::dynamic_bitset<>> layers;
  std::vector<int> first_hit;   // per rank: least j >= 1 with membership in A^j; -1 unreached
  std::uint64_t closure_size = 0;  // union of the computed layers
  GlobalnessReport cert;
};

// Smallest m with A^m equal to the ambient group.  Layers are computed
// exactly; for symmetric A the two parity chains are monotone, so a repeat of
// both consecutive layers proves the sequence never covers.
inline CoveringReport covering_number(const RankSet& A, Ambient amb, bool directed = false,
                                      int max_m = 64) {
  if (A.count() == 0) throw std::invalid_argument("covering_number: empty set");
  if (amb == Ambient::An && !is_even_support(A))
    throw std::invalid_argument("covering_number: odd element in alternating ambient");
  if (!directed && !is_symmetric_set(A))
    throw std::invalid_argument("covering_number: set is not symmetric (pass directed to allow)");

  const std::uint64_t nf = factorial(A.n);
  boost::dynamic_bitset<> amb_bits = (amb == Ambient::Sn) ? full_set(A.n).bits : even_set(A.n).bits;
  const long long amb_size = static_cast<long long>(amb_bits.count());

  CoveringReport rep;
  rep.ambient = amb;
  rep.directed = directed;
  rep.first_hit.assign(nf, -1);

  boost::dynamic_bitset<> uni(nf);
  RankSet L = A;
  for (int m = 1; m <= max_m; ++m) {
    if (m > 1) L = product_set(L, A);
    rep.layers.push_back(L.bits);
    rep.layer_mu.push_back(rat(static_cast<long long>(L.count()), amb_size));
    for (std::size_t r = L.bits.find_first(); r != boost::dynamic_bitset<>::npos;
         r = L.bits.find_next(r))
      if (rep.first_hit[r] < 0) rep.first_hit[r] = m;
    uni |= L.bits;
    if (L.bits == amb_bits) {
      rep.covered = true;
      rep.m = m;
      break;
    }
    // Each layer determines the next, so any repeat proves the sequence is
    // periodic from the repeat on and never reaches the ambient group.
    const std::size_t s = rep.layers.size();
    for (std::size_t j = 0; j + 1 < s && !rep.stabilized; ++j)
      if (rep.layers[j] == rep.layers[s - 1]) rep.stabilized = true;
    if (rep.stabilized) break;
  }
  rep.closure_size = uni.count();
  rep.cert = global_audit(indicator(A), 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Schreier graph on ell-tuples

struct SchreierReport {
  int ell = 1;
  std::uint64_t vertices = 0;
  bool connected = false;
  int diameter = -1;               // max eccentricity when connected
  std::uint64_t component_size = 0;  // component of the tuple (0, ..., ell-1)
  GlobalnessReport cert;
};

// Diameter of the Schreier graph on ordered ell-tuples of distinct entries,
// with edges v ~ a(v) for a in A.  A quotient of the Cayley graph, so the
// diameter never exceeds the covering number of A.
inline SchreierReport schreier_diameter(const RankSet& A, int ell) {
  if (A.count() == 0) throw std::invalid_argument("schreier_diameter: empty set");
  if (ell < 1 || ell > A.n) throw std::invalid_argument("schreier_diameter: bad tuple length");
  if (!is_symmetric_set(A)) throw std::invalid_argument("schreier_diameter: set is not symmetric");
  const PermTable& T = perm_table(A.n);
  const std::uint64_t V = tuple_count(A.n, ell);
  if (V > (1u << 22)) throw std::invalid_argument("schreier_diameter: tuple space too large");

  std::vector<std::uint32_t> as;
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    as.push_back(r);

  std::vector<std::vector<std::uint32_t>> nb(V);
  Tuple t(ell), w(ell);
  for (std::uint64_t v = 0; v < V; ++v) {
    t = tuple_unrank(A.n, ell, v);
    for (std::uint32_t a : as) {
      const std::uint8_t* ai = T.images(a);
      for (int i = 0; i < ell; ++i) w[i] = ai[t[i]];
      nb[v].push_back(static_cast<std::uint32_t>(tuple_rank(A.n, w)));
    }
    std::sort(nb[v].begin(), nb[v].end());
    nb[v].erase(std::unique(nb[v].begin(), nb[v].end()), nb[v].end());
  }

  SchreierReport rep;
  rep.ell = ell;
  rep.vertices = V;
  std::vector<int> dist(V);
  std::vector<std::uint32_t> queue(V);
  int diam = 0;
  bool connected = true;
  for (std::uint64_t src = 0; src < V && connected; ++src) {
    std::fill(dist.begin(), dist.end(), -1);
    std::size_t head = 0, tail = 0;
    dist[src] = 0;
    queue[tail++] = static_cast<std::uint32_t>(src);
    int ecc = 0;
    while (head < tail) {
      std::uint32_t v = queue[head++];
      ecc = std::max(ecc, dist[v]);
      for (std::uint32_t u : nb[v])
        if (dist[u] < 0) {
          dist[u] = dist[v] + 1;
          queue[tail++] = u;
        }
    }
    if (tail < V) connected = false;
    if (src == 0) rep.component_size = tail;
    diam = std::max(diam, ecc);
  }
  rep.connected = connected;
  rep.diameter = connected ? diam : -1;
  rep.cert = global_audit(indicator(A), 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Stabilizer recovery inside a product power

struct StabilizerCoverReport {
  int M = 1;
  int power = 8;           // 8M
  Rat mu_a;                // density of A inside the alternating group
  Rat budget;              // mu_a^{5M}
  bool found = false;
  std::vector<int> window;  // pointwise-stabilized positions, empty for the whole group
  Rat mu_u;                 // alternating-group measure of the recovered subgroup
  GlobalnessReport cert;
};

// Searches A^{8M} for the even pointwise stabilizer of a smallest window I
// whose measure still clears mu(A)^{5M}.  Windows are scanned by size.
inline StabilizerCoverReport stabilizer_cover(const RankSet& A, int M) {
  if (M < 1) throw std::invalid_argument("stabilizer_cover: M must be positive");
  if (A.n > 7) throw std::invalid_argument("stabilizer_cover: layer products past n = 7 are too large");
  if (A.count() == 0) throw std::invalid_argument("stabilizer_cover: empty set");
  if (!is_even_support(A)) throw std::invalid_argument("stabilizer_cover: set must lie in the alternating group");
  if (!is_symmetric_set(A)) throw std::invalid_argument("stabilizer_cover: set is not symmetric");
  const PermTable& T = perm_table(A.n);
  const int n = A.n;
  const long long half = static_cast<long long>(factorial(n) / 2);

  StabilizerCoverReport rep;
  rep.M = M;
  rep.power = 8 * M;
  rep.mu_a = set_density(A, Ambient::An);
  rep.budget = rat_pow(rep.mu_a, 5 * M);

  // Layer at the target power, with the parity-cycle shortcut once both
  // chains repeat.
  std::vector<boost::dynamic_bitset<>> layers;
  RankSet L = A;
  layers.push_back(L.bits);
  for (int m = 2; m <= rep.power; ++m) {
    const std::size_t s = layers.size();
    if (s >= 4 && layers[s - 1] == layers[s - 3] && layers[s - 2] == layers[s - 4]) {
      layers.push_back(layers[s - 2]);  // repeat matching parity
      continue;
    }
    L = product_set(L, A);
    layers.push_back(L.bits);
  }
  const boost::dynamic_bitset<>& top = layers.back();

  for (int t = 0; t <= n; ++t) {
    const long long stab = (n - t >= 2) ? static_cast<long long>(factorial(n - t) / 2) : 1;
    Rat mu_u = rat(stab, half);
    if (mu_u < rep.budget) break;
    for (const std::vector<int>& I : enumerate_subsets(n, t)) {
      bool ok = true;
      for (std::uint32_t r = 0; r < T.size && ok; ++r) {
        if (T.sgn[r] < 0) continue;
        const std::uint8_t* img = T.images(r);
        bool fixes = true;
        for (int i : I)
          if (img[i] != i) {
            fixes = false;
            break;
          }
        if (fixes && !top.test(r)) ok = false;
      }
      if (ok) {
        rep.found = true;
        rep.window = I;
        rep.mu_u = mu_u;
        rep.cert = global_audit(indicator(A), 4.0, 1);
        return rep;
      }
    }
  }
  rep.cert = global_audit(indicator(A), 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Growth report

struct GrowthBound {
  double c = 0.0, C = 0.0;
  double M = 0.0;
  double bound = 0.0;    // 1 / (1 + c + 4 M 2^{2M})^2
  bool applicable = false;
};

struct GrowthReport {
  Rat mu_a;
  Rat mu_sq;             // exact measure of A^2
  double growth = 0.0;   // mu(A^2) / mu(A)
  std::vector<GrowthBound> grid;
  GlobalnessReport cert;
};

// Exact doubling measure next to a grid of unspecified-constant lower bounds;
// the grid rows are reports, not checks.
inline GrowthReport growth_report(const RankSet& A, const GlobalnessReport& cert) {
  if (A.count() == 0) throw std::invalid_argument("growth_report: empty set");
  GrowthReport rep;
  rep.mu_a = A.mu();
  rep.mu_sq = product_set(A, A).mu();
  rep.growth = rat_double(rep.mu_sq) / rat_double(rep.mu_a);
  rep.cert = cert;
  const double alpha = rat_double(rep.mu_a);
  const double lg = std::log(1.0 / alpha);
  for (double c : {0.05, 0.1, 0.2})
    for (double C : {1.0, 2.0, 4.0}) {
      GrowthBound b;
      b.c = c;
      b.C = C;
      b.M = C * C * std::pow(cert.r, 4.0) * lg * lg / static_cast<double>(A.n);
      b.bound = 1.0 / std::pow(1.0 + c + 4.0 * b.M * std::pow(2.0, 2.0 * b.M), 2.0);
      b.applicable = cert.pass && alpha < 1.0;
      rep.grid.push_back(b);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Walk mixing profile

// Projection kept as the stationary part of a walk: the constants alone, or
// constants plus the sign component (the parity-aware choice for walks
// supported on even permutations).
enum class P0Mode { TrivialOnly, Level0 };

struct WalkStep {
  int m = 1;
  double coverage = 0.0;   // measure of the support of the m-fold power
  double mean = 0.0;
  double sign_mean = 0.0;
  double deviation = 0.0;  // L2 distance from the kept projection
  double millis = 0.0;
};

struct WalkReport {
  P0Mode mode = P0Mode::TrivialOnly;
  std::vector<WalkStep> steps;
  GlobalnessReport cert;
};

// Convolution powers of a density with per-step deviation from the kept
// projection.  Deviations are non-increasing in m for either mode.
inline WalkReport mixing_profile(const GroupFunction& f, int m_max, P0Mode mode, int workers = 0) {
  if (f.n > 7) throw std::invalid_argument("mixing_profile: dense convolution past n = 7 is too large");
  if (m_max < 1) throw std::invalid_argument("mixing_profile: need at least one step");
  if (std::abs(mean(f) - 1.0) > 1e-9) throw std::invalid_argument("mixing_profile: not a density");
  const PermTable& T = perm_table(f.n);
  for (double x : f.v)
    if (x < -1e-12) throw std::invalid_argument("mixing_profile: negative density value");

  WalkReport rep;
  rep.mode = mode;
  GroupFunction g = f;
  for (int m = 1; m <= m_max; ++m) {
    auto t0 = std::chrono::steady_clock::now();
    WalkStep st;
    st.m = m;
    std::size_t sup = 0;
    double s1 = 0.0, ssgn = 0.0, s2 = 0.0;
    for (std::uint32_t r = 0; r < T.size; ++r) {
      const double x = g.v[r];
      if (std::abs(x) > 1e-12) ++sup;
      s1 += x;
      ssgn += x * static_cast<double>(T.sgn[r]);
      s2 += x * x;
    }
    const double inv = 1.0 / static_cast<double>(T.size);
    st.coverage = static_cast<double>(sup) * inv;
    st.mean = s1 * inv;
    st.sign_mean = ssgn * inv;
    double kept = st.mean * st.mean;
    if (mode == P0Mode::Level0) kept += st.sign_mean * st.sign_mean;
    st.deviation = std::sqrt(std::max(0.0, s2 * inv - kept));
    if (m < m_max) g = convolve(f, g, workers);
    st.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rep.steps.push_back(st);
  }
  rep.cert = global_audit(f, 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Triple product mixing

struct TripleMixingReport {
  double total = 0.0;                  // <f*g, h>
  double main_term = 0.0;              // mean and sign contributions
  double defect = 0.0;                 // |total - main_term|
  double tolerance_scale = 0.0;        // 0.01 |f|_1 |g|_1 |h|_1, reported for context
  std::vector<double> level_terms;     // <f * P_d g, P_d h> by level d
  double reconstruction_error = 0.0;   // |sum of level terms - total|
};

// Level decomposition of a triple correlation.  The level terms reconstruct
// the total exactly because distinct components convolve to zero.
inline TripleMixingReport product_mixing_defect(const GroupFunction& f, const GroupFunction& g,
                                                const GroupFunction& h, int workers = 0) {
  check_same_group(f, g);
  check_same_group(f, h);
  if (f.n > 7) throw std::invalid_argument("product_mixing_defect: dense convolution past n = 7 is too large");
  const PermTable& T = perm_table(f.n);

  TripleMixingReport rep;
  rep.total = inner(convolve(f, g, workers), h);

  double sf = 0.0, sg = 0.0, sh = 0.0;
  for (std::uint32_t r = 0; r < T.size; ++r) {
    sf += f.v[r] * static_cast<double>(T.sgn[r]);
    sg += g.v[r] * static_cast<double>(T.sgn[r]);
    sh += h.v[r] * static_cast<double>(T.sgn[r]);
  }
  const double inv = 1.0 / static_cast<double>(T.size);
  rep.main_term = mean(f) * mean(g) * mean(h) + (sf * inv) * (sg * inv) * (sh * inv);
  rep.defect = std::abs(rep.total - rep.main_term);

  double l1f = 0.0, l1g = 0.0, l1h = 0.0;
  for (std::uint32_t r = 0; r < T.size; ++r) {
    l1f += std::abs(f.v[r]);
    l1g += std::abs(g.v[r]);
    l1h += std::abs(h.v[r]);
  }
  rep.tolerance_scale = 0.01 * (l1f * inv) * (l1g * inv) * (l1h * inv);

  Decomposition dg = decompose(g, workers);
  Decomposition dh = decompose(h, workers);
  int max_level = 0;
  for (const Partition& lam : dg.table->partitions) max_level = std::max(max_level, level_of(lam));
  double sum = 0.0;
  for (int d = 0; d <= max_level; ++d) {
    auto keep = [&](const Partition& lam) { return level_of(lam) == d; };
    GroupFunction gd = dg.select(keep);
    GroupFunction hd = dh.select(keep);
    const double term = inner(convolve(f, gd, workers), hd);
    rep.level_terms.push_back(term);
    sum += term;
  }
  rep.reconstruction_error = std::abs(sum - rep.total);
  return rep;
}

// Number of pairs (a, b) in A x B with ab in C.
inline std::uint64_t triple_product_count(const RankSet& A, const RankSet& B, const RankSet& C) {
  if (A.n != B.n || A.n != C.n) throw std::invalid_argument("triple_product_count: size mismatch");
  const PermTable& T = perm_table(A.n);
  std::vector<std::uint32_t> bs;
  for (std::size_t r = B.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = B.bits.find_next(r))
    bs.push_back(r);
  if (A.count() * bs.size() > (1ull << 27))
    throw std::invalid_argument("triple_product_count: pair scan too large");
  std::uint64_t cnt = 0;
  for (std::size_t a = A.bits.find_first(); a != boost::dynamic_bitset<>::npos;
       a = A.bits.find_next(a)) {
    const std::uint8_t* ai = T.images(a);
    for (std::uint32_t b : bs)
      if (C.test(rank_compose(ai, T.images(b), A.n))) ++cnt;
  }
  return cnt;
}

// Even permutations sending x into I and I fully outside itself; such a set
// is product-free, since any product of two members maps x back into I.
inline RankSet routed_window_set(int n, int x, const std::vector<int>& I) {
  for (int i : I)
    if (i == x) throw std::invalid_argument("routed_window_set: x must avoid I");
  const PermTable& T = perm_table(n);
  std::vector<char> in_i(n, 0);
  for (int i : I) {
    if (i < 0 || i >= n) throw std::invalid_argument("routed_window_set: entry out of range");
    in_i[i] = 1;
  }
  RankSet s = RankSet::empty(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    if (T.sgn[r] < 0) continue;
    const std::uint8_t* img = T.images(r);
    if (!in_i[img[x]]) continue;
    bool ok = true;
    for (int i : I)
      if (in_i[img[i]]) {
        ok = false;
        break;
      }
    if (ok) s.bits.set(r);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Three-term progression search

struct RothReport {
  bool found = false;
  std::uint32_t x = 0, y = 0, z = 0;   // x z = y^2, not all three equal
  bool square_injective = true;        // squaring restricted to A
  std::uint64_t pairs_scanned = 0;
  GlobalnessReport cert;
};

// Scans A x A for a progression x, y, z (x z = y^2).  A set with no
// progression has injective squaring: a collision y1^2 = y2^2 yields the
// progression (y1, y2, y1).
inline RothReport find_3ap(const RankSet& A) {
  if (A.count() == 0) throw std::invalid_argument("find_3ap: empty set");
  if (A.count() * A.count() > (1ull << 27)) throw std::invalid_argument("find_3ap: pair scan too large");
  const PermTable& T = perm_table(A.n);

  std::map<std::uint32_t, std::vector<std::uint32_t>> fibers;  // square rank -> roots in A
  for (std::size_t y = A.bits.find_first(); y != boost::dynamic_bitset<>::npos;
       y = A.bits.find_next(y)) {
    const std::uint8_t* yi = T.images(y);
    fibers[rank_compose(yi, yi, A.n)].push_back(y);
  }

  RothReport rep;
  for (const auto& [sq, roots] : fibers)
    if (roots.size() > 1) rep.square_injective = false;

  for (std::size_t x = A.bits.find_first(); x != boost::dynamic_bitset<>::npos && !rep.found;
       x = A.bits.find_next(x)) {
    const std::uint8_t* xi = T.images(x);
    for (std::size_t z = A.bits.find_first(); z != boost::dynamic_bitset<>::npos;
         z = A.bits.find_next(z)) {
      ++rep.pairs_scanned;
      auto it = fibers.find(rank_compose(xi, T.images(z), A.n));
      if (it == fibers.end()) continue;
      for (std::uint32_t y : it->second) {
        if (x == y && y == z) continue;
        rep.found = true;
        rep.x = x;
        rep.y = y;
        rep.z = z;
        break;
      }
      if (rep.found) break;
    }
  }
  rep.cert = global_audit(indicator(A), 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Covering by subgroup translates

struct SubgroupCoverReport {
  int K = 1;
  Rat doubling;                        // mu(A^2) / mu(A)
  FoundRestriction dense_key;          // densifying restriction found on A
  std::uint64_t h_size = 0;            // pointwise stabilizer of the value window
  std::vector<std::uint32_t> translates;
  bool covered = false;                // A inside the union of translate cosets
  double bound = 0.0;                  // K^6 |A| / |H|
  bool bound_ok = false;
  GlobalnessReport cert;
};

// Covers a small-doubling symmetric set by translates of the pointwise
// stabilizer H of the value window found by the densifying search.  The
// translate family is a maximal disjoint system z A' with A' the slice of A
// along the found restriction; disjointness forces membership in z H.
inline SubgroupCoverReport subgroup_cover(const RankSet& A, int K, double r = 2.0) {
  if (A.count() == 0) throw std::invalid_argument("subgroup_cover: empty set");
  if (!contains_identity(A)) throw std::invalid_argument("subgroup_cover: set must contain the identity");
  if (!is_symmetric_set(A)) throw std::invalid_argument("subgroup_cover: set is not symmetric");
  const PermTable& T = perm_table(A.n);
  const int n = A.n;

  SubgroupCoverReport rep;
  rep.K = K;
  rep.doubling = product_set(A, A).mu() / A.mu();
  if (rep.doubling > Rat(K)) throw std::invalid_argument("subgroup_cover: doubling exceeds K");

  rep.dense_key = find_global_restriction(indicator(A), r);
  const Tuple& I = rep.dense_key.key.I;
  const Tuple& J = rep.dense_key.key.J;
  const int t = rep.dense_key.key.t();
  rep.h_size = factorial(n - t);

  // Slice of A along the found pins.
  RankSet slice = RankSet::empty(n);
  for (std::size_t a = A.bits.find_first(); a != boost::dynamic_bitset<>::npos;
       a = A.bits.find_next(a)) {
    const std::uint8_t* img = T.images(a);
    bool ok = true;
    for (int p = 0; p < t; ++p)
      if (img[I[p]] != J[p]) {
        ok = false;
        break;
      }
    if (ok) slice.bits.set(a);
  }
  if (slice.count() == 0) throw std::invalid_argument("subgroup_cover: empty slice");

  // Maximal disjoint system of translates z * slice with z in A.
  boost::dynamic_bitset<> used(factorial(n));
  for (std::size_t z = A.bits.find_first(); z != boost::dynamic_bitset<>::npos;
       z = A.bits.find_next(z)) {
    RankSet zs = RankSet::empty(n);
    const std::uint8_t* zi = T.images(z);
    for (std::size_t s = slice.bits.find_first(); s != boost::dynamic_bitset<>::npos;
         s = slice.bits.find_next(s))
      zs.bits.set(rank_compose(zi, T.images(s), n));
    if ((zs.bits & used).none()) {
      rep.translates.push_back(z);
      used |= zs.bits;
    }
  }

  // Membership in z H reads off the value window: a lies in z H exactly when
  // a and z agree on J... the pins are positions, so compare images on J.
  rep.covered = true;
  for (std::size_t a = A.bits.find_first(); a != boost::dynamic_bitset<>::npos;
       a = A.bits.find_next(a)) {
    const std::uint8_t* ai = T.images(a);
    bool hit = false;
    for (std::uint32_t z : rep.translates) {
      const std::uint8_t* zi = T.images(z);
      bool same = true;
      for (int p = 0; p < t; ++p)
        if (ai[J[p]] != zi[J[p]]) {
          same = false;
          break;
        }
      if (same) {
        hit = true;
        break;
      }
    }
    if (!hit) {
      rep.covered = false;
      break;
    }
  }

  rep.bound = std::pow(static_cast<double>(K), 6.0) * static_cast<double>(A.count()) /
              static_cast<double>(rep.h_size);
  rep.bound_ok = static_cast<double>(rep.translates.size()) <= rep.bound + 1e-9;
  rep.cert = global_audit(indicator(A), 4.0, 1);
  return rep;
}

// ---------------------------------------------------------------------------
// Band family

struct BandParams {
  int n = 8;
  int ell = 3;

  int k() const { return n / 2; }
  Rat rho() const { return rat(4LL * ell - n, n); }

  void validate() const {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("BandParams: n must be even");
    if (ell < 0 || ell > k()) throw std::invalid_argument("BandParams: ell out of range");
  }
};

struct BandReport {
  BandParams params;
  RankSet set;
  Rat mu;                          // closed form, checked against the enumeration
  bool mu_match = false;
  std::vector<Rat> overlap_counts;     // per overlap profile a: products landing back in the set
  std::vector<Rat> overlap_formula;
  bool overlap_match = false;
  Rat pair_total;                  // per-element product count N (profile sum)
  std::uint64_t triple_count = 0;  // exhaustive count of (a, b) in A^2 with ab in A
  bool triple_match = false;       // |A| * N == triple_count
  Rat triple_correlation;          // N / (mu^2 n!)
  GlobalnessReport cert;
};

// Permutations moving exactly ell entries of the lower window back into it.
inline RankSet band_set(const BandParams& p) {
  p.validate();
  const PermTable& T = perm_table(p.n);
  const int k = p.k();
  RankSet s = RankSet::empty(p.n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    int h = 0;
    for (int i = 0; i < k; ++i)
      if (img[i] < k) ++h;
    if (h == p.ell) s.bits.set(r);
  }
  return s;
}

inline Rat band_density_formula(const BandParams& p) {
  const int k = p.k(), ell = p.ell;
  BigInt num = BigInt(factorial(k));
  num *= num;
  num *= num;  // k!^4
  BigInt den = BigInt(factorial(p.n));
  BigInt fe = BigInt(factorial(ell));
  den *= fe * fe;
  BigInt fr = BigInt(factorial(k - ell));
  den *= fr * fr;
  return Rat(num, den);
}

// Product count for one band element, split by the overlap profile
// a = |tau(B) ∩ [k] ∩ image of the window overlap|.
inline Rat band_overlap_formula(const BandParams& p, int a) {
  const int k = p.k(), ell = p.ell;
  const int lo = std::max(0, 2 * ell - k), hi = std::min(ell, 3 * ell - k);
  if (a < lo || a > hi) return Rat(0);
  BigInt num = BigInt(factorial(k)) * BigInt(factorial(k));
  num *= BigInt(factorial(ell)) * BigInt(factorial(ell));
  num *= BigInt(factorial(k - ell)) * BigInt(factorial(k - ell));
  BigInt den = BigInt(factorial(a));
  BigInt f1 = BigInt(factorial(ell - a));
  den *= f1 * f1 * f1;
  BigInt f2 = BigInt(factorial(k - 2 * ell + a));
  den *= f2 * f2 * f2;
  den *= BigInt(factorial(3 * ell - k - a));
  return Rat(num, den);
}

// Builds the band set and verifies its product statistics exactly.  The
// exhaustive triple count is factored through the fibers of sigma -> image
// of the lower window (each fiber has size k!(n-k)!), which keeps the scan
// linear in the set size.
inline BandReport make_band(const BandParams& p, int audit_depth = 3) {
  p.validate();
  const PermTable& T = perm_table(p.n);
  const int n = p.n, k = p.k(), ell = p.ell;

  BandReport rep;
  rep.params = p;
  rep.set = band_set(p);
  rep.mu = band_density_formula(p);
  rep.mu_match = (rep.set.mu() == rep.mu);

  // Representative element and its window overlap.
  const std::uint32_t sigma0 = rep.set.bits.find_first();
  const std::uint8_t* s0 = T.images(sigma0);
  std::vector<int> overlap;  // sigma0([k]) ∩ [k]
  for (int i = 0; i < k; ++i)
    if (s0[i] < k) overlap.push_back(s0[i]);

  // Per-profile counts over tau in A with tau * sigma0 in A.
  std::vector<long long> bucket(static_cast<std::size_t>(ell) + 1, 0);
  for (std::size_t tau = rep.set.bits.find_first(); tau != boost::dynamic_bitset<>::npos;
       tau = rep.set.bits.find_next(tau)) {
    const std::uint8_t* ti = T.images(tau);
    if (!rep.set.test(rank_compose(ti, s0, n))) continue;
    int a = 0;
    for (int v : overlap)
      if (ti[v] < k) ++a;
    ++bucket[a];
  }
  rep.overlap_match = true;
  Rat total = 0;
  for (int a = 0; a <= ell; ++a) {
    Rat formula = band_overlap_formula(p, a);
    rep.overlap_counts.push_back(Rat(bucket[a]));
    rep.overlap_formula.push_back(formula);
    if (Rat(bucket[a]) != formula) rep.overlap_match = false;
    total += formula;
  }
  rep.pair_total = total;

  // Exhaustive triple count via window-image fibers: the per-element count
  // depends only on sigma([k]) as a set, and each image set is hit by
  // exactly k!(n-k)! elements.
  std::vector<std::uint32_t> members;
  members.reserve(rep.set.count());
  for (std::size_t r = rep.set.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = rep.set.bits.find_next(r))
    members.push_back(r);
  std::uint64_t fiber = factorial(k) * factorial(n - k);
  std::uint64_t sum_ns = 0;
  for (const std::vector<int>& low : enumerate_subsets(k, ell))
    for (const std::vector<int>& high : enumerate_subsets(n - k, k - ell)) {
      std::vector<int> S(low);
      for (int v : high) S.push_back(k + v);
      std::uint64_t cnt = 0;
      for (std::uint32_t tau : members) {
        const std::uint8_t* ti = T.images(tau);
        int hits = 0;
        for (int v : S)
          if (ti[v] < k) ++hits;
        if (hits == ell) ++cnt;
      }
      sum_ns += cnt;
    }
  rep.triple_count = fiber * sum_ns;
  rep.triple_match = (Rat(static_cast<long long>(rep.set.count())) * rep.pair_total ==
                      Rat(BigInt(rep.triple_count)));
  rep.triple_correlation = rep.pair_total / (rep.mu * rep.mu * Rat(BigInt(factorial(n))));
  rep.cert = global_audit(indicator(rep.set), 4.0, audit_depth);
  return rep;
}

// ---------------------------------------------------------------------------
// Marginal chains

// Q[v][j] = probability that a uniform element of A maps v to j.  The m-fold
// product of uniform elements has position marginals Q^m.
inline std::vector<std::vector<Rat>> marginal_chain(const RankSet& A) {
  if (A.count() == 0) throw std::invalid_argument("marginal_chain: empty set");
  const PermTable& T = perm_table(A.n);
  const int n = A.n;
  std::vector<std::vector<long long>> cnt(n, std::vector<long long>(n, 0));
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r)) {
    const std::uint8_t* img = T.images(r);
    for (int v = 0; v < n; ++v) ++cnt[v][img[v]];
  }
  const long long total = static_cast<long long>(A.count());
  std::vector<std::vector<Rat>> Q(n, std::vector<Rat>(n));
  for (int v = 0; v < n; ++v)
    for (int j = 0; j < n; ++j) Q[v][j] = rat(cnt[v][j], total);
  return Q;
}

// Same for ordered distinct pairs, indexed by 2-tuple rank.
inline std::vector<std::vector<Rat>> pair_marginal_chain(const RankSet& A) {
  if (A.count() == 0) throw std::invalid_argument("pair_marginal_chain: empty set");
  const PermTable& T = perm_table(A.n);
  const int n = A.n;
  const std::size_t s = tuple_count(n, 2);
  std::vector<std::vector<long long>> cnt(s, std::vector<long long>(s, 0));
  Tuple t(2);
  std::vector<std::size_t> pair_rank(static_cast<std::size_t>(n) * n, 0);
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (v != w) {
        t[0] = v;
        t[1] = w;
        pair_rank[static_cast<std::size_t>(v) * n + w] = tuple_rank(n, t);
      }
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r)) {
    const std::uint8_t* img = T.images(r);
    for (int v = 0; v < n; ++v)
      for (int w = 0; w < n; ++w)
        if (v != w)
          ++cnt[pair_rank[static_cast<std::size_t>(v) * n + w]]
               [pair_rank[static_cast<std::size_t>(img[v]) * n + img[w]]];
  }
  const long long total = static_cast<long long>(A.count());
  std::vector<std::vector<Rat>> Q(s, std::vector<Rat>(s));
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b) Q[a][b] = rat(cnt[a][b], total);
  return Q;
}

inline std::vector<std::vector<Rat>> rat_mat_mul(const std::vector<std::vector<Rat>>& a,
                                                 const std::vector<std::vector<Rat>>& b) {
  const std::size_t s = a.size();
  std::vector<std::vector<Rat>> out(s, std::vector<Rat>(s, Rat(0)));
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t k = 0; k < s; ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < s; ++j) out[i][j] += a[i][k] * b[k][j];
    }
  return out;
}

inline std::vector<std::vector<Rat>> rat_mat_pow(std::vector<std::vector<Rat>> a, int m) {
  if (m < 1) throw std::invalid_argument("rat_mat_pow: positive powers only");
  std::vector<std::vector<Rat>> out = a;
  for (int i = 1; i < m; ++i) out = rat_mat_mul(out, a);
  return out;
}

// ---------------------------------------------------------------------------
// Band walk sharpness

struct SharpnessReport {
  BandParams params;
  int m = 0;
  double phi_norm = 0.0;          // direct norm of the unit linear statistic
  Rat overlap_mean_scaled;        // sum_ij M_ij p_ij from the marginal chain
  Rat expected_scaled;            // n rho^m (zero at m = 0, the uniform case)
  bool scaled_match = false;
  double nu_phi = 0.0;            // walk mean of the statistic
  Rat linear_mass_scaled;         // sum_ij (n p_ij - 1)^2
  Rat expected_mass_scaled;       // n^2 rho^{2m}
  bool mass_match = false;
  double nu_phi2 = 0.0;           // walk second moment of the statistic
  std::vector<double> decay_grid;  // (C rho^2)^m n for C in {1, 10, 100}
};

// Walk statistics of the unit-norm linear form supported on the window
// blocks (coefficient +1 on the two diagonal blocks, -1 off them, scaled by
// sqrt(n-1)/n).  All chain quantities are exact rationals; the degree-one
// mass of the m-fold power is (n-1)/n^2 times the reported scaled mass.
inline SharpnessReport sharpness_statistic(const BandParams& p, int m) {
  p.validate();
  if (m < 0) throw std::invalid_argument("sharpness_statistic: negative power");
  const int n = p.n, k = p.k();
  const PermTable& T = perm_table(n);

  SharpnessReport rep;
  rep.params = p;
  rep.m = m;

  // Direct norm of the statistic: phi = sqrt(n-1)/n * (4h - n) with h the
  // window overlap count.
  const double scale = std::sqrt(static_cast<double>(n - 1)) / static_cast<double>(n);
  double s2 = 0.0;
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    int h = 0;
    for (int i = 0; i < k; ++i)
      if (img[i] < k) ++h;
    const double phi = scale * static_cast<double>(4 * h - n);
    s2 += phi * phi;
  }
  rep.phi_norm = std::sqrt(s2 / static_cast<double>(T.size));

  auto mcoef = [&](int i, int j) -> int { return ((i < k) == (j < k)) ? 1 : -1; };

  RankSet A = band_set(p);
  std::vector<std::vector<Rat>> p1;
  if (m >= 1) p1 = rat_mat_pow(marginal_chain(A), m);
  Rat s = 0, mass = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Rat pij = (m == 0) ? rat(1, n) : p1[i][j];
      s += Rat(mcoef(i, j)) * pij;
      Rat dev = Rat(n) * pij - 1;
      mass += dev * dev;
    }
  rep.overlap_mean_scaled = s;
  rep.expected_scaled = (m == 0) ? Rat(0) : Rat(n) * rat_pow(p.rho(), m);
  rep.scaled_match = (s == rep.expected_scaled);
  rep.nu_phi = scale * rat_double(s);
  rep.linear_mass_scaled = mass;
  rep.expected_mass_scaled = (m == 0) ? Rat(0) : Rat(n) * Rat(n) * rat_pow(p.rho(), 2 * m);
  rep.mass_match = (mass == rep.expected_mass_scaled);

  // Second moment: diagonal terms collapse to single marginals, off-diagonal
  // terms read off the pair chain.
  Rat q = 0;
  if (m == 0) {
    q = 1;  // uniform start: the statistic has unit second moment
  } else {
    std::vector<std::vector<Rat>> p2 = rat_mat_pow(pair_marginal_chain(A), m);
    Tuple t(2);
    Rat acc = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += p1[i][j];  // M_ij^2 = 1
    for (int i = 0; i < n; ++i)
      for (int i2 = 0; i2 < n; ++i2) {
        if (i2 == i) continue;
        t[0] = i;
        t[1] = i2;
        const std::size_t row = tuple_rank(n, t);
        for (int j = 0; j < n; ++j)
          for (int j2 = 0; j2 < n; ++j2) {
            if (j2 == j) continue;
            t[0] = j;
            t[1] = j2;
            acc += Rat(mcoef(i, j) * mcoef(i2, j2)) * p2[row][tuple_rank(n, t)];
          }
      }
    q = Rat(n - 1) / (Rat(n) * Rat(n)) * acc;
  }
  rep.nu_phi2 = rat_double(q);

  const double rho2 = rat_double(p.rho()) * rat_double(p.rho());
  for (double C : {1.0, 10.0, 100.0})
    rep.decay_grid.push_back(std::pow(C * rho2, m) * static_cast<double>(n));
  return rep;
}

// ---------------------------------------------------------------------------
// Half-window family

struct WindowExample {
  int n = 0;
  std::vector<int> positions;
  RankSet set;
  Rat mu;                    // falling(n/2, s) / falling(n, s), checked
  bool mu_match = false;
  double deviation = 0.0;    // mu 2^s - 1
  double order_scale = 0.0;  // s^2 / n
  GlobalnessReport cert;
};

// Permutations routing every listed position into the lower half.  The
// density is within O(s^2/n) of 2^{-s}.
inline WindowExample make_window_example(int n, const std::vector<int>& S) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("make_window_example: n must be even");
  std::vector<char> seen(n, 0);
  for (int i : S) {
    if (i < 0 || i >= n) throw std::invalid_argument("make_window_example: position out of range");
    if (seen[i]++) throw std::invalid_argument("make_window_example: duplicate position");
  }
  const PermTable& T = perm_table(n);
  const int half = n / 2;

  WindowExample ex;
  ex.n = n;
  ex.positions = S;
  ex.set = RankSet::empty(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    bool ok = true;
    for (int i : S)
      if (img[i] >= half) {
        ok = false;
        break;
      }
    if (ok) ex.set.bits.set(r);
  }
  const int s = static_cast<int>(S.size());
  ex.mu = rat(static_cast<long long>(falling_factorial(half, s)),
              static_cast<long long>(falling_factorial(n, s)));
  ex.mu_match = (ex.set.mu() == ex.mu);
  ex.deviation = rat_double(ex.mu) * std::pow(2.0, s) - 1.0;
  ex.order_scale = static_cast<double>(s) * static_cast<double>(s) / static_cast<double>(n);
  ex.cert = global_audit(indicator(ex.set), 4.0, 2, /*biglobal=*/true);
  return ex;
}

// ---------------------------------------------------------------------------
// Degree masses of statistic-measurable sets

struct StatisticMasses {
  int d = 0;
  std::vector<Rat> cumulative;  // squared norm of the projection onto span{1, s, ..., s^j}
  std::vector<Rat> strict;      // increments
};

// Exact projection masses of an indicator onto powers of an integer
// statistic, via the normal equations of the moment Gram matrix.  These are
// degree masses only when every invariant function of matching degree is a
// polynomial in the statistic; callers must check that separately.
inline StatisticMasses statistic_degree_masses(const RankSet& A, const std::vector<long long>& stat,
                                               int d) {
  const std::uint64_t nf = factorial(A.n);
  if (stat.size() != nf) throw std::invalid_argument("statistic_degree_masses: statistic size mismatch");
  if (d < 0 || d > 3) throw std::invalid_argument("statistic_degree_masses: degree out of range");
  for (long long v : stat)
    if (v < -50 || v > 50) throw std::invalid_argument("statistic_degree_masses: statistic value too large");

  std::vector<long long> mom(2 * d + 1, 0), amom(d + 1, 0);
  for (std::uint64_t r = 0; r < nf; ++r) {
    long long p = 1;
    for (int j = 0; j <= 2 * d; ++j) {
      mom[j] += p;
      if (j <= d && A.bits.test(r)) amom[j] += p;
      p *= stat[r];
    }
  }

  StatisticMasses out;
  out.d = d;
  for (int j = 0; j <= d; ++j) {
    const int s = j + 1;
    std::vector<std::vector<Rat>> G(s, std::vector<Rat>(s));
    std::vector<Rat> y(s);
    for (int a = 0; a < s; ++a) {
      y[a] = rat(amom[a], static_cast<long long>(nf));
      for (int b = 0; b < s; ++b) G[a][b] = rat(mom[a + b], static_cast<long long>(nf));
    }
    // Exact elimination; the normal equations are consistent, so dependent
    // columns just leave free variables at zero.
    std::vector<Rat> beta(s, Rat(0));
    std::vector<int> where(s, -1);
    int row = 0;
    for (int col = 0; col < s && row < s; ++col) {
      int piv = -1;
      for (int i = row; i < s; ++i)
        if (G[i][col] != 0) {
          piv = i;
          break;
        }
      if (piv < 0) continue;
      std::swap(G[piv], G[row]);
      std::swap(y[piv], y[row]);
      for (int i = 0; i < s; ++i) {
        if (i == row || G[i][col] == 0) continue;
        Rat c = G[i][col] / G[row][col];
        for (int b = col; b < s; ++b) G[i][b] -= c * G[row][b];
        y[i] -= c * y[row];
      }
      where[col] = row;
      ++row;
    }
    for (int col = 0; col < s; ++col)
      if (where[col] >= 0) beta[col] = y[where[col]] / G[where[col]][col];
    Rat value = 0;
    for (int a = 0; a < s; ++a) value += beta[a] * rat(amom[a], static_cast<long long>(nf));
    out.cumulative.push_back(value);
    out.strict.push_back(j == 0 ? value : value - out.cumulative[j - 1]);
  }
  return out;
}

// Window overlap count h(sigma) = |sigma([k]) ∩ [k]| per rank.
inline std::vector<long long> overlap_statistic(int n, int k) {
  const PermTable& T = perm_table(n);
  std::vector<long long> stat(T.size);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    int h = 0;
    for (int i = 0; i < k; ++i)
      if (img[i] < k) ++h;
    stat[r] = h;
  }
  return stat;
}

// Lower-half routing count over a position window.
inline std::vector<long long> window_statistic(int n, const std::vector<int>& S) {
  const PermTable& T = perm_table(n);
  std::vector<long long> stat(T.size);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    int h = 0;
    for (int i : S)
      if (img[i] < n / 2) ++h;
    stat[r] = h;
  }
  return stat;
}

}  // namespace snlab
