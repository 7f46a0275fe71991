#pragma once

#include <bit>
#include <functional>
#include <map>
#include <mutex>
#include <random>

#include "snlab/algebra.hpp"
#include "snlab/boxspace.hpp"

namespace snlab {

// ---------------------------------------------------------------------------
// Joint law C(sigma, x) on S_n x [n]^n. Exact rational weights; both marginals
// uniform. Two independent constructions must produce identical tables.

struct CouplingTable {
  int n = 0;
  // row r: the (box index, weight) entries of permutation rank r, sorted by box index
  std::vector<std::vector<std::pair<std::size_t, Rat>>> rows;
  // col x: the (perm rank, weight) entries of box point x, sorted by rank
  std::vector<std::vector<std::pair<std::uint32_t, Rat>>> cols;
};

namespace detail {

inline void coupling_finalize(CouplingTable& C) {
  for (auto& r : C.rows) std::sort(r.begin(), r.end());
  for (auto& c : C.cols) std::sort(c.begin(), c.end());
}

}  // namespace detail

// Builds the table from the box side: sigma scans x left to right, keeps x_i
// when still unused, otherwise picks uniformly among the unused values.
inline CouplingTable coupling_table_greedy(int n) {
  if (n < 1 || n > 5) throw std::invalid_argument("coupling_table_greedy: n must be in [1,5]");
  const PermTable& T = perm_table(n);
  const std::size_t nn = box_size(n, n);
  CouplingTable C;
  C.n = n;
  C.rows.assign(T.size, {});
  C.cols.assign(nn, {});
  const Rat px = rat(1, static_cast<long long>(nn));
  std::array<std::uint8_t, kMaxN> img{};
  for (std::size_t xi = 0; xi < nn; ++xi) {
    std::vector<int> x = box_digits(n, n, xi);
    std::function<void(int, std::uint32_t, Rat)> rec = [&](int i, std::uint32_t used, Rat p) {
      if (i == n) {
        Perm s = perm_from_images0(std::vector<int>(img.begin(), img.begin() + n));
        std::uint32_t r = static_cast<std::uint32_t>(perm_rank(s));
        Rat w = px * p;
        C.rows[r].emplace_back(xi, w);
        C.cols[xi].emplace_back(r, w);
        return;
      }
      int v = x[i];
      if (!(used & (1u << v))) {
        img[i] = static_cast<std::uint8_t>(v);
        rec(i + 1, used | (1u << v), p);
        return;
      }
      Rat q = p / Rat(n - i);
      for (int u = 0; u < n; ++u) {
        if (used & (1u << u)) continue;
        img[i] = static_cast<std::uint8_t>(u);
        rec(i + 1, used | (1u << u), q);
      }
    };
    rec(0, 0, Rat(1));
  }
  detail::coupling_finalize(C);
  return C;
}

// Builds the table from the group side: x_i remembers sigma(i) with
// probability (n-i+1)/n, otherwise forgets to one of sigma(1..i-1), each 1/n.
inline CouplingTable coupling_table_forgetful(int n) {
  if (n < 1 || n > 5) throw std::invalid_argument("coupling_table_forgetful: n must be in [1,5]");
  const PermTable& T = perm_table(n);
  const std::size_t nn = box_size(n, n);
  CouplingTable C;
  C.n = n;
  C.rows.assign(T.size, {});
  C.cols.assign(nn, {});
  const Rat ps = rat(1, static_cast<long long>(T.size));
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* im = T.images(r);
    std::function<void(int, std::size_t, Rat)> rec = [&](int i, std::size_t idx, Rat p) {
      if (i == n) {
        Rat w = ps * p;
        C.rows[r].emplace_back(idx, w);
        C.cols[idx].emplace_back(r, w);
        return;
      }
      rec(i + 1, idx * n + im[i], p * rat(n - i, n));
      for (int j = 0; j < i; ++j) rec(i + 1, idx * n + im[j], p * rat(1, n));
    };
    rec(0, 0, Rat(1));
  }
  detail::coupling_finalize(C);
  return C;
}

inline bool coupling_tables_equal(const CouplingTable& A, const CouplingTable& B) {
  return A.n == B.n && A.rows == B.rows;
}

// Exact marginal audit: total mass 1, each row 1/n!, each column 1/n^n.
inline bool coupling_marginals_ok(const CouplingTable& C) {
  const Rat row_target = rat(1, static_cast<long long>(factorial(C.n)));
  const Rat col_target = Rat(1) / Rat(static_cast<long long>(box_size(C.n, C.n)));
  Rat total(0);
  for (const auto& row : C.rows) {
    Rat s(0);
    for (const auto& [xi, w] : row) s += w;
    if (s != row_target) return false;
    total += s;
  }
  if (total != Rat(1)) return false;
  for (const auto& col : C.cols) {
    Rat s(0);
    for (const auto& [r, w] : col) s += w;
    if (s != col_target) return false;
  }
  return true;
}

// Builds both constructions, asserts entrywise equality, caches the result.
inline const CouplingTable& joint_exact(int n) {
  static std::map<int, CouplingTable> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  CouplingTable g = coupling_table_greedy(n);
  CouplingTable f = coupling_table_forgetful(n);
  if (!coupling_tables_equal(g, f))
    throw std::logic_error("joint_exact: greedy and forgetful constructions disagree");
  if (!coupling_marginals_ok(g)) throw std::logic_error("joint_exact: marginal audit failed");
  return cache.emplace(n, std::move(g)).first->second;
}

// ---------------------------------------------------------------------------
// Samplers (any n <= 8).

inline Perm sample_greedy(const std::vector<int>& x, std::mt19937_64& rng) {
  int n = static_cast<int>(x.size());
  std::vector<int> img(n);
  std::uint32_t used = 0;
  for (int i = 0; i < n; ++i) {
    int v = x[i];
    if (v < 0 || v >= n) throw std::invalid_argument("sample_greedy: coordinate out of range");
    if (!(used & (1u << v))) {
      img[i] = v;
    } else {
      int free_cnt = n - i;
      std::uniform_int_distribution<int> U(0, free_cnt - 1);
      int k = U(rng);
      for (int u = 0;; ++u) {
        if (used & (1u << u)) continue;
        if (k-- == 0) {
          img[i] = u;
          break;
        }
      }
    }
    used |= 1u << img[i];
  }
  return perm_from_images0(img);
}

inline std::vector<int> sample_forgetful(const Perm& s, std::mt19937_64& rng) {
  int n = s.n;
  std::vector<int> x(n);
  std::uniform_int_distribution<int> U(0, n - 1);
  for (int i = 0; i < n; ++i) {
    // U(rng) < n - i realizes the remember probability (n - i)/n at 0-based i
    int roll = U(rng);
    if (roll < n - i) {
      x[i] = s.img[i];
    } else {
      std::uniform_int_distribution<int> V(0, i - 1);
      x[i] = s.img[V(rng)];
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// The coupling operators. T_C averages over the greedy conditional law,
// T_C^* over the forgetful one; they are adjoint and both contractions.

inline BoxFunctionExact apply_tc_exact(const CouplingTable& C, const std::vector<Rat>& f) {
  const std::size_t nn = box_size(C.n, C.n);
  if (f.size() != factorial(C.n)) throw std::invalid_argument("apply_tc_exact: size mismatch");
  BoxFunctionExact out = box_zero<Rat>(C.n, C.n);
  const Rat scale(static_cast<long long>(nn));
  for (std::size_t xi = 0; xi < nn; ++xi) {
    Rat acc(0);
    for (const auto& [r, w] : C.cols[xi]) acc += w * f[r];
    out.v[xi] = scale * acc;
  }
  return out;
}

inline std::vector<Rat> apply_tc_star_exact(const CouplingTable& C, const BoxFunctionExact& F) {
  const std::size_t size = factorial(C.n);
  if (F.q != C.n || F.m != C.n) throw std::invalid_argument("apply_tc_star_exact: shape mismatch");
  std::vector<Rat> out(size, Rat(0));
  const Rat scale(static_cast<long long>(size));
  for (std::size_t r = 0; r < size; ++r) {
    Rat acc(0);
    for (const auto& [xi, w] : C.rows[r]) acc += w * F.v[xi];
    out[r] = scale * acc;
  }
  return out;
}

inline BoxFunction apply_tc(const CouplingTable& C, const GroupFunction& f) {
  if (f.n != C.n) throw std::invalid_argument("apply_tc: degree mismatch");
  BoxFunction out = box_zero<double>(C.n, C.n);
  const double scale = static_cast<double>(out.v.size());
  for (std::size_t xi = 0; xi < out.v.size(); ++xi) {
    double acc = 0;
    for (const auto& [r, w] : C.cols[xi]) acc += rat_double(w) * f.v[r];
    out.v[xi] = scale * acc;
  }
  return out;
}

inline GroupFunction apply_tc_star(const CouplingTable& C, const BoxFunction& F) {
  if (F.q != C.n || F.m != C.n) throw std::invalid_argument("apply_tc_star: shape mismatch");
  GroupFunction out = GroupFunction::zero(C.n);
  const double scale = static_cast<double>(out.v.size());
  for (std::size_t r = 0; r < out.v.size(); ++r) {
    double acc = 0;
    for (const auto& [xi, w] : C.rows[r]) acc += rat_double(w) * F.v[xi];
    out.v[r] = scale * acc;
  }
  return out;
}

// Monte Carlo point evaluations for degrees beyond the exact-table cap.
struct McEstimate {
  double value = 0;
  double std_error = 0;
  std::uint64_t samples = 0;
};

inline McEstimate tc_point_mc(const GroupFunction& f, const std::vector<int>& x,
                              std::uint64_t budget, std::mt19937_64& rng) {
  McEstimate e;
  double sum = 0, sq = 0;
  for (std::uint64_t k = 0; k < budget; ++k) {
    double v = f.v[perm_rank(sample_greedy(x, rng))];
    sum += v;
    sq += v * v;
  }
  e.samples = budget;
  e.value = sum / static_cast<double>(budget);
  double var = std::max(0.0, sq / static_cast<double>(budget) - e.value * e.value);
  e.std_error = std::sqrt(var / static_cast<double>(budget));
  return e;
}

// F supplied as a callable so degrees past the dense box cap stay reachable.
inline McEstimate tc_star_point_mc(const std::function<double(const std::vector<int>&)>& F,
                                   const Perm& s, std::uint64_t budget, std::mt19937_64& rng) {
  McEstimate e;
  double sum = 0, sq = 0;
  for (std::uint64_t k = 0; k < budget; ++k) {
    double v = F(sample_forgetful(s, rng));
    sum += v;
    sq += v * v;
  }
  e.samples = budget;
  e.value = sum / static_cast<double>(budget);
  double var = std::max(0.0, sq / static_cast<double>(budget) - e.value * e.value);
  e.std_error = std::sqrt(var / static_cast<double>(budget));
  return e;
}

// ---------------------------------------------------------------------------
// Noise operators on S_n induced by the coupling: the one-sided composition
// T_C^* T_rho T_C, and its average over all right translates, which commutes
// with both group actions.

enum class NoiseMode { Tilde, Symmetrized };

inline std::vector<Rat> sn_noise_exact(const CouplingTable& C, const std::vector<Rat>& f,
                                       const Rat& rho, NoiseMode mode) {
  auto tilde = [&](const std::vector<Rat>& g) {
    return apply_tc_star_exact(C, box_noise(apply_tc_exact(C, g), rho));
  };
  if (mode == NoiseMode::Tilde) return tilde(f);
  const PermTable& T = perm_table(C.n);
  std::vector<Rat> acc(f.size(), Rat(0));
  for (std::uint32_t t = 0; t < T.size; ++t) {
    Perm tau = T.get(t);
    std::vector<Rat> h = tilde(act_exact(C.n, tau, f, Side::Right));
    std::vector<Rat> back = act_exact(C.n, inverse(tau), h, Side::Right);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += back[i];
  }
  Rat scale = Rat(1) / Rat(static_cast<long long>(T.size));
  for (auto& x : acc) x *= scale;
  return acc;
}

inline GroupFunction sn_noise(const CouplingTable& C, const GroupFunction& f, double rho,
                              NoiseMode mode) {
  auto tilde = [&](const GroupFunction& g) { return apply_tc_star(C, box_noise(apply_tc(C, g), rho)); };
  if (mode == NoiseMode::Tilde) return tilde(f);
  const PermTable& T = perm_table(C.n);
  GroupFunction acc = GroupFunction::zero(C.n);
  for (std::uint32_t t = 0; t < T.size; ++t) {
    Perm tau = T.get(t);
    GroupFunction h = tilde(act(tau, f, Side::Right));
    GroupFunction back = act(inverse(tau), h, Side::Right);
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += back.v[i];
  }
  for (auto& x : acc.v) x /= static_cast<double>(T.size);
  return acc;
}

// Symmetrization over a sampled subset of right translates.
inline GroupFunction sn_noise_sampled(const CouplingTable& C, const GroupFunction& f, double rho,
                                      std::uint64_t translates, std::mt19937_64& rng) {
  const PermTable& T = perm_table(C.n);
  std::uniform_int_distribution<std::uint32_t> U(0, T.size - 1);
  GroupFunction acc = GroupFunction::zero(C.n);
  for (std::uint64_t k = 0; k < translates; ++k) {
    Perm tau = T.get(U(rng));
    GroupFunction h = apply_tc_star(C, box_noise(apply_tc(C, act(tau, f, Side::Right)), rho));
    GroupFunction back = act(inverse(tau), h, Side::Right);
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += back.v[i];
  }
  for (auto& x : acc.v) x /= static_cast<double>(translates);
  return acc;
}

// <T~_rho f, f> realized as ||T_sqrt(rho) T_C f||^2; requires rational sqrt(rho).
inline Rat tilde_psd_witness_exact(const CouplingTable& C, const std::vector<Rat>& f,
                                   const Rat& sqrt_rho) {
  BoxFunctionExact half = box_noise(apply_tc_exact(C, f), sqrt_rho);
  return box_inner(half, half);
}

inline Rat inner_exact(const std::vector<Rat>& f, const std::vector<Rat>& g) {
  if (f.size() != g.size()) throw std::invalid_argument("inner_exact: size mismatch");
  Rat acc(0);
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return acc / Rat(static_cast<long long>(f.size()));
}

// Rayleigh quotient of the symmetrized operator on the strict degree-d part
// of a seeded random function, with the asymptotic floor for comparison.
struct NoiseLevelReport {
  int n = 0, d = 0;
  double rho = 0;
  double rayleigh = 0;
  double floor_reference = 0;  // (rho/72)^d — valid only for d <= 1e-5 n
};

inline NoiseLevelReport noise_level_report(const CouplingTable& C, int d, double rho,
                                           std::uint64_t seed) {
  NoiseLevelReport rep;
  rep.n = C.n;
  rep.d = d;
  rep.rho = rho;
  GroupFunction f = degree_part(random_function(C.n, seed), d);
  double nf = inner(f, f);
  if (nf < 1e-18) throw std::runtime_error("noise_level_report: degenerate test function");
  rep.rayleigh = inner(sn_noise(C, f, rho, NoiseMode::Symmetrized), f) / nf;
  rep.floor_reference = std::pow(rho / 72.0, d);
  return rep;
}

// ---------------------------------------------------------------------------
// Induced coupling on d-tuples: push (sigma, x) through the coordinates of I,
// conditioned on the box side landing in [n]_d.

struct TupleCoupling {
  int n = 0, d = 0;
  Rat p_event{0};  // probability of the conditioning event (1 for synthetic couplings)
  Rat p_lazy{0};   // diagonal mass
  std::vector<std::vector<std::pair<std::uint32_t, Rat>>> rows;  // a-rank -> (b-rank, weight)
};

inline Rat tuple_coupling_value(const TupleCoupling& nu, std::uint32_t a, std::uint32_t b) {
  const auto& row = nu.rows[a];
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(b, Rat(0)),
                             [](const auto& x, const auto& y) { return x.first < y.first; });
  if (it != row.end() && it->first == b) return it->second;
  return Rat(0);
}

inline void tuple_coupling_refresh(TupleCoupling& nu) {
  nu.p_lazy = Rat(0);
  for (std::uint32_t a = 0; a < nu.rows.size(); ++a) {
    std::sort(nu.rows[a].begin(), nu.rows[a].end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [b, w] : nu.rows[a])
      if (b == a) nu.p_lazy += w;
  }
}

// I holds 1-based coordinates, strictly increasing. Exact; n <= 6, |I| <= 3.
inline TupleCoupling induced_tuple_coupling(int n, const std::vector<int>& I) {
  if (n < 1 || n > 6) throw std::invalid_argument("induced_tuple_coupling: n must be in [1,6]");
  if (I.empty() || I.size() > 3) throw std::invalid_argument("induced_tuple_coupling: need 1 <= |I| <= 3");
  for (std::size_t k = 0; k < I.size(); ++k) {
    if (I[k] < 1 || I[k] > n) throw std::invalid_argument("induced_tuple_coupling: coordinate out of range");
    if (k > 0 && I[k] <= I[k - 1])
      throw std::invalid_argument("induced_tuple_coupling: coordinates must increase");
  }
  const int d = static_cast<int>(I.size());
  const PermTable& T = perm_table(n);
  const std::size_t m = tuple_count(n, d);
  TupleCoupling nu;
  nu.n = n;
  nu.d = d;
  nu.rows.assign(m, {});
  std::map<std::pair<std::uint32_t, std::uint32_t>, Rat> acc;
  const Rat ps = rat(1, static_cast<long long>(T.size));
  std::vector<int> a(d), b(d);
  Rat total(0);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* im = T.images(r);
    for (int k = 0; k < d; ++k) a[k] = im[I[k] - 1];
    std::uint32_t ar = static_cast<std::uint32_t>(tuple_rank(n, std::vector<int>(a)));
    // coordinate k of b: remembers sigma(I_k) w.p. (n-I_k+1)/n, forgets to any
    // earlier image w.p. 1/n; coordinates independent given sigma
    std::function<void(int, Rat)> rec = [&](int k, Rat p) {
      if (k == d) {
        for (int u = 0; u < d; ++u)
          for (int v = u + 1; v < d; ++v)
            if (b[u] == b[v]) return;  // conditioning: distinct coordinates
        std::uint32_t br = static_cast<std::uint32_t>(tuple_rank(n, std::vector<int>(b)));
        acc[{ar, br}] += ps * p;
        total += ps * p;
        return;
      }
      int i = I[k];  // 1-based
      b[k] = im[i - 1];
      rec(k + 1, p * rat(n - i + 1, n));
      for (int j = 0; j < i - 1; ++j) {
        b[k] = im[j];
        rec(k + 1, p * rat(1, n));
      }
    };
    rec(0, Rat(1));
  }
  nu.p_event = total;
  for (auto& [key, w] : acc) nu.rows[key.first].emplace_back(key.second, w / total);
  tuple_coupling_refresh(nu);
  return nu;
}

inline std::uint32_t tuple_act_rank(int n, const Perm& s, std::uint32_t rank, int d) {
  Tuple t = tuple_unrank(n, d, rank);
  return static_cast<std::uint32_t>(tuple_rank(n, apply_tuple(s, t)));
}

// nu(L_s a, L_s b) = nu(a, b) for sampled s — exact witness of left invariance.
inline bool tuple_coupling_left_invariant(const TupleCoupling& nu, std::uint64_t seed,
                                          int witnesses = 10) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> U(0, factorial(nu.n) - 1);
  for (int w = 0; w < witnesses; ++w) {
    Perm s = perm_unrank(nu.n, U(rng));
    for (std::uint32_t a = 0; a < nu.rows.size(); ++a) {
      std::uint32_t sa = tuple_act_rank(nu.n, s, a, nu.d);
      for (const auto& [b, wt] : nu.rows[a])
        if (tuple_coupling_value(nu, sa, tuple_act_rank(nu.n, s, b, nu.d)) != wt) return false;
    }
  }
  return true;
}

inline bool tuple_coupling_marginals_uniform(const TupleCoupling& nu) {
  const std::size_t m = nu.rows.size();
  const Rat target = Rat(1) / Rat(static_cast<long long>(m));
  std::vector<Rat> col(m, Rat(0));
  for (std::uint32_t a = 0; a < m; ++a) {
    Rat s(0);
    for (const auto& [b, w] : nu.rows[a]) {
      s += w;
      col[b] += w;
    }
    if (s != target) return false;
  }
  for (const Rat& c : col)
    if (c != target) return false;
  return true;
}

// Literal spread certificate: nu(a,b) <= p_lazy * p^{#disagreements} with p = 10/n.
struct SpreadReport {
  bool literal_ok = true;       // against p_lazy * (10/n)^dis
  Rat worst_ratio{0};           // max over a != b of nu(a,b) / (p_lazy * (10/n)^dis)
};

inline SpreadReport tuple_coupling_spread(const TupleCoupling& nu) {
  SpreadReport rep;
  const Rat p = rat(10, nu.n);
  for (std::uint32_t a = 0; a < nu.rows.size(); ++a) {
    Tuple ta = tuple_unrank(nu.n, nu.d, a);
    for (const auto& [b, w] : nu.rows[a]) {
      Tuple tb = tuple_unrank(nu.n, nu.d, b);
      int dis = 0;
      for (int k = 0; k < nu.d; ++k)
        if (ta[k] != tb[k]) ++dis;
      Rat bound = nu.p_lazy * rat_pow(p, dis);
      if (w > bound) rep.literal_ok = false;
      if (bound > Rat(0)) rep.worst_ratio = std::max(rep.worst_ratio, Rat(w / bound));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Staying decomposition: partition nu by which box coordinates land among the
// group-side images.

inline std::uint32_t stay_set(const Tuple& a, const Tuple& b) {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (b[i] == a[j]) {
        mask |= 1u << i;
        break;
      }
  return mask;
}

struct StayingDecomposition {
  int n = 0, d = 0;
  std::vector<std::uint32_t> masks;  // subsets with positive mass
  std::vector<Rat> alpha;
  std::vector<TupleCoupling> parts;  // each normalized, supported on its stay set
};

inline StayingDecomposition staying_decompose(const TupleCoupling& nu) {
  StayingDecomposition out;
  out.n = nu.n;
  out.d = nu.d;
  const std::size_t m = nu.rows.size();
  std::map<std::uint32_t, TupleCoupling> comp;
  std::map<std::uint32_t, Rat> mass;
  for (std::uint32_t a = 0; a < m; ++a) {
    Tuple ta = tuple_unrank(nu.n, nu.d, a);
    for (const auto& [b, w] : nu.rows[a]) {
      std::uint32_t S = stay_set(ta, tuple_unrank(nu.n, nu.d, b));
      auto it = comp.find(S);
      if (it == comp.end()) {
        TupleCoupling part;
        part.n = nu.n;
        part.d = nu.d;
        part.p_event = Rat(1);
        part.rows.assign(m, {});
        it = comp.emplace(S, std::move(part)).first;
        mass[S] = Rat(0);
      }
      it->second.rows[a].emplace_back(b, w);
      mass[S] += w;
    }
  }
  for (auto& [S, part] : comp) {
    Rat al = mass[S];
    for (auto& row : part.rows)
      for (auto& [b, w] : row) w /= al;
    tuple_coupling_refresh(part);
    out.masks.push_back(S);
    out.alpha.push_back(al);
    out.parts.push_back(std::move(part));
  }
  return out;
}

// alpha_S is a conditional probability independent of the row: verified exactly.
inline bool staying_alphas_row_independent(const TupleCoupling& nu) {
  const std::size_t m = nu.rows.size();
  std::map<std::uint32_t, std::vector<Rat>> per_row;
  for (std::uint32_t a = 0; a < m; ++a) {
    Tuple ta = tuple_unrank(nu.n, nu.d, a);
    std::map<std::uint32_t, Rat> local;
    for (const auto& [b, w] : nu.rows[a]) local[stay_set(ta, tuple_unrank(nu.n, nu.d, b))] += w;
    for (auto& [S, w] : local) {
      auto& v = per_row[S];
      v.resize(m, Rat(0));
      v[a] = w * Rat(static_cast<long long>(m));  // conditional on the uniform row mass 1/m
    }
  }
  for (auto& [S, v] : per_row)
    for (const Rat& x : v)
      if (x != v[0]) return false;
  return true;
}

inline bool staying_reconstructs(const StayingDecomposition& D, const TupleCoupling& nu) {
  const std::size_t m = nu.rows.size();
  for (std::uint32_t a = 0; a < m; ++a) {
    std::map<std::uint32_t, Rat> acc;
    for (std::size_t k = 0; k < D.parts.size(); ++k)
      for (const auto& [b, w] : D.parts[k].rows[a]) acc[b] += D.alpha[k] * w;
    std::map<std::uint32_t, Rat> ref;
    for (const auto& [b, w] : nu.rows[a]) ref[b] = w;
    if (acc != ref) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Operator of a tuple coupling on L^2([n]_d), its pure-degree-d restriction,
// and the staying norm bound (2(d-|S|)/(n-|S|))^{d-|S|}.

inline Eigen::MatrixXd tuple_operator_matrix(const TupleCoupling& nu) {
  const int m = static_cast<int>(nu.rows.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (const auto& [b, w] : nu.rows[a])
      M(a, static_cast<int>(b)) = rat_double(w) * static_cast<double>(m);
  return M;
}

// Orthonormal basis of V_{<= d-1}(L^2([n]_d)): cylinder indicators pinning
// fewer than d positions, orthonormalized by rank-revealing QR.
inline Eigen::MatrixXd tuple_low_degree_basis(int n, int d) {
  const std::size_t m = tuple_count(n, d);
  std::vector<std::vector<double>> cols;
  std::vector<Tuple> all = enumerate_tuples(n, d);
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    if (std::popcount(mask) >= d) continue;
    std::vector<int> pos;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) pos.push_back(i);
    std::vector<int> vals(pos.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == pos.size()) {
        std::vector<double> col(m, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
          bool hit = true;
          for (std::size_t j = 0; j < pos.size(); ++j)
            if (all[t][pos[j]] != vals[j]) hit = false;
          if (hit) col[t] = 1.0;
        }
        cols.push_back(std::move(col));
        return;
      }
      for (int v = 0; v < n; ++v) {
        bool dup = false;
        for (std::size_t j = 0; j < k; ++j)
          if (vals[j] == v) dup = true;
        if (dup) continue;
        vals[k] = v;
        rec(k + 1);
      }
    };
    rec(0);
  }
  Eigen::MatrixXd B(static_cast<int>(m), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t t = 0; t < m; ++t) B(static_cast<int>(t), static_cast<int>(c)) = cols[c][t];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  return qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<int>(m), static_cast<int>(qr.rank()));
}

struct TupleNormEstimate {
  double value = 0;
  int iterations = 0;
  bool converged = false;
  double residual = 0;
};

// Power iteration for the norm of P T P with P the projection onto V_{=d}.
inline TupleNormEstimate staying_operator_norm(const TupleCoupling& nu, std::uint64_t seed = 1,
                                               double tol = 1e-10, int max_iter = 10000) {
  const int m = static_cast<int>(nu.rows.size());
  Eigen::MatrixXd T = tuple_operator_matrix(nu);
  Eigen::MatrixXd Q = tuple_low_degree_basis(nu.n, nu.d);
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v - Q * (Q.transpose() * v); };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v(i) = U(rng);
  v = project(v);
  TupleNormEstimate est;
  if (v.norm() < 1e-14) return est;
  v.normalize();
  double lam_prev = -1;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = project(T.transpose() * project(T * v));
    double lam = v.dot(w);
    est.iterations = it;
    double wn = w.norm();
    if (wn < 1e-300) {
      est.value = 0;
      est.converged = true;
      return est;
    }
    est.residual = (w - lam * v).norm();
    est.value = std::sqrt(std::max(0.0, lam));
    if (it > 1 && std::abs(lam - lam_prev) <= tol * std::max(std::abs(lam), 1e-30)) {
      est.converged = true;
      return est;
    }
    lam_prev = lam;
    v = w / wn;
  }
  return est;
}

inline double staying_norm_bound(int n, int d, int stay_count) {
  int k = d - stay_count;
  if (k == 0) return 1.0;
  return std::pow(2.0 * k / static_cast<double>(n - stay_count), k);
}

// ---------------------------------------------------------------------------
// Composed degree operator: average over right translates of T_C^* P_d T_C,
// where P_d is the box-side projection onto degree <= d.

inline std::vector<Rat> composed_degree_operator_exact(const CouplingTable& C,
                                                       const std::vector<Rat>& f, int d) {
  const PermTable& T = perm_table(C.n);
  std::vector<Rat> acc(f.size(), Rat(0));
  for (std::uint32_t sr = 0; sr < T.size; ++sr) {
    Perm s = T.get(sr);
    std::vector<Rat> g = act_exact(C.n, s, f, Side::Right);
    BoxFunctionExact F = box_degree_cum(apply_tc_exact(C, g), d);
    std::vector<Rat> h = act_exact(C.n, inverse(s), apply_tc_star_exact(C, F), Side::Right);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i];
  }
  Rat scale = Rat(1) / Rat(static_cast<long long>(T.size));
  for (auto& x : acc) x *= scale;
  return acc;
}

inline GroupFunction composed_degree_operator(const CouplingTable& C, const GroupFunction& f, int d) {
  const PermTable& T = perm_table(C.n);
  GroupFunction acc = GroupFunction::zero(C.n);
  for (std::uint32_t sr = 0; sr < T.size; ++sr) {
    Perm s = T.get(sr);
    GroupFunction g = act(s, f, Side::Right);
    BoxFunction F = box_degree_cum(apply_tc(C, g), d);
    GroupFunction h = act(inverse(s), apply_tc_star(C, F), Side::Right);
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += h.v[i];
  }
  for (auto& x : acc.v) x /= static_cast<double>(T.size);
  return acc;
}

// <T_d f, f> written as the average squared norm of the projected push-forward.
inline Rat composed_degree_quadratic_exact(const CouplingTable& C, const std::vector<Rat>& f, int d) {
  const PermTable& T = perm_table(C.n);
  Rat acc(0);
  for (std::uint32_t sr = 0; sr < T.size; ++sr) {
    Perm s = T.get(sr);
    BoxFunctionExact F = box_degree_cum(apply_tc_exact(C, act_exact(C.n, s, f, Side::Right)), d);
    acc += box_inner(F, F);
  }
  return acc / Rat(static_cast<long long>(T.size));
}

}  // namespace snlab
