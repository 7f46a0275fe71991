// Spectra of set-disjointness walks and measure calculus for conjugacy
// classes: colex-indexed slice functions, Kneser-walk eigenvalues with level
// identification, the level-k dichotomy for the ordered-tuple disjointness
// walk, class profiles with cycle deletion, multiplicative globalness
// certificates, and the dyadic bucket decomposition of the even classes.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "snlab/coupling.hpp"

namespace snlab {

// ---------------------------------------------------------------------------
// Colex-indexed k-subsets of {0,...,n-1}.  rank{a_1<...<a_k} = sum C(a_i, i).

inline std::uint64_t subset_rank_colex(const std::vector<int>& elems) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i > 0 && elems[i] <= elems[i - 1])
      throw std::invalid_argument("subset_rank_colex: elements must increase");
    if (elems[i] < 0) throw std::invalid_argument("subset_rank_colex: negative element");
    r += binom(elems[i], static_cast<int>(i) + 1);
  }
  return r;
}

inline std::vector<int> subset_unrank_colex(int n, int k, std::uint64_t r) {
  if (k < 0 || k > n) throw std::invalid_argument("subset_unrank_colex: need 0 <= k <= n");
  if (r >= binom(n, k)) throw std::invalid_argument("subset_unrank_colex: rank out of range");
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int i = k; i >= 1; --i) {
    int a = i - 1;
    while (binom(a + 1, i) <= r) ++a;
    out[static_cast<std::size_t>(i - 1)] = a;
    r -= binom(a, i);
  }
  return out;
}

inline std::vector<std::vector<int>> enumerate_subsets(int n, int k) {
  std::uint64_t cnt = binom(n, k);
  std::vector<std::vector<int>> out;
  out.reserve(cnt);
  for (std::uint64_t r = 0; r < cnt; ++r) out.push_back(subset_unrank_colex(n, k, r));
  return out;
}

// Real-valued function on the k-subsets of {0,...,n-1}, colex-indexed.
struct SliceFunction {
  int n = 0;
  int k = 0;
  std::vector<double> v;

  static SliceFunction zero(int n, int k) {
    SliceFunction f;
    f.n = n;
    f.k = k;
    f.v.assign(binom(n, k), 0.0);
    return f;
  }
};

// ---------------------------------------------------------------------------
// Kneser walk on k-subsets: one step moves to a uniformly random disjoint
// k-subset.  Requires 2k <= n so every vertex has C(n-k,k) neighbours.

inline Eigen::MatrixXd kneser_walk_matrix(int n, int k) {
  if (k < 1 || 2 * k > n) throw std::invalid_argument("kneser_walk_matrix: need 1 <= k <= n/2");
  const std::uint64_t m = binom(n, k);
  if (m > 10000) throw std::invalid_argument("kneser_walk_matrix: slice larger than 10^4");
  std::vector<std::uint32_t> masks(m);
  for (std::uint64_t r = 0; r < m; ++r) {
    std::uint32_t b = 0;
    for (int e : subset_unrank_colex(n, k, r)) b |= 1u << e;
    masks[r] = b;
  }
  const double deg = static_cast<double>(binom(n - k, k));
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<int>(m), static_cast<int>(m));
  for (std::uint64_t a = 0; a < m; ++a)
    for (std::uint64_t b = 0; b < m; ++b)
      if ((masks[a] & masks[b]) == 0) K(static_cast<int>(a), static_cast<int>(b)) = 1.0 / deg;
  return K;
}

// Orthonormal basis of the span of the pin indicators 1{S subset A}, |S| = d
// (which contains all lower pins).  Rank must equal C(n,d) for d <= k <= n/2.
inline Eigen::MatrixXd slice_junta_basis(int n, int k, int d) {
  if (d < 0 || d > k) throw std::invalid_argument("slice_junta_basis: need 0 <= d <= k");
  const std::uint64_t m = binom(n, k);
  const std::uint64_t cols = binom(n, d);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<int>(m), static_cast<int>(cols));
  for (std::uint64_t c = 0; c < cols; ++c) {
    std::uint32_t pin = 0;
    for (int e : subset_unrank_colex(n, d, c)) pin |= 1u << e;
    for (std::uint64_t a = 0; a < m; ++a) {
      std::uint32_t mask = 0;
      for (int e : subset_unrank_colex(n, k, a)) mask |= 1u << e;
      if ((mask & pin) == pin) B(static_cast<int>(a), static_cast<int>(c)) = 1.0;
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  const int rank = static_cast<int>(qr.rank());
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<int>(m), rank);
  return Q;
}

struct KneserEigen {
  double value = 0.0;
  int multiplicity = 0;
  int level = -1;
};

// Full spectrum of the Kneser walk, one entry per distinct eigenvalue, each
// identified with the unique junta-filtration level carrying its eigenspace.
inline std::vector<KneserEigen> kneser_spectrum(int n, int k) {
  Eigen::MatrixXd K = kneser_walk_matrix(n, k);
  const int m = static_cast<int>(K.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success) throw std::runtime_error("kneser_spectrum: eigensolver failed");

  std::vector<Eigen::MatrixXd> Q(static_cast<std::size_t>(k) + 1);
  for (int d = 0; d <= k; ++d) Q[static_cast<std::size_t>(d)] = slice_junta_basis(n, k, d);

  std::vector<KneserEigen> out;
  int lo = 0;
  while (lo < m) {
    int hi = lo + 1;
    while (hi < m && es.eigenvalues()(hi) - es.eigenvalues()(hi - 1) < 1e-8) ++hi;
    Eigen::MatrixXd X = es.eigenvectors().middleCols(lo, hi - lo);
    KneserEigen e;
    e.value = es.eigenvalues().segment(lo, hi - lo).mean();
    e.multiplicity = hi - lo;
    for (int d = 0; d <= k; ++d) {
      const Eigen::MatrixXd& Qd = Q[static_cast<std::size_t>(d)];
      if ((X - Qd * (Qd.transpose() * X)).norm() < 1e-6) {
        e.level = d;
        break;
      }
    }
    if (e.level < 0) throw std::runtime_error("kneser_spectrum: eigenspace not aligned with a level");
    out.push_back(e);
    lo = hi;
  }
  std::sort(out.begin(), out.end(),
            [](const KneserEigen& a, const KneserEigen& b) { return a.level < b.level; });
  return out;
}

// ---------------------------------------------------------------------------
// Disjointness walk on ordered k-tuples of distinct points: one step moves to
// a uniformly random tuple whose entry set is disjoint from the current one.

inline Eigen::MatrixXd disjointness_walk_matrix(int n, int k) {
  if (k < 1 || 2 * k > n) throw std::invalid_argument("disjointness_walk_matrix: need 1 <= k <= n/2");
  const std::uint64_t m = tuple_count(n, k);
  if (m > 10000) throw std::invalid_argument("disjointness_walk_matrix: tuple space larger than 10^4");
  std::vector<std::uint32_t> masks(m);
  std::vector<Tuple> all = enumerate_tuples(n, k);
  for (std::uint64_t r = 0; r < m; ++r) {
    std::uint32_t b = 0;
    for (int e : all[r]) b |= 1u << e;
    masks[r] = b;
  }
  const double deg = static_cast<double>(falling_factorial(n - k, k));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<int>(m), static_cast<int>(m));
  for (std::uint64_t a = 0; a < m; ++a)
    for (std::uint64_t b = 0; b < m; ++b)
      if ((masks[a] & masks[b]) == 0) D(static_cast<int>(a), static_cast<int>(b)) = 1.0 / deg;
  return D;
}

struct LevelEigenReport {
  std::vector<double> values;  // distinct eigenvalues whose eigenspace meets the top level
  double max_abs = 0.0;
};

// Distinct eigenvalues of the disjointness walk whose eigenspace intersects
// the top level (degree exactly k) of the tuple module.
inline LevelEigenReport disjointness_level_eigenvalues(int n, int k) {
  Eigen::MatrixXd D = disjointness_walk_matrix(n, k);
  const int m = static_cast<int>(D.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("disjointness_level_eigenvalues: eigensolver failed");
  Eigen::MatrixXd Q = tuple_low_degree_basis(n, k);

  LevelEigenReport rep;
  int lo = 0;
  while (lo < m) {
    int hi = lo + 1;
    while (hi < m && es.eigenvalues()(hi) - es.eigenvalues()(hi - 1) < 1e-8) ++hi;
    Eigen::MatrixXd X = es.eigenvectors().middleCols(lo, hi - lo);
    if ((X - Q * (Q.transpose() * X)).norm() > 1e-6) {
      double v = es.eigenvalues().segment(lo, hi - lo).mean();
      rep.values.push_back(v);
      rep.max_abs = std::max(rep.max_abs, std::abs(v));
    }
    lo = hi;
  }
  return rep;
}

inline double disjointness_level_norm(int n, int k) {
  return disjointness_level_eigenvalues(n, k).max_abs;
}

// ---------------------------------------------------------------------------
// Conjugacy class measure calculus.

enum class Ambient { Sn, An };

struct ClassProfile {
  Partition lambda;
  int n = 0;
  std::uint64_t z = 1;     // centralizer order
  std::uint64_t size = 1;  // n!/z
  int sign = 1;
  bool splits_in_an = false;  // all parts odd and distinct
  Rat mu_sn;
  std::vector<int> cycle_count;  // cycle_count[i] = number of i-cycles, index 0 unused

  Rat mu(Ambient amb) const {
    if (amb == Ambient::Sn) return mu_sn;
    if (sign < 0) throw std::domain_error("ClassProfile::mu: odd class carries no measure in the even subgroup");
    if (n < 2) return Rat(1);
    return Rat(mu_sn * 2);
  }
};

inline ClassProfile class_profile(const Partition& lambda) {
  ClassProfile p;
  p.lambda = lambda;
  p.n = lambda.sum();
  if (p.n > 20) throw std::invalid_argument("class_profile: degree capped at 20");
  p.z = centralizer_order(lambda);
  p.size = factorial(p.n) / p.z;
  p.sign = partition_sign(lambda);
  p.mu_sn = rat(1, static_cast<long long>(p.z));
  p.cycle_count.assign(static_cast<std::size_t>(p.n) + 1, 0);
  for (int part : lambda.parts) ++p.cycle_count[static_cast<std::size_t>(part)];
  p.splits_in_an = !lambda.parts.empty();
  for (std::size_t i = 0; i < lambda.parts.size() && p.splits_in_an; ++i) {
    if (lambda.parts[i] % 2 == 0) p.splits_in_an = false;
    if (i > 0 && lambda.parts[i] == lambda.parts[i - 1]) p.splits_in_an = false;
  }
  return p;
}

inline Partition delete_cycle(const Partition& lambda, int i) {
  auto parts = lambda.parts;
  auto it = std::find(parts.begin(), parts.end(), i);
  if (it == parts.end()) throw std::invalid_argument("delete_cycle: no cycle of the requested length");
  parts.erase(it);
  return Partition(parts);
}

// True when n_i(C) <= f^i for every cycle length i; such a class has all its
// depth-(<= n/4) restriction densities bounded by (2f)^depth times mu(C).
inline bool class_global_certificate(const Partition& lambda, std::uint64_t f) {
  if (f == 0) throw std::invalid_argument("class_global_certificate: need f >= 1");
  const int n = lambda.sum();
  std::vector<int> cnt(static_cast<std::size_t>(n) + 1, 0);
  for (int part : lambda.parts) ++cnt[static_cast<std::size_t>(part)];
  std::uint64_t pw = 1;
  for (int i = 1; i <= n; ++i) {
    if (pw <= (1ull << 40)) pw *= f;  // saturate well above any cycle count
    if (static_cast<std::uint64_t>(cnt[static_cast<std::size_t>(i)]) > pw) return false;
  }
  return true;
}

// Smallest power of two f with the multiplicative certificate.
inline std::uint64_t class_dyadic_level(const Partition& lambda) {
  std::uint64_t f = 1;
  while (!class_global_certificate(lambda, f)) f *= 2;
  return f;
}

struct DyadicBucket {
  std::uint64_t r = 1;             // certificate level shared by the bucket
  std::vector<Partition> classes;  // even classes with class_dyadic_level == r
  Rat mass;                        // total measure within the even subgroup
  Rat bound;                       // (8/r)^{r/2}, meaningful for r >= 2
  bool bounded = false;
};

// Partition of the even classes of degree n by dyadic certificate level.
inline std::vector<DyadicBucket> dyadic_tail_report(int n) {
  if (n < 2 || n > 12) throw std::invalid_argument("dyadic_tail_report: need 2 <= n <= 12");
  std::map<std::uint64_t, DyadicBucket> buckets;
  for (const Partition& lambda : partitions_of(n)) {
    ClassProfile p = class_profile(lambda);
    if (p.sign < 0) continue;
    std::uint64_t r = class_dyadic_level(lambda);
    DyadicBucket& b = buckets[r];
    if (b.classes.empty()) {
      b.r = r;
      b.mass = Rat(0);
      if (r >= 2) {
        b.bound = rat_pow(rat(8, static_cast<long long>(r)), static_cast<int>(r / 2));
        b.bounded = true;
      }
    }
    b.classes.push_back(lambda);
    b.mass += p.mu(Ambient::An);
  }
  std::vector<DyadicBucket> out;
  for (auto& [r, b] : buckets) out.push_back(std::move(b));
  return out;
}

// Exhaustive depth-d restriction audit of a class: the largest conditional
// density ratio mu(C | sigma maps I to J) / mu(C) over ordered d-tuples I, J.
inline Rat class_restriction_ratio_max(const Partition& lambda, int d) {
  const int n = lambda.sum();
  if (n < 1 || n > kDenseN) throw std::invalid_argument("class_restriction_ratio_max: degree capped at 8");
  if (d < 1 || 2 * d >= n) throw std::invalid_argument("class_restriction_ratio_max: need 1 <= d < n/2");
  const PermTable& T = perm_table(n);
  std::uint16_t cls = 0;
  {
    auto it = std::find(T.classes.begin(), T.classes.end(), lambda);
    if (it == T.classes.end()) throw std::logic_error("class_restriction_ratio_max: unknown class");
    cls = static_cast<std::uint16_t>(it - T.classes.begin());
  }
  const std::size_t tc = tuple_count(n, d);
  std::vector<Tuple> all = enumerate_tuples(n, d);
  std::vector<std::uint32_t> cnt(tc * tc, 0);
  Tuple J(static_cast<std::size_t>(d));
  for (std::uint32_t r = 0; r < T.size; ++r) {
    if (T.class_of[r] != cls) continue;
    const std::uint8_t* img = T.images(r);
    for (std::size_t a = 0; a < tc; ++a) {
      for (int i = 0; i < d; ++i) J[static_cast<std::size_t>(i)] = img[all[a][static_cast<std::size_t>(i)]];
      ++cnt[a * tc + tuple_rank(n, J)];
    }
  }
  std::uint32_t best = *std::max_element(cnt.begin(), cnt.end());
  return rat(static_cast<long long>(best) * static_cast<long long>(centralizer_order(lambda)),
             static_cast<long long>(factorial(n - d)));
}

}  // namespace snlab
