#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "snlab/characters.hpp"
#include "snlab/parallel.hpp"
#include "snlab/permcore.hpp"
#include "snlab/rational.hpp"

namespace snlab {

// Dense real-valued function on S_n, stored in rank order.
// Inner products and norms are uniform expectations over the group.
struct GroupFunction {
  int n = 0;
  std::vector<double> v;

  static GroupFunction zero(int n) {
    GroupFunction f;
    f.n = n;
    f.v.assign(factorial(n), 0.0);
    return f;
  }
  static GroupFunction constant(int n, double c) {
    GroupFunction f = zero(n);
    std::fill(f.v.begin(), f.v.end(), c);
    return f;
  }
};

inline void check_same_group(const GroupFunction& f, const GroupFunction& g) {
  if (f.n != g.n || f.v.size() != g.v.size()) throw std::invalid_argument("group functions: degree mismatch");
}

inline double inner(const GroupFunction& f, const GroupFunction& g) {
  check_same_group(f, g);
  double acc = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i) acc += f.v[i] * g.v[i];
  return acc / static_cast<double>(f.v.size());
}

inline double lp_norm(const GroupFunction& f, double p) {
  if (p < 1) throw std::invalid_argument("lp_norm: p >= 1 required");
  double acc = 0;
  for (double x : f.v) acc += std::pow(std::abs(x), p);
  return std::pow(acc / static_cast<double>(f.v.size()), 1.0 / p);
}

inline double l2_norm(const GroupFunction& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline double mean(const GroupFunction& f) {
  double acc = 0;
  for (double x : f.v) acc += x;
  return acc / static_cast<double>(f.v.size());
}

inline GroupFunction sign_function(int n) {
  const PermTable& T = perm_table(n);
  GroupFunction s = GroupFunction::zero(n);
  for (std::uint32_t r = 0; r < T.size; ++r) s.v[r] = static_cast<double>(T.sgn[r]);
  return s;
}

enum class Side { Left, Right };

// Left: (act f)(x) = f(s^{-1} x).  Right: (act f)(x) = f(x s).
inline GroupFunction act(const Perm& s, const GroupFunction& f, Side side) {
  const PermTable& T = perm_table(f.n);
  GroupFunction out = GroupFunction::zero(f.n);
  if (side == Side::Left) {
    Perm si = inverse(s);
    for (std::uint32_t r = 0; r < T.size; ++r)
      out.v[r] = f.v[rank_compose(&si.img[0], T.images(r), f.n)];
  } else {
    for (std::uint32_t r = 0; r < T.size; ++r)
      out.v[r] = f.v[rank_compose(T.images(r), &s.img[0], f.n)];
  }
  return out;
}

template <typename T>
std::vector<T> act_exact(int n, const Perm& s, const std::vector<T>& f, Side side) {
  const PermTable& P = perm_table(n);
  std::vector<T> out(f.size());
  if (side == Side::Left) {
    Perm si = inverse(s);
    for (std::uint32_t r = 0; r < P.size; ++r) out[r] = f[rank_compose(&si.img[0], P.images(r), n)];
  } else {
    for (std::uint32_t r = 0; r < P.size; ++r) out[r] = f[rank_compose(P.images(r), &s.img[0], n)];
  }
  return out;
}

inline GroupFunction sign_twist(const GroupFunction& f) {
  const PermTable& T = perm_table(f.n);
  GroupFunction out = f;
  for (std::uint32_t r = 0; r < T.size; ++r) out.v[r] *= static_cast<double>(T.sgn[r]);
  return out;
}

// f*g(s) = E_t[f(t) g(t^{-1} s)]. Dense pass over (support of f) x (output).
inline GroupFunction convolve(const GroupFunction& f, const GroupFunction& g, int workers = 0) {
  check_same_group(f, g);
  const PermTable& T = perm_table(f.n);
  const int n = f.n;
  std::vector<std::pair<std::uint32_t, double>> sup;  // (rank of t^{-1}, f(t))
  sup.reserve(T.size);
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (f.v[r] != 0.0) sup.emplace_back(T.inv[r], f.v[r]);
  GroupFunction out = GroupFunction::zero(n);
  const double scale = 1.0 / static_cast<double>(T.size);
  parallel_chunks(
      T.size,
      [&](std::size_t b, std::size_t e) {
        for (const auto& [tinv, ft] : sup) {
          const std::uint8_t* ti = T.images(tinv);
          const double w = ft * scale;
          for (std::size_t s = b; s < e; ++s)
            out.v[s] += w * g.v[rank_compose(ti, T.images(static_cast<std::uint32_t>(s)), n)];
        }
      },
      workers);
  return out;
}

// Exact-scalar convolution for desk-size groups (generic, serial).
template <typename T>
std::vector<T> convolve_exact(int n, const std::vector<T>& f, const std::vector<T>& g) {
  const PermTable& P = perm_table(n);
  if (f.size() != P.size || g.size() != P.size) throw std::invalid_argument("convolve_exact: size mismatch");
  std::vector<T> out(P.size, T(0));
  for (std::uint32_t t = 0; t < P.size; ++t) {
    if (f[t] == T(0)) continue;
    const std::uint8_t* ti = P.images(P.inv[t]);
    for (std::uint32_t s = 0; s < P.size; ++s) out[s] += f[t] * g[rank_compose(ti, P.images(s), n)];
  }
  T scale = T(1) / T(static_cast<long long>(P.size));
  for (auto& x : out) x *= scale;
  return out;
}

// ---------------------------------------------------------------------------
// Isotypic decomposition via class translates: one (n!)^2 pass yields
// cls_c(s) = (1/n!) sum_{t in C_c} f(t^{-1} s) for every class c, after which
// each isotypic part is P_lam f = dim_lam * sum_c chi_lam(c) cls_c.

struct ClassTranslates {
  int n = 0;
  std::vector<std::vector<double>> cls;
};

inline ClassTranslates class_translates(const GroupFunction& f, int workers = 0) {
  const PermTable& T = perm_table(f.n);
  const int n = f.n;
  ClassTranslates D;
  D.n = n;
  D.cls.assign(T.classes.size(), std::vector<double>(T.size, 0.0));
  const double scale = 1.0 / static_cast<double>(T.size);
  parallel_chunks(
      T.size,
      [&](std::size_t b, std::size_t e) {
        for (std::uint32_t t = 0; t < T.size; ++t) {
          const std::uint8_t* ti = T.images(T.inv[t]);
          std::vector<double>& dst = D.cls[T.class_of[t]];
          for (std::size_t s = b; s < e; ++s)
            dst[s] += scale * f.v[rank_compose(ti, T.images(static_cast<std::uint32_t>(s)), n)];
        }
      },
      workers);
  return D;
}

// Strict degree d means lam_1 = n - d; level folds in the conjugate:
// level(lam) = min(n - lam_1, n - lam'_1).
inline int degree_of(const Partition& lambda) { return lambda.sum() - lambda.parts[0]; }
inline int level_of(const Partition& lambda) {
  int n = lambda.sum();
  return std::min(n - lambda.parts[0], n - lambda.length());
}

struct Decomposition {
  int n = 0;
  ClassTranslates D;
  const CharacterTable* table = nullptr;

  GroupFunction isotypic(std::size_t lam_index) const {
    GroupFunction out = GroupFunction::zero(n);
    double dim = static_cast<double>(table->dims[lam_index]);
    for (std::size_t c = 0; c < D.cls.size(); ++c) {
      double w = dim * static_cast<double>(table->chi[lam_index][c]);
      if (w == 0) continue;
      const std::vector<double>& src = D.cls[c];
      for (std::size_t s = 0; s < out.v.size(); ++s) out.v[s] += w * src[s];
    }
    return out;
  }

  template <typename Pred>
  GroupFunction select(Pred&& keep) const {
    GroupFunction out = GroupFunction::zero(n);
    for (std::size_t r = 0; r < table->partitions.size(); ++r) {
      if (!keep(table->partitions[r])) continue;
      GroupFunction part = isotypic(r);
      for (std::size_t s = 0; s < out.v.size(); ++s) out.v[s] += part.v[s];
    }
    return out;
  }
};

inline Decomposition decompose(const GroupFunction& f, int workers = 0) {
  Decomposition d;
  d.n = f.n;
  d.D = class_translates(f, workers);
  d.table = &character_table(f.n);
  return d;
}

inline GroupFunction isotypic_project(const GroupFunction& f, const Partition& lambda, int workers = 0) {
  Decomposition d = decompose(f, workers);
  for (std::size_t r = 0; r < d.table->partitions.size(); ++r)
    if (d.table->partitions[r] == lambda) return d.isotypic(r);
  throw std::invalid_argument("isotypic_project: not a partition of n");
}

inline GroupFunction degree_part(const GroupFunction& f, int d, int workers = 0) {
  return decompose(f, workers).select([&](const Partition& lam) { return degree_of(lam) == d; });
}
inline GroupFunction degree_cum(const GroupFunction& f, int d, int workers = 0) {
  return decompose(f, workers).select([&](const Partition& lam) { return degree_of(lam) <= d; });
}
inline GroupFunction level_part(const GroupFunction& f, int d, int workers = 0) {
  return decompose(f, workers).select([&](const Partition& lam) { return level_of(lam) == d; });
}
inline GroupFunction level_tail(const GroupFunction& f, int d, int workers = 0) {
  return decompose(f, workers).select([&](const Partition& lam) { return level_of(lam) > d; });
}

// Exact isotypic projection (small n): P_lam f = dim * (chi_lam * f).
inline std::vector<Rat> isotypic_project_exact(int n, const std::vector<Rat>& f, const Partition& lambda) {
  const PermTable& P = perm_table(n);
  const CharacterTable& C = character_table(n);
  std::size_t li = C.partitions.size();
  for (std::size_t r = 0; r < C.partitions.size(); ++r)
    if (C.partitions[r] == lambda) li = r;
  if (li == C.partitions.size()) throw std::invalid_argument("isotypic_project_exact: bad partition");
  std::vector<Rat> chi(P.size);
  for (std::uint32_t r = 0; r < P.size; ++r) chi[r] = Rat(C.chi[li][P.class_of[r]]);
  std::vector<Rat> conv = convolve_exact<Rat>(n, chi, f);
  Rat dim(C.dims[li]);
  for (auto& x : conv) x *= dim;
  return conv;
}

inline std::vector<Rat> degree_cum_exact(int n, const std::vector<Rat>& f, int d) {
  const CharacterTable& C = character_table(n);
  std::vector<Rat> out(f.size(), Rat(0));
  for (std::size_t r = 0; r < C.partitions.size(); ++r) {
    if (degree_of(C.partitions[r]) > d) continue;
    std::vector<Rat> part = isotypic_project_exact(n, f, C.partitions[r]);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += part[s];
  }
  return out;
}

inline std::vector<Rat> degree_part_exact(int n, const std::vector<Rat>& f, int d) {
  const CharacterTable& C = character_table(n);
  std::vector<Rat> out(f.size(), Rat(0));
  for (std::size_t r = 0; r < C.partitions.size(); ++r) {
    if (degree_of(C.partitions[r]) != d) continue;
    std::vector<Rat> part = isotypic_project_exact(n, f, C.partitions[r]);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += part[s];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense operator views (n <= 6) and an orthonormal isotypic basis; these back
// the matrix route for restricted operator norms.

inline Eigen::MatrixXd dense_operator_matrix(const GroupFunction& f) {
  if (f.n > 6) throw std::invalid_argument("dense_operator_matrix: capped at n <= 6");
  const PermTable& T = perm_table(f.n);
  Eigen::MatrixXd M(static_cast<int>(T.size), static_cast<int>(T.size));
  const double scale = 1.0 / static_cast<double>(T.size);
  for (std::uint32_t s = 0; s < T.size; ++s)
    for (std::uint32_t p = 0; p < T.size; ++p)
      M(static_cast<int>(s), static_cast<int>(p)) =
          scale * f.v[rank_compose(T.images(s), T.images(T.inv[p]), f.n)];
  return M;
}

// Orthonormal basis of the lam-isotypic component, dim_lam^2 columns.
inline Eigen::MatrixXd isotypic_basis(int n, std::size_t lam_index, int workers = 0) {
  const PermTable& T = perm_table(n);
  const CharacterTable& C = character_table(n);
  int m = static_cast<int>(C.dims[lam_index] * C.dims[lam_index]);
  std::mt19937_64 rng(0x5eedful + lam_index);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd probes(static_cast<int>(T.size), m);
  for (int c = 0; c < m; ++c) {
    GroupFunction g = GroupFunction::zero(n);
    for (auto& x : g.v) x = U(rng);
    GroupFunction p = decompose(g, workers).isotypic(lam_index);
    for (std::uint32_t r = 0; r < T.size; ++r) probes(static_cast<int>(r), c) = p.v[r];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(probes);
  if (qr.rank() != m) throw std::runtime_error("isotypic_basis: probe matrix lost rank");
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<int>(T.size), m);
  return Q;
}

// ---------------------------------------------------------------------------
// Spectral norms of T_f g = f * g on invariant subspaces, by power iteration
// on P T_f^* T_f P with re-projection each step. T_f^* = T_{f_check} with
// f_check(s) = f(s^{-1}).

struct SpectralScope {
  enum class Kind { Whole, Isotypic, DegreeEq, LevelEq, LevelGt } kind = Kind::Whole;
  int d = 0;
  Partition lambda;

  static SpectralScope whole() { return {}; }
  static SpectralScope isotypic(Partition lam) { return {Kind::Isotypic, 0, std::move(lam)}; }
  static SpectralScope level_eq(int d) { return {Kind::LevelEq, d, {}}; }
  static SpectralScope level_gt(int d) { return {Kind::LevelGt, d, {}}; }
  static SpectralScope degree_eq(int d) { return {Kind::DegreeEq, d, {}}; }

  bool keeps(const Partition& lam) const {
    switch (kind) {
      case Kind::Whole: return true;
      case Kind::Isotypic: return lam == lambda;
      case Kind::DegreeEq: return degree_of(lam) == d;
      case Kind::LevelEq: return level_of(lam) == d;
      case Kind::LevelGt: return level_of(lam) > d;
    }
    return false;
  }
};

struct SpectralEstimate {
  double value = 0;
  int iterations = 0;
  bool converged = false;
  double residual = 0;
};

inline GroupFunction scope_project(const GroupFunction& g, const SpectralScope& scope, int workers = 0) {
  if (scope.kind == SpectralScope::Kind::Whole) return g;
  return decompose(g, workers).select([&](const Partition& lam) { return scope.keeps(lam); });
}

inline SpectralEstimate spectral_norm(const GroupFunction& f, const SpectralScope& scope,
                                      std::uint64_t seed = 1, double tol = 1e-10, int max_iter = 10000,
                                      int workers = 0) {
  const PermTable& T = perm_table(f.n);
  GroupFunction fc = GroupFunction::zero(f.n);
  for (std::uint32_t r = 0; r < T.size; ++r) fc.v[r] = f.v[T.inv[r]];

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GroupFunction v = GroupFunction::zero(f.n);
  for (auto& x : v.v) x = U(rng);
  v = scope_project(v, scope, workers);
  double vn = l2_norm(v);
  SpectralEstimate est;
  if (vn < 1e-14) return est;  // scope annihilates everything
  for (auto& x : v.v) x /= vn;

  double lam_prev = -1;
  for (int it = 1; it <= max_iter; ++it) {
    GroupFunction w = convolve(fc, convolve(f, v, workers), workers);
    w = scope_project(w, scope, workers);
    double lam = inner(v, w);
    double wn = l2_norm(w);
    est.iterations = it;
    if (wn < 1e-300) {
      est.value = 0;
      est.converged = true;
      est.residual = 0;
      return est;
    }
    GroupFunction r = w;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= lam * v.v[i];
    est.residual = l2_norm(r);
    est.value = std::sqrt(std::max(0.0, lam));
    if (it > 1 && std::abs(lam - lam_prev) <= tol * std::max(std::abs(lam), 1e-30)) {
      est.converged = true;
      return est;
    }
    lam_prev = lam;
    for (std::size_t i = 0; i < w.v.size(); ++i) v.v[i] = w.v[i] / wn;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Linear calculus: the strict degree-1 part of any function is encoded by an
// n x n coefficient matrix with vanishing row and column sums.

struct CoefficientMatrix {
  int n = 0;
  Eigen::MatrixXd a;
};

inline bool is_canonical(const CoefficientMatrix& M, double tol = 1e-12) {
  for (int i = 0; i < M.n; ++i)
    if (std::abs(M.a.row(i).sum()) > tol || std::abs(M.a.col(i).sum()) > tol) return false;
  return true;
}

// a_ij = ((n-1)/n) (E[g | s(i) = j] - E[g]); one O(n! n) pass.
inline CoefficientMatrix linear_canonical(const GroupFunction& g) {
  const PermTable& T = perm_table(g.n);
  const int n = g.n;
  CoefficientMatrix M;
  M.n = n;
  M.a = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* im = T.images(r);
    for (int i = 0; i < n; ++i) M.a(i, im[i]) += g.v[r];
  }
  double cond = 1.0 / static_cast<double>(factorial(n - 1));
  double mu = mean(g);
  double w = static_cast<double>(n - 1) / static_cast<double>(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M.a(i, j) = w * (M.a(i, j) * cond - mu);
  return M;
}

// phi(s) = sum_i a(i, s(i))
inline GroupFunction linear_reconstruct(const CoefficientMatrix& M) {
  const PermTable& T = perm_table(M.n);
  GroupFunction f = GroupFunction::zero(M.n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* im = T.images(r);
    double acc = 0;
    for (int i = 0; i < M.n; ++i) acc += M.a(i, im[i]);
    f.v[r] = acc;
  }
  return f;
}

// <phi, phi'> = (1/(n-1)) sum_ij a_ij b_ij, valid when A is canonical.
inline double linear_inner(const CoefficientMatrix& A, const CoefficientMatrix& B) {
  if (A.n != B.n) throw std::invalid_argument("linear_inner: size mismatch");
  return (A.a.cwiseProduct(B.a)).sum() / static_cast<double>(A.n - 1);
}

// Matrix of phi_A * phi_B. With f*g(s) = E_t[f(t) g(t^{-1} s)] the factors
// compose right-to-left: M_{phi_A * phi_B} = (1/(n-1)) M_B M_A. For commuting
// matrices (in particular any self-convolution) the order is immaterial.
inline CoefficientMatrix linear_convolve(const CoefficientMatrix& A, const CoefficientMatrix& B) {
  if (A.n != B.n) throw std::invalid_argument("linear_convolve: size mismatch");
  CoefficientMatrix C;
  C.n = A.n;
  C.a = (B.a * A.a) / static_cast<double>(A.n - 1);
  return C;
}

// ---------------------------------------------------------------------------
// Seeded generators for property tests and experiments.

inline GroupFunction random_function(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  GroupFunction f = GroupFunction::zero(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  for (auto& x : f.v) x = U(rng);
  return f;
}

inline GroupFunction random_density(int n, std::uint64_t seed) {
  GroupFunction f = random_function(n, seed, 0.05, 2.0);
  double m = mean(f);
  for (auto& x : f.v) x /= m;
  return f;
}

}  // namespace snlab
