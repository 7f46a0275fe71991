#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "snlab/permcore.hpp"
#include "snlab/rational.hpp"

namespace snlab {

// Dense function on the product box [q]^m, mixed-radix indexed with
// coordinate 1 most significant: index(x) = sum_i (x_i - 1) q^{m-i}.
// The primary case is q = m = n; restrictions produce fewer coordinates.
template <typename T>
struct BoxFn {
  int q = 0;
  int m = 0;
  std::vector<T> v;
};

using BoxFunction = BoxFn<double>;
using BoxFunctionExact = BoxFn<Rat>;

inline std::size_t box_size(int q, int m) {
  if (q < 1 || m < 0) throw std::invalid_argument("box_size: bad shape");
  std::size_t s = 1;
  for (int i = 0; i < m; ++i) {
    if (s > (std::size_t{1} << 60) / static_cast<std::size_t>(q))
      throw std::invalid_argument("box_size: too large");
    s *= static_cast<std::size_t>(q);
  }
  return s;
}

template <typename T>
BoxFn<T> box_constant(int q, int m, T c) {
  BoxFn<T> f;
  f.q = q;
  f.m = m;
  f.v.assign(box_size(q, m), c);
  return f;
}

template <typename T>
BoxFn<T> box_zero(int q, int m) {
  return box_constant<T>(q, m, T(0));
}

// 0-based digits, digit 0 = coordinate 1 (most significant).
inline std::size_t box_index(int q, int m, const std::vector<int>& digits) {
  if (static_cast<int>(digits.size()) != m) throw std::invalid_argument("box_index: arity mismatch");
  std::size_t idx = 0;
  for (int i = 0; i < m; ++i) {
    if (digits[i] < 0 || digits[i] >= q) throw std::invalid_argument("box_index: digit out of range");
    idx = idx * static_cast<std::size_t>(q) + static_cast<std::size_t>(digits[i]);
  }
  return idx;
}

inline std::vector<int> box_digits(int q, int m, std::size_t idx) {
  std::vector<int> d(m);
  for (int i = m - 1; i >= 0; --i) {
    d[i] = static_cast<int>(idx % static_cast<std::size_t>(q));
    idx /= static_cast<std::size_t>(q);
  }
  return d;
}

template <typename T>
T box_inner(const BoxFn<T>& f, const BoxFn<T>& g) {
  if (f.q != g.q || f.m != g.m) throw std::invalid_argument("box_inner: shape mismatch");
  T acc(0);
  for (std::size_t i = 0; i < f.v.size(); ++i) acc += f.v[i] * g.v[i];
  return acc / T(static_cast<long long>(f.v.size()));
}

inline double box_lp_norm(const BoxFunction& f, double p) {
  if (p < 1) throw std::invalid_argument("box_lp_norm: p >= 1 required");
  double acc = 0;
  for (double x : f.v) acc += std::pow(std::abs(x), p);
  return std::pow(acc / static_cast<double>(f.v.size()), 1.0 / p);
}

inline double box_l2_norm(const BoxFunction& f) {
  return std::sqrt(std::max(0.0, box_inner(f, f)));
}

// Replace every line along coordinate pos (0-based) by its mean.
template <typename T>
void box_average_coordinate(BoxFn<T>& f, int pos) {
  const std::size_t q = static_cast<std::size_t>(f.q);
  std::size_t stride = 1;
  for (int i = f.m - 1 - pos; i > 0; --i) stride *= q;
  const std::size_t block = stride * q;
  const T inv_q = T(1) / T(static_cast<long long>(f.q));
  for (std::size_t base = 0; base < f.v.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      T s(0);
      for (std::size_t k = 0; k < q; ++k) s += f.v[base + off + k * stride];
      s *= inv_q;
      for (std::size_t k = 0; k < q; ++k) f.v[base + off + k * stride] = s;
    }
  }
}

// E[F | x_S]: averages out every coordinate not in the mask (bit i-1 <-> coordinate i).
template <typename T>
BoxFn<T> box_cond_exp(const BoxFn<T>& f, std::uint32_t keep_mask) {
  BoxFn<T> g = f;
  for (int pos = 0; pos < f.m; ++pos)
    if (!(keep_mask & (1u << pos))) box_average_coordinate(g, pos);
  return g;
}

// Projection onto V_{=S} by inclusion-exclusion over the sub-cubes of S.
template <typename T>
BoxFn<T> es_part(const BoxFn<T>& f, std::uint32_t S) {
  if (f.m > 6) throw std::invalid_argument("es_part: capped at 6 coordinates");
  if (S >= (1u << f.m)) throw std::invalid_argument("es_part: mask out of range");
  BoxFn<T> out = box_zero<T>(f.q, f.m);
  std::uint32_t Tm = S;
  int sbits = std::popcount(S);
  while (true) {
    BoxFn<T> g = box_cond_exp(f, Tm);
    T sgn = ((sbits - std::popcount(Tm)) % 2 == 0) ? T(1) : T(-1);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += sgn * g.v[i];
    if (Tm == 0) break;
    Tm = (Tm - 1) & S;
  }
  return out;
}

template <typename T>
BoxFn<T> es_degree_part(const BoxFn<T>& f, int d) {
  BoxFn<T> out = box_zero<T>(f.q, f.m);
  for (std::uint32_t S = 0; S < (1u << f.m); ++S) {
    if (std::popcount(S) != d) continue;
    BoxFn<T> part = es_part(f, S);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += part.v[i];
  }
  return out;
}

// Projection onto degree <= d, computed as sum_{|T| <= d} mu_{|T|} E[f | x_T]
// where the mu_t solve the triangular system sum_{t=s}^d C(m-s, t-s) mu_t = 1.
// Far cheaper than materializing every V_{=S} component.
template <typename T>
BoxFn<T> box_degree_cum(const BoxFn<T>& f, int d) {
  if (d < 0) throw std::invalid_argument("box_degree_cum: negative degree");
  if (d >= f.m) return f;
  std::vector<long long> mu(d + 1, 0);
  for (int s = d; s >= 0; --s) {
    long long acc = 1;
    for (int t = s + 1; t <= d; ++t)
      acc -= static_cast<long long>(binom(f.m - s, t - s)) * mu[t];
    mu[s] = acc;
  }
  BoxFn<T> out = box_zero<T>(f.q, f.m);
  for (std::uint32_t S = 0; S < (1u << f.m); ++S) {
    int t = std::popcount(S);
    if (t > d || mu[t] == 0) continue;
    BoxFn<T> g = box_cond_exp(f, S);
    T w(mu[t]);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += w * g.v[i];
  }
  return out;
}

// Per-coordinate rho*Id + (1-rho)*average; diagonal on the Efron-Stein
// decomposition with eigenvalue rho^{|S|} on V_{=S}.
template <typename T>
BoxFn<T> box_noise(const BoxFn<T>& f, T rho) {
  if (!(rho > T(0) && rho < T(1))) throw std::invalid_argument("box_noise: rho must lie in (0,1)");
  BoxFn<T> g = f;
  const std::size_t q = static_cast<std::size_t>(f.q);
  const T inv_q = T(1) / T(static_cast<long long>(f.q));
  const T one_minus = T(1) - rho;
  for (int pos = 0; pos < f.m; ++pos) {
    std::size_t stride = 1;
    for (int i = f.m - 1 - pos; i > 0; --i) stride *= q;
    const std::size_t block = stride * q;
    for (std::size_t base = 0; base < g.v.size(); base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        T s(0);
        for (std::size_t k = 0; k < q; ++k) s += g.v[base + off + k * stride];
        T blend = one_minus * s * inv_q;
        for (std::size_t k = 0; k < q; ++k) {
          T& x = g.v[base + off + k * stride];
          x = rho * x + blend;
        }
      }
    }
  }
  return g;
}

// f_{S -> x}: pins the coordinates of S (values 0-based, listed in increasing
// coordinate order) and returns the slice on the remaining coordinates.
template <typename T>
BoxFn<T> restrict_box(const BoxFn<T>& f, std::uint32_t S, const std::vector<int>& x) {
  if (S >= (1u << f.m)) throw std::invalid_argument("restrict_box: mask out of range");
  if (static_cast<int>(x.size()) != std::popcount(S))
    throw std::invalid_argument("restrict_box: pin count mismatch");
  int mm = f.m - std::popcount(S);
  BoxFn<T> out = box_zero<T>(f.q, mm);
  std::vector<int> full(f.m);
  for (std::size_t o = 0; o < out.v.size(); ++o) {
    std::vector<int> rest = box_digits(f.q, mm, o);
    int xi = 0, ri = 0;
    for (int pos = 0; pos < f.m; ++pos) full[pos] = (S & (1u << pos)) ? x[xi++] : rest[ri++];
    out.v[o] = f.v[box_index(f.q, f.m, full)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Restriction-norm profile: prof[t] = max over |S| = t and pins x of the L2
// norm of the slice f_{S->x}; prof[0] = ||f||_2. The least r certifying an
// (r, gamma) bound is max_t (prof[t]/gamma)^{1/t}.

inline std::vector<double> box_restriction_profile(const BoxFunction& f) {
  std::vector<double> prof(f.m + 1, 0.0);
  prof[0] = box_l2_norm(f);
  for (std::uint32_t S = 1; S < (1u << f.m); ++S) {
    int t = std::popcount(S);
    std::size_t pins = box_size(f.q, t);
    for (std::size_t p = 0; p < pins; ++p) {
      BoxFunction slice = restrict_box(f, S, box_digits(f.q, t, p));
      prof[t] = std::max(prof[t], box_l2_norm(slice));
    }
  }
  return prof;
}

inline double box_least_global_r(const std::vector<double>& profile, double gamma) {
  if (gamma <= 0) throw std::invalid_argument("box_least_global_r: gamma must be positive");
  double r = 0;
  for (std::size_t t = 1; t < profile.size(); ++t)
    r = std::max(r, std::pow(profile[t] / gamma, 1.0 / static_cast<double>(t)));
  return r;
}

// Margin of the hypercontractive bound ||T_rho f||_q^q <= ||f||_2^2 gamma^{q-2}
// at the prescribed rate rho = log(q)/(16 r q).
struct BoxNoiseMargin {
  double r = 0, gamma = 0, q_exp = 0, rho = 0;
  double lhs = 0, rhs = 0, margin = 0;
};

inline BoxNoiseMargin box_hypercontractivity_margin(const BoxFunction& f, double q_exp, double r,
                                                    double gamma) {
  if (q_exp < 2) throw std::invalid_argument("box_hypercontractivity_margin: q >= 2 required");
  if (r <= 1) throw std::invalid_argument("box_hypercontractivity_margin: r > 1 required");
  BoxNoiseMargin out;
  out.r = r;
  out.gamma = gamma;
  out.q_exp = q_exp;
  out.rho = std::log(q_exp) / (16.0 * r * q_exp);
  BoxFunction tf = box_noise(f, out.rho);
  out.lhs = std::pow(box_lp_norm(tf, q_exp), q_exp);
  double n2 = box_l2_norm(f);
  out.rhs = n2 * n2 * std::pow(gamma, q_exp - 2.0);
  out.margin = out.rhs - out.lhs;
  return out;
}

}  // namespace snlab
