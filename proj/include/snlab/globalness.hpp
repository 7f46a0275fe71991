// Restriction calculus on the symmetric group: umvirate restrictions with
// exact and floating norms, exhaustive globalness audits (L2, and L1+L2 for
// the two-threshold variant), a densifying restriction finder for sets, and
// the degree-d mass bound for functions with certified restriction control.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snlab/algebra.hpp"

namespace snlab {

// Pins the ordered positions I to the ordered values J; both entry lists are
// duplicate-free and of equal length t.  The umvirate U_{I->J} is the set of
// permutations with sigma(I) = J, of size (n-t)!.
struct RestrictionKey {
  Tuple I;
  Tuple J;

  int t() const { return static_cast<int>(I.size()); }

  void validate(int n) const {
    if (I.size() != J.size()) throw std::invalid_argument("RestrictionKey: |I| != |J|");
    if (static_cast<int>(I.size()) > n) throw std::invalid_argument("RestrictionKey: too many pins");
    if (!I.empty()) {
      tuple_rank(n, I);  // throws on range or duplicate violations
      tuple_rank(n, J);
    }
  }
};

// 1-based text form "(1 3)->(2 4)" used in reports and witnesses.
inline std::string restriction_key_str(const RestrictionKey& key) {
  auto side = [](const Tuple& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) s += ' ';
      s += std::to_string(t[i] + 1);
    }
    return s + ")";
  };
  return side(key.I) + "->" + side(key.J);
}

// A function restricted to an umvirate, with norms under the uniform measure
// on the umvirate.  Values are listed in increasing ambient rank order.
struct Restriction {
  int n = 0;
  RestrictionKey key;
  std::vector<double> values;
  double l1 = 0.0;
  double l2 = 0.0;
  double density = 0.0;  // mean of f over the umvirate
};

inline Restriction restrict_function(const GroupFunction& f, const RestrictionKey& key) {
  key.validate(f.n);
  const PermTable& T = perm_table(f.n);
  const int t = key.t();
  Restriction out;
  out.n = f.n;
  out.key = key;
  out.values.reserve(factorial(f.n - t));
  double s1 = 0, s2 = 0, sm = 0;
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    bool in = true;
    for (int i = 0; i < t && in; ++i)
      in = img[key.I[static_cast<std::size_t>(i)]] == key.J[static_cast<std::size_t>(i)];
    if (!in) continue;
    double x = f.v[r];
    out.values.push_back(x);
    s1 += std::abs(x);
    s2 += x * x;
    sm += x;
  }
  const double m = static_cast<double>(out.values.size());
  out.l1 = s1 / m;
  out.l2 = std::sqrt(s2 / m);
  out.density = sm / m;
  return out;
}

struct RestrictionNormsExact {
  Rat l1;
  Rat l2sq;
  Rat density;
  std::uint64_t umvirate_size = 0;
};

inline RestrictionNormsExact restrict_norms_exact(int n, const std::vector<Rat>& f,
                                                  const RestrictionKey& key) {
  key.validate(n);
  const PermTable& T = perm_table(n);
  const int t = key.t();
  RestrictionNormsExact out;
  out.umvirate_size = factorial(n - t);
  Rat s1(0), s2(0), sm(0);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    bool in = true;
    for (int i = 0; i < t && in; ++i)
      in = img[key.I[static_cast<std::size_t>(i)]] == key.J[static_cast<std::size_t>(i)];
    if (!in) continue;
    s1 += rat_abs(f[r]);
    s2 += f[r] * f[r];
    sm += f[r];
  }
  Rat m = rat(static_cast<long long>(out.umvirate_size));
  out.l1 = s1 / m;
  out.l2sq = s2 / m;
  out.density = sm / m;
  return out;
}

// Exhaustive globalness audit: for every pin depth t <= depth and every key
// (I, J), compares the restricted L2 norm against r^t * gamma2 (and, in the
// two-threshold variant, the restricted L1 norm against r^t * gamma1).
struct GlobalnessReport {
  double r = 1.0;
  int depth = 0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  bool biglobal = false;
  bool pass = false;
  std::vector<double> worst_l2_ratio;  // per depth t = 0..depth
  std::vector<double> worst_l1_ratio;  // filled when biglobal
  RestrictionKey witness;              // maximizer of the L2 ratio
  double witness_l2 = 0.0;
  bool estimate_only = false;  // true for the sampled variant
};

namespace detail {

// Worst restriction ratios at exact depth t, sharded over the pinned
// positions.  Returns {worst L2 ratio, worst L1 ratio, witness, witness L2}.
struct DepthScan {
  double l2_ratio = 0.0;
  double l1_ratio = 0.0;
  RestrictionKey witness;
  double witness_l2 = 0.0;
};

inline DepthScan audit_depth_scan(const GroupFunction& f, int t, double l2_threshold,
                                  double l1_threshold, int workers) {
  const PermTable& T = perm_table(f.n);
  const int n = f.n;
  const std::size_t tc = tuple_count(n, t);
  const double cell = static_cast<double>(factorial(n - t));
  std::vector<DepthScan> partial(tc);
  parallel_chunks(
      tc,
      [&](std::size_t lo, std::size_t hi) {
        std::vector<double> s2(tc), s1(tc);
        Tuple J(static_cast<std::size_t>(t));
        for (std::size_t a = lo; a < hi; ++a) {
          Tuple I = tuple_unrank(n, t, a);
          std::fill(s2.begin(), s2.end(), 0.0);
          std::fill(s1.begin(), s1.end(), 0.0);
          for (std::uint32_t r = 0; r < T.size; ++r) {
            const std::uint8_t* img = T.images(r);
            for (int i = 0; i < t; ++i) J[static_cast<std::size_t>(i)] = img[I[static_cast<std::size_t>(i)]];
            std::uint64_t b = tuple_rank(n, J);
            double x = f.v[r];
            s2[b] += x * x;
            s1[b] += std::abs(x);
          }
          DepthScan& best = partial[a];
          for (std::size_t b = 0; b < tc; ++b) {
            double l2 = std::sqrt(s2[b] / cell);
            double ratio = l2 / l2_threshold;
            if (ratio > best.l2_ratio) {
              best.l2_ratio = ratio;
              best.witness = RestrictionKey{I, tuple_unrank(n, t, b)};
              best.witness_l2 = l2;
            }
            best.l1_ratio = std::max(best.l1_ratio, (s1[b] / cell) / l1_threshold);
          }
        }
      },
      workers);
  DepthScan best;
  for (const DepthScan& p : partial) {
    if (p.l2_ratio > best.l2_ratio) {
      best.l2_ratio = p.l2_ratio;
      best.witness = p.witness;
      best.witness_l2 = p.witness_l2;
    }
    best.l1_ratio = std::max(best.l1_ratio, p.l1_ratio);
  }
  return best;
}

}  // namespace detail

inline GlobalnessReport global_audit(const GroupFunction& f, double r, int depth,
                                     bool biglobal = false, double gamma1 = -1.0,
                                     double gamma2 = -1.0, bool force = false, int workers = 0) {
  if (r <= 0) throw std::invalid_argument("global_audit: need r > 0");
  if (depth < 0 || depth > f.n) throw std::invalid_argument("global_audit: depth out of range");
  if (depth > 4 && !force) throw std::invalid_argument("global_audit: depth capped at 4 (pass force to override)");
  GlobalnessReport rep;
  rep.r = r;
  rep.depth = depth;
  rep.gamma1 = gamma1 > 0 ? gamma1 : lp_norm(f, 1.0);
  rep.gamma2 = gamma2 > 0 ? gamma2 : l2_norm(f);
  rep.biglobal = biglobal;
  if (rep.gamma2 <= 0) throw std::invalid_argument("global_audit: gamma2 must be positive");
  if (biglobal && rep.gamma1 <= 0) throw std::invalid_argument("global_audit: gamma1 must be positive");

  double worst = 0.0;
  for (int t = 0; t <= depth; ++t) {
    double rt = std::pow(r, t);
    if (t == 0) {
      rep.worst_l2_ratio.push_back(l2_norm(f) / rep.gamma2);
      rep.worst_l1_ratio.push_back(lp_norm(f, 1.0) / rep.gamma1);
      if (rep.worst_l2_ratio[0] > worst) {
        worst = rep.worst_l2_ratio[0];
        rep.witness = RestrictionKey{};
        rep.witness_l2 = l2_norm(f);
      }
      continue;
    }
    auto scan = detail::audit_depth_scan(f, t, rt * rep.gamma2, rt * rep.gamma1, workers);
    rep.worst_l2_ratio.push_back(scan.l2_ratio);
    rep.worst_l1_ratio.push_back(scan.l1_ratio);
    if (scan.l2_ratio > worst) {
      worst = scan.l2_ratio;
      rep.witness = scan.witness;
      rep.witness_l2 = scan.witness_l2;
    }
  }
  rep.pass = true;
  for (int t = 0; t <= depth; ++t) {
    if (rep.worst_l2_ratio[static_cast<std::size_t>(t)] > 1.0 + 1e-12) rep.pass = false;
    if (biglobal && rep.worst_l1_ratio[static_cast<std::size_t>(t)] > 1.0 + 1e-12) rep.pass = false;
  }
  return rep;
}

// Random-key spot check; never a certificate.
inline GlobalnessReport global_audit_sampled(const GroupFunction& f, double r, int depth,
                                             int samples, std::uint64_t seed) {
  if (r <= 0) throw std::invalid_argument("global_audit_sampled: need r > 0");
  GlobalnessReport rep;
  rep.r = r;
  rep.depth = depth;
  rep.gamma1 = lp_norm(f, 1.0);
  rep.gamma2 = l2_norm(f);
  rep.estimate_only = true;
  rep.worst_l2_ratio.assign(static_cast<std::size_t>(depth) + 1, 0.0);
  rep.worst_l2_ratio[0] = 1.0;
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    int t = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(depth));
    std::uint64_t tc = tuple_count(f.n, t);
    RestrictionKey key{tuple_unrank(f.n, t, rng() % tc), tuple_unrank(f.n, t, rng() % tc)};
    Restriction res = restrict_function(f, key);
    double ratio = res.l2 / (std::pow(r, t) * rep.gamma2);
    auto& slot = rep.worst_l2_ratio[static_cast<std::size_t>(t)];
    slot = std::max(slot, ratio);
    if (ratio > worst) {
      worst = ratio;
      rep.witness = key;
      rep.witness_l2 = res.l2;
    }
  }
  rep.pass = worst <= 1.0 + 1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// Densifying restriction finder for sets.

struct FoundRestriction {
  RestrictionKey key;
  double density = 0.0;  // mu of the restricted set on its umvirate
  int steps = 0;         // descents taken
  int audit_depth = 0;   // extension depth the final key was audited at
};

namespace detail {

// Measure of A within U_{I->J}; A is an indicator over ranks.
inline double restricted_density(const GroupFunction& A, const RestrictionKey& key) {
  return restrict_function(A, key).density;
}

// Worst extension of (I, J) by up to `depth` extra pins, in the L2 sense for
// the indicator: sqrt(mu_ext / mu_cur) vs r^{t'}.  Returns the worst ratio
// and the extended key attaining it.
struct ExtensionScan {
  double ratio = 0.0;
  RestrictionKey extended;
};

inline ExtensionScan worst_extension(const GroupFunction& A, const RestrictionKey& key, double r,
                                     int depth) {
  const PermTable& T = perm_table(A.n);
  const int n = A.n;
  const int t = key.t();
  std::vector<std::uint32_t> members;
  for (std::uint32_t rk = 0; rk < T.size; ++rk) {
    const std::uint8_t* img = T.images(rk);
    bool in = A.v[rk] != 0.0;
    for (int i = 0; i < t && in; ++i)
      in = img[key.I[static_cast<std::size_t>(i)]] == key.J[static_cast<std::size_t>(i)];
    if (in) members.push_back(rk);
  }
  const double mu_cur = static_cast<double>(members.size()) / static_cast<double>(factorial(n - t));
  ExtensionScan best;
  if (members.empty()) return best;
  std::uint32_t pinned_pos = 0;
  for (int x : key.I) pinned_pos |= 1u << x;

  std::vector<int> free_pos;
  for (int i = 0; i < n; ++i)
    if (!(pinned_pos & (1u << i))) free_pos.push_back(i);

  for (int ext = 1; ext <= depth && ext <= static_cast<int>(free_pos.size()); ++ext) {
    std::uint64_t ic = tuple_count(static_cast<int>(free_pos.size()), ext);
    std::map<Tuple, std::uint32_t> bucket;
    Tuple I2(static_cast<std::size_t>(ext)), J2(static_cast<std::size_t>(ext));
    for (std::uint64_t a = 0; a < ic; ++a) {
      Tuple pick = tuple_unrank(static_cast<int>(free_pos.size()), ext, a);
      for (int i = 0; i < ext; ++i) I2[static_cast<std::size_t>(i)] = free_pos[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      bucket.clear();
      for (std::uint32_t rk : members) {
        const std::uint8_t* img = T.images(rk);
        for (int i = 0; i < ext; ++i) J2[static_cast<std::size_t>(i)] = img[I2[static_cast<std::size_t>(i)]];
        ++bucket[J2];
      }
      for (const auto& [jt, cnt] : bucket) {
        double mu_ext = static_cast<double>(cnt) / static_cast<double>(factorial(n - t - ext));
        double ratio = std::sqrt(mu_ext / mu_cur) / std::pow(r, ext);
        if (ratio > best.ratio) {
          RestrictionKey k2 = key;
          k2.I.insert(k2.I.end(), I2.begin(), I2.end());
          k2.J.insert(k2.J.end(), jt.begin(), jt.end());
          best.ratio = ratio;
          best.extended = std::move(k2);
        }
      }
    }
  }
  return best;
}

// Replace the value side by the measure-maximizing assignment for the same
// positions (keeping the current values on a tie).
inline void maximize_value_side(const GroupFunction& A, RestrictionKey& key) {
  if (key.I.empty()) return;
  const PermTable& T = perm_table(A.n);
  std::map<Tuple, std::uint32_t> bucket;
  Tuple J(key.I.size());
  for (std::uint32_t rk = 0; rk < T.size; ++rk) {
    if (A.v[rk] == 0.0) continue;
    const std::uint8_t* img = T.images(rk);
    for (std::size_t i = 0; i < key.I.size(); ++i) J[i] = img[key.I[i]];
    ++bucket[J];
  }
  std::uint32_t cur = bucket.count(key.J) ? bucket[key.J] : 0;
  for (const auto& [jt, cnt] : bucket)
    if (cnt > cur) {
      cur = cnt;
      key.J = jt;
    }
}

}  // namespace detail

// Densification: starting from the whole group, while the current restriction
// of A has an extension whose L2 ratio beats r, descend to the witness with
// its value side re-maximized.  The result's density multiplies by more than
// r per added pin, so it ends at mu(A_{I->J}) >= mu(A) * r^{|I|}.
inline FoundRestriction find_global_restriction(const GroupFunction& A, double r,
                                                int audit_depth = 2, int max_steps = 64) {
  if (r <= 1.0) throw std::invalid_argument("find_global_restriction: need r > 1");
  if (mean(A) <= 0.0) throw std::invalid_argument("find_global_restriction: empty set");
  for (double x : A.v)
    if (x != 0.0 && x != 1.0) throw std::invalid_argument("find_global_restriction: not an indicator");

  FoundRestriction out;
  out.audit_depth = audit_depth;
  while (out.steps < max_steps) {
    detail::maximize_value_side(A, out.key);  // keeps current values on ties
    auto scan = detail::worst_extension(A, out.key, r, audit_depth);
    if (scan.ratio <= 1.0 + 1e-12) break;
    out.key = scan.extended;
    ++out.steps;
  }
  detail::maximize_value_side(A, out.key);
  out.density = detail::restricted_density(A, out.key);
  return out;
}

// ---------------------------------------------------------------------------
// Degree-d mass bound for functions with certified restriction control.

struct LevelDReport {
  int d = 0;
  double r = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double level_mass = 0.0;  // squared L2 mass of the degree-d part
  double bound = 0.0;       // gamma1^2 (10^6 r^2 log(gamma2/gamma1) / d)^d
  bool hypothesis_holds = false;
  double margin = 0.0;  // bound - level_mass
};

inline LevelDReport level_d_check(const GroupFunction& f, const GlobalnessReport& cert, int d,
                                  int workers = 0) {
  if (!cert.pass || cert.estimate_only || !cert.biglobal || cert.depth < d)
    throw std::invalid_argument("level_d_check: parameters not certified to the requested depth");
  if (d < 1) throw std::invalid_argument("level_d_check: need d >= 1");
  if (cert.gamma2 < cert.gamma1 || !(cert.gamma1 > 0))
    throw std::invalid_argument("level_d_check: need gamma2 >= gamma1 > 0");
  LevelDReport rep;
  rep.d = d;
  rep.r = cert.r;
  rep.gamma1 = cert.gamma1;
  rep.gamma2 = cert.gamma2;
  GroupFunction part = degree_part(f, d, workers);
  rep.level_mass = inner(part, part);
  double lg = std::log(cert.gamma2 / cert.gamma1);
  rep.bound = cert.gamma1 * cert.gamma1 * std::pow(1e6 * cert.r * cert.r * lg / d, d);
  rep.hypothesis_holds = d <= std::min(0.25 * lg, 1e-5 * f.n);
  rep.margin = rep.bound - rep.level_mass;
  return rep;
}

// Indicator of the permutations mapping every pinned position into the given
// target window.
inline GroupFunction image_confined_set(int n, const std::vector<int>& positions,
                                        const std::vector<int>& targets) {
  const PermTable& T = perm_table(n);
  std::uint32_t window = 0;
  for (int j : targets) {
    if (j < 0 || j >= n) throw std::invalid_argument("image_confined_set: target out of range");
    window |= 1u << j;
  }
  GroupFunction f = GroupFunction::zero(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    const std::uint8_t* img = T.images(r);
    bool in = true;
    for (int i : positions) {
      if (i < 0 || i >= n) throw std::invalid_argument("image_confined_set: position out of range");
      if (!(window & (1u << img[i]))) {
        in = false;
        break;
      }
    }
    f.v[r] = in ? 1.0 : 0.0;
  }
  return f;
}

}  // namespace snlab
