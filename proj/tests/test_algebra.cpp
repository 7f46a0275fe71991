#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <functional>

#include "snlab/algebra.hpp"

using namespace snlab;

namespace {

GroupFunction dirac_density(int n, const Perm& t) {
  GroupFunction d = GroupFunction::zero(n);
  d.v[perm_rank(t)] = static_cast<double>(factorial(n));
  return d;
}

double max_abs_diff(const GroupFunction& a, const GroupFunction& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

// Indicator columns for all ways of pinning exactly d positions; their span
// is the space of functions of degree at most d.
Eigen::MatrixXd pinned_indicator_columns(int n, int d) {
  const PermTable& T = perm_table(n);
  std::vector<int> cols_idx;
  std::vector<std::vector<std::pair<int, int>>> pins;
  std::vector<int> positions(d);
  std::function<void(int, int)> pick_pos = [&](int start, int k) {
    if (k == d) {
      std::vector<int> values(d);
      std::vector<bool> used(n, false);
      std::function<void(int)> pick_val = [&](int t) {
        if (t == d) {
          std::vector<std::pair<int, int>> pin(d);
          for (int i = 0; i < d; ++i) pin[i] = {positions[i], values[i]};
          pins.push_back(pin);
          return;
        }
        for (int v = 0; v < n; ++v) {
          if (used[v]) continue;
          used[v] = true;
          values[t] = v;
          pick_val(t + 1);
          used[v] = false;
        }
      };
      pick_val(0);
      return;
    }
    for (int p = start; p < n; ++p) {
      positions[k] = p;
      pick_pos(p + 1, k + 1);
    }
  };
  pick_pos(0, 0);
  Eigen::MatrixXd B(static_cast<int>(T.size), static_cast<int>(pins.size()));
  for (std::size_t c = 0; c < pins.size(); ++c) {
    for (std::uint32_t r = 0; r < T.size; ++r) {
      const std::uint8_t* im = T.images(r);
      bool hit = true;
      for (auto [i, j] : pins[c])
        if (im[i] != j) hit = false;
      B(static_cast<int>(r), static_cast<int>(c)) = hit ? 1.0 : 0.0;
    }
  }
  return B;
}

// Orthogonal projection onto the column space of B via a rank-revealing QR.
// (SVD-based least squares is unreliable here: the pinned-indicator Gram has
// singular values of high multiplicity.)
GroupFunction least_squares_projection(const GroupFunction& f, const Eigen::MatrixXd& B) {
  Eigen::VectorXd y(static_cast<int>(f.v.size()));
  for (std::size_t i = 0; i < f.v.size(); ++i) y(static_cast<int>(i)) = f.v[i];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), static_cast<int>(qr.rank()));
  Eigen::VectorXd p = Q * (Q.transpose() * y);
  GroupFunction out = GroupFunction::zero(f.n);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = p(static_cast<int>(i));
  return out;
}

}  // namespace

TEST_CASE("convolution identities", "[algebra]") {
  const int n = 5;
  GroupFunction f = random_function(n, 11);
  GroupFunction one = GroupFunction::constant(n, 1.0);
  GroupFunction sg = sign_function(n);

  GroupFunction fo = convolve(f, one);
  for (double x : fo.v) REQUIRE(x == Catch::Approx(mean(f)).margin(1e-12));

  GroupFunction fs = convolve(f, sg);
  double c = inner(f, sg);
  for (std::uint32_t r = 0; r < fs.v.size(); ++r)
    REQUIRE(fs.v[r] == Catch::Approx(c * sg.v[r]).margin(1e-12));

  Perm t = perm_unrank(n, 37);
  GroupFunction g = random_function(n, 12);
  GroupFunction dg = convolve(dirac_density(n, t), g);
  REQUIRE(max_abs_diff(dg, act(t, g, Side::Left)) < 1e-12);

  GroupFunction h = random_function(n, 13);
  GroupFunction lhs = convolve(convolve(f, g), h);
  GroupFunction rhs = convolve(f, convolve(g, h));
  REQUIRE(max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("exact convolution matches double kernel", "[algebra]") {
  const int n = 4;
  const PermTable& T = perm_table(n);
  std::mt19937_64 rng(99);
  std::vector<Rat> fr(T.size), gr(T.size);
  GroupFunction fd = GroupFunction::zero(n), gd = GroupFunction::zero(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    int a = static_cast<int>(rng() % 19) - 9;
    int b = static_cast<int>(rng() % 19) - 9;
    fr[r] = rat(a, 3);
    gr[r] = rat(b, 7);
    fd.v[r] = rat_double(fr[r]);
    gd.v[r] = rat_double(gr[r]);
  }
  std::vector<Rat> cr = convolve_exact<Rat>(n, fr, gr);
  GroupFunction cd = convolve(fd, gd);
  for (std::uint32_t r = 0; r < T.size; ++r)
    REQUIRE(cd.v[r] == Catch::Approx(rat_double(cr[r])).margin(1e-12));

  // unit of the convolution algebra
  std::vector<Rat> delta(T.size, Rat(0));
  delta[perm_rank(Perm::identity(n))] = Rat(static_cast<long long>(T.size));
  std::vector<Rat> fid = convolve_exact<Rat>(n, fr, delta);
  for (std::uint32_t r = 0; r < T.size; ++r) REQUIRE(fid[r] == fr[r]);
}

TEST_CASE("translation action laws", "[algebra]") {
  const int n = 5;
  GroupFunction f = random_function(n, 21);
  Perm s = perm_unrank(n, 17), t = perm_unrank(n, 101);
  REQUIRE(max_abs_diff(act(compose(s, t), f, Side::Left), act(s, act(t, f, Side::Left), Side::Left)) <
          1e-14);
  REQUIRE(max_abs_diff(act(compose(s, t), f, Side::Right), act(s, act(t, f, Side::Right), Side::Right)) <
          1e-14);
  // both actions preserve inner products
  GroupFunction g = random_function(n, 22);
  REQUIRE(inner(act(s, f, Side::Left), act(s, g, Side::Left)) == Catch::Approx(inner(f, g)));
  REQUIRE(inner(act(s, f, Side::Right), act(s, g, Side::Right)) == Catch::Approx(inner(f, g)));
}

TEST_CASE("class translates match brute force", "[algebra]") {
  const int n = 4;
  const PermTable& T = perm_table(n);
  GroupFunction f = random_function(n, 31);
  ClassTranslates D = class_translates(f);
  for (std::size_t c = 0; c < T.classes.size(); ++c) {
    for (std::uint32_t s = 0; s < T.size; ++s) {
      double acc = 0;
      for (std::uint32_t t = 0; t < T.size; ++t) {
        if (T.class_of[t] != c) continue;
        Perm ti = inverse(T.get(t));
        acc += f.v[perm_rank(compose(ti, T.get(s)))];
      }
      acc /= static_cast<double>(T.size);
      REQUIRE(D.cls[c][s] == Catch::Approx(acc).margin(1e-12));
    }
  }
}

TEST_CASE("isotypic projections form an orthogonal resolution", "[algebra]") {
  const int n = 5;
  const CharacterTable& C = character_table(n);
  GroupFunction f = random_function(n, 41);
  Decomposition d = decompose(f);

  GroupFunction total = GroupFunction::zero(n);
  double norms = 0;
  std::vector<GroupFunction> parts;
  for (std::size_t r = 0; r < C.partitions.size(); ++r) {
    parts.push_back(d.isotypic(r));
    for (std::size_t i = 0; i < total.v.size(); ++i) total.v[i] += parts.back().v[i];
    norms += inner(parts.back(), parts.back());
  }
  REQUIRE(max_abs_diff(total, f) < 1e-9);
  REQUIRE(norms == Catch::Approx(inner(f, f)).epsilon(1e-9));

  for (std::size_t r = 0; r < parts.size(); ++r) {
    GroupFunction again = isotypic_project(parts[r], C.partitions[r]);
    REQUIRE(max_abs_diff(again, parts[r]) < 1e-10);  // idempotent
    for (std::size_t q = r + 1; q < parts.size(); ++q)
      REQUIRE(std::abs(inner(parts[r], parts[q])) < 1e-10);  // mutually orthogonal
  }

  // projections commute with both translations
  Perm s = perm_unrank(n, 55);
  for (Side side : {Side::Left, Side::Right}) {
    GroupFunction a = isotypic_project(act(s, f, side), C.partitions[2]);
    GroupFunction b = act(s, parts[2], side);
    REQUIRE(max_abs_diff(a, b) < 1e-10);
  }
}

TEST_CASE("convolution respects isotypic blocks", "[algebra]") {
  const int n = 5;
  const CharacterTable& C = character_table(n);
  GroupFunction f = random_function(n, 51), g = random_function(n, 52);
  GroupFunction fg = convolve(f, g);
  for (std::size_t r = 0; r < C.partitions.size(); ++r) {
    GroupFunction lhs = isotypic_project(fg, C.partitions[r]);
    GroupFunction rhs =
        convolve(isotypic_project(f, C.partitions[r]), isotypic_project(g, C.partitions[r]));
    REQUIRE(max_abs_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("degree parts agree with pinned-indicator least squares", "[algebra][oracle]") {
  const int n = 5;
  GroupFunction f = random_function(n, 61);
  for (int d = 0; d <= 2; ++d) {
    GroupFunction via_chars = degree_cum(f, d);
    GroupFunction via_ls = least_squares_projection(f, pinned_indicator_columns(n, d));
    REQUIRE(max_abs_diff(via_chars, via_ls) < 1e-8);
  }
  // strict parts telescope the cumulative ones
  GroupFunction strict = degree_part(f, 2);
  GroupFunction tele = degree_cum(f, 2);
  GroupFunction lower = degree_cum(f, 1);
  for (std::size_t i = 0; i < tele.v.size(); ++i) tele.v[i] -= lower.v[i];
  REQUIRE(max_abs_diff(strict, tele) < 1e-10);

  // exact route agrees with the floating route
  const PermTable& T = perm_table(4);
  std::vector<Rat> fr(T.size);
  GroupFunction fd = GroupFunction::zero(4);
  std::mt19937_64 rng(741);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    fr[r] = rat(static_cast<int>(rng() % 21) - 10, 4);
    fd.v[r] = rat_double(fr[r]);
  }
  for (int d = 0; d <= 3; ++d) {
    std::vector<Rat> pe = degree_cum_exact(4, fr, d);
    GroupFunction pf = degree_cum(fd, d);
    for (std::uint32_t r = 0; r < T.size; ++r)
      REQUIRE(pf.v[r] == Catch::Approx(rat_double(pe[r])).margin(1e-10));
  }
}

TEST_CASE("levels fold conjugate rows together", "[algebra]") {
  for (int n : {5, 6}) {
    REQUIRE(level_of(Partition{{n}}) == 0);
    REQUIRE(level_of(Partition{std::vector<int>(n, 1)}) == 0);
    std::vector<int> hook{n - 1, 1};
    REQUIRE(level_of(Partition{hook}) == 1);
    for (const Partition& lam : partitions_of(n)) REQUIRE(level_of(lam) == level_of(lam.conjugate()));
  }
  const int n = 6;
  GroupFunction f = random_function(n, 71);
  GroupFunction total = GroupFunction::zero(n);
  for (int d = 0; d <= n - 1; ++d) {
    GroupFunction part = level_part(f, d);
    for (std::size_t i = 0; i < total.v.size(); ++i) total.v[i] += part.v[i];
    // each level is sign-twist invariant as a subspace
    GroupFunction tw = level_part(sign_twist(f), d);
    REQUIRE(max_abs_diff(sign_twist(part), tw) < 1e-10);
  }
  REQUIRE(max_abs_diff(total, f) < 1e-9);

  GroupFunction tail = level_tail(f, 1);
  GroupFunction l0 = level_part(f, 0), l1 = level_part(f, 1);
  for (std::size_t i = 0; i < tail.v.size(); ++i) tail.v[i] += l0.v[i] + l1.v[i];
  REQUIRE(max_abs_diff(tail, f) < 1e-9);

  // level 0 is spanned by the constants and the sign character
  GroupFunction sg = sign_function(n);
  GroupFunction proj = GroupFunction::zero(n);
  double m = mean(f), cs = inner(f, sg);
  for (std::size_t i = 0; i < proj.v.size(); ++i) proj.v[i] = m + cs * sg.v[i];
  REQUIRE(max_abs_diff(level_part(f, 0), proj) < 1e-10);
}

TEST_CASE("dense operator matrix realizes convolution", "[algebra]") {
  const int n = 4;
  const PermTable& T = perm_table(n);
  GroupFunction f = random_function(n, 81), g = random_function(n, 82);
  Eigen::MatrixXd M = dense_operator_matrix(f);
  Eigen::VectorXd gv(static_cast<int>(T.size));
  for (std::uint32_t r = 0; r < T.size; ++r) gv(static_cast<int>(r)) = g.v[r];
  Eigen::VectorXd out = M * gv;
  GroupFunction fg = convolve(f, g);
  for (std::uint32_t r = 0; r < T.size; ++r)
    REQUIRE(out(static_cast<int>(r)) == Catch::Approx(fg.v[r]).margin(1e-12));
}

TEST_CASE("isotypic bases are orthonormal and invariant", "[algebra]") {
  const int n = 5;
  const PermTable& T = perm_table(n);
  const CharacterTable& C = character_table(n);
  for (std::size_t li : {std::size_t{1}, std::size_t{2}}) {
    Eigen::MatrixXd B = isotypic_basis(n, li);
    REQUIRE(B.cols() == static_cast<int>(C.dims[li] * C.dims[li]));
    Eigen::MatrixXd G = B.transpose() * B;
    REQUIRE((G - Eigen::MatrixXd::Identity(B.cols(), B.cols())).cwiseAbs().maxCoeff() < 1e-10);
    for (int c = 0; c < B.cols(); ++c) {
      GroupFunction col = GroupFunction::zero(n);
      for (std::uint32_t r = 0; r < T.size; ++r) col.v[r] = B(static_cast<int>(r), c);
      GroupFunction proj = isotypic_project(col, C.partitions[li]);
      REQUIRE(max_abs_diff(proj, col) < 1e-8);
    }
  }
}

TEST_CASE("spectral norms on invariant scopes", "[algebra]") {
  const int n = 5;
  GroupFunction one = GroupFunction::constant(n, 1.0);
  SpectralEstimate e = spectral_norm(one, SpectralScope::whole(), 3);
  REQUIRE(e.converged);
  REQUIRE(e.value == Catch::Approx(1.0).margin(1e-9));
  e = spectral_norm(one, SpectralScope::level_eq(0), 3);
  REQUIRE(e.value == Catch::Approx(1.0).margin(1e-9));
  e = spectral_norm(one, SpectralScope::level_eq(1), 3);
  REQUIRE(e.value == Catch::Approx(0.0).margin(1e-9));

  GroupFunction sg = sign_function(n);
  e = spectral_norm(sg, SpectralScope::whole(), 3);
  REQUIRE(e.value == Catch::Approx(1.0).margin(1e-9));
  e = spectral_norm(sg, SpectralScope::level_eq(0), 3);
  REQUIRE(e.value == Catch::Approx(1.0).margin(1e-9));
  e = spectral_norm(sg, SpectralScope::level_eq(1), 3);
  REQUIRE(e.value == Catch::Approx(0.0).margin(1e-9));

  // against the full singular value decomposition of the dense operator
  GroupFunction f = random_density(n, 91);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense_operator_matrix(f));
  double top = svd.singularValues()(0);
  e = spectral_norm(f, SpectralScope::whole(), 5);
  REQUIRE(e.converged);
  REQUIRE(e.value == Catch::Approx(top).epsilon(1e-7));

  // the whole-space norm is attained on some isotypic block
  const CharacterTable& C = character_table(n);
  double best = 0;
  for (const Partition& lam : C.partitions) {
    SpectralEstimate bi = spectral_norm(f, SpectralScope::isotypic(lam), 5);
    best = std::max(best, bi.value);
  }
  REQUIRE(best == Catch::Approx(e.value).epsilon(1e-6));
}

TEST_CASE("convolution by a density contracts L2", "[algebra]") {
  const int n = 5;
  for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
    GroupFunction f = random_density(n, seed);
    GroupFunction g = random_function(n, seed + 50);
    REQUIRE(l2_norm(convolve(f, g)) <= lp_norm(f, 1) * l2_norm(g) + 1e-12);
  }
}

TEST_CASE("coefficient matrices: canonical form and calculus", "[algebra]") {
  const int n = 5;
  // dictator indicator: closed-form canonical entries
  GroupFunction dict = GroupFunction::zero(n);
  const PermTable& T = perm_table(n);
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (T.images(r)[0] == 0) dict.v[r] = 1.0;
  CoefficientMatrix A = linear_canonical(dict);
  double nn = static_cast<double>(n);
  REQUIRE(A.a(0, 0) == Catch::Approx((nn - 1) * (nn - 1) / (nn * nn)));
  REQUIRE(A.a(0, 3) == Catch::Approx(-(nn - 1) / (nn * nn)));
  REQUIRE(A.a(2, 0) == Catch::Approx(-(nn - 1) / (nn * nn)));
  REQUIRE(A.a(2, 3) == Catch::Approx(1.0 / (nn * nn)));
  REQUIRE(is_canonical(A));

  // reconstruction is exactly the strict degree-one part
  for (std::uint64_t seed : {111ull, 112ull}) {
    GroupFunction f = random_function(n, seed);
    CoefficientMatrix M = linear_canonical(f);
    REQUIRE(is_canonical(M, 1e-10));
    REQUIRE(max_abs_diff(linear_reconstruct(M), degree_part(f, 1)) < 1e-10);
  }

  // inner products and convolution transported to matrix land
  GroupFunction f = random_function(n, 121), g = random_function(n, 122);
  CoefficientMatrix Mf = linear_canonical(f), Mg = linear_canonical(g);
  GroupFunction pf = linear_reconstruct(Mf), pg = linear_reconstruct(Mg);
  REQUIRE(linear_inner(Mf, Mg) == Catch::Approx(inner(pf, pg)).margin(1e-10));
  GroupFunction conv = convolve(pf, pg);
  REQUIRE(max_abs_diff(linear_reconstruct(linear_convolve(Mf, Mg)), conv) < 1e-10);
}
