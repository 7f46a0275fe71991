#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "snlab/experiments.hpp"

using namespace snlab;

namespace {

RankSet class_set(int n, std::vector<int> parts) {
  const PermTable& T = perm_table(n);
  Partition want{std::move(parts)};
  RankSet s = RankSet::empty(n);
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (T.classes[T.class_of[r]] == want) s.bits.set(r);
  return s;
}

// Even pointwise stabilizer of [m] together with the consecutive 3-cycles
// and their inverses; covers slowly for larger m.
RankSet slow_set(int n, int m) {
  const PermTable& T = perm_table(n);
  RankSet s = RankSet::empty(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    if (T.sgn[r] < 0) continue;
    const std::uint8_t* img = T.images(r);
    bool fix = true;
    for (int i = 0; i < m && fix; ++i)
      if (img[i] != i) fix = false;
    if (fix) s.bits.set(r);
  }
  for (int i = 0; i + 2 < n; ++i) {
    std::vector<int> im(n);
    for (int j = 0; j < n; ++j) im[j] = j;
    im[i] = i + 1;
    im[i + 1] = i + 2;
    im[i + 2] = i;
    Perm p = perm_from_images0(im);
    s.bits.set(perm_rank(p));
    s.bits.set(perm_rank(inverse(p)));
  }
  return s;
}

RankSet pointwise_stab(int n, const std::vector<int>& I, bool even_only) {
  const PermTable& T = perm_table(n);
  RankSet s = RankSet::empty(n);
  for (std::uint32_t r = 0; r < T.size; ++r) {
    if (even_only && T.sgn[r] < 0) continue;
    const std::uint8_t* img = T.images(r);
    bool fix = true;
    for (int i : I)
      if (img[i] != i) {
        fix = false;
        break;
      }
    if (fix) s.bits.set(r);
  }
  return s;
}

RankSet random_symmetric_set(int n, std::uint64_t seed, int draws, bool with_identity) {
  const PermTable& T = perm_table(n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, T.size - 1);
  RankSet s = RankSet::empty(n);
  if (with_identity) s.bits.set(0);
  for (int i = 0; i < draws; ++i) {
    std::uint32_t r = pick(rng);
    s.bits.set(r);
    s.bits.set(T.inv[r]);
  }
  return s;
}

GroupFunction normalized_density(const RankSet& A) {
  GroupFunction f = indicator(A);
  const double mu = mean(f);
  for (double& x : f.v) x /= mu;
  return f;
}

double set_double_mu(const RankSet& A) { return rat_double(A.mu()); }

}  // namespace

TEST_CASE("product layers and covering numbers") {
  // The alternating group covers itself in one step.
  CoveringReport an = covering_number(even_set(5), Ambient::An);
  CHECK(an.covered);
  CHECK(an.m == 1);
  CHECK(an.layer_mu[0] == Rat(1));

  // All 3-cycles: two layers, and the per-element first hits agree with the
  // covering number.
  RankSet tc = class_set(5, {3, 1, 1});
  CHECK(is_symmetric_set(tc));
  CoveringReport r = covering_number(tc, Ambient::An);
  CHECK(r.covered);
  CHECK(r.m == 2);
  const PermTable& T5 = perm_table(5);
  int max_hit = 0;
  for (std::uint32_t g = 0; g < T5.size; ++g)
    if (T5.sgn[g] > 0) {
      CHECK(r.first_hit[g] >= 1);
      max_hit = std::max(max_hit, r.first_hit[g]);
    }
  CHECK(max_hit == r.m);
  CHECK(r.closure_size == T5.size / 2);
  CHECK(r.cert.pass);

  // Layer recompute: each stored layer is the product of its predecessor
  // with the generating set, exactly.
  for (std::size_t j = 1; j < r.layers.size(); ++j) {
    RankSet prev = RankSet::empty(5);
    prev.bits = r.layers[j - 1];
    CHECK(product_set(prev, tc).bits == r.layers[j]);
  }

  // Pinning a longer prefix slows covering; frozen values at n = 8.
  const int expected_cn[3] = {4, 7, 9};
  for (int m = 2; m <= 4; ++m) {
    CoveringReport s = covering_number(slow_set(8, m), Ambient::An);
    CHECK(s.covered);
    CHECK(s.m == expected_cn[m - 2]);
    CHECK(s.first_hit[0] == 1);  // identity sits in the generating set
    for (std::size_t j = 1; j + 1 < s.layer_mu.size(); ++j)
      CHECK(s.layer_mu[j + 1] >= s.layer_mu[j - 1]);  // parity chains grow
  }

  // A proper subgroup never covers; the cycle is detected and the closure
  // reported.
  RankSet sub = RankSet::empty(4);
  sub.bits.set(0);
  sub.bits.set(perm_rank(parse_perm("(1 2)", 4)));
  CoveringReport nc = covering_number(sub, Ambient::Sn);
  CHECK_FALSE(nc.covered);
  CHECK(nc.m == -1);
  CHECK(nc.stabilized);
  CHECK(nc.closure_size == 2);

  // A directed singleton cycles with period three.
  RankSet one = RankSet::empty(4);
  one.bits.set(perm_rank(parse_perm("(1 2 3)", 4)));
  CHECK_THROWS_AS(covering_number(one, Ambient::An), std::invalid_argument);
  CoveringReport dir = covering_number(one, Ambient::An, /*directed=*/true);
  CHECK_FALSE(dir.covered);
  CHECK(dir.stabilized);
  CHECK(dir.layers.size() == 4);
  CHECK(dir.closure_size == 3);

  // Odd support is rejected in the alternating ambient.
  CHECK_THROWS_AS(covering_number(sub, Ambient::An), std::invalid_argument);
}

TEST_CASE("schreier graph diameters") {
  // 3-cycles act transitively in one step: a complete graph on points.
  SchreierReport s1 = schreier_diameter(class_set(5, {3, 1, 1}), 1);
  CHECK(s1.connected);
  CHECK(s1.diameter == 1);
  CHECK(s1.vertices == 5);

  // A long cycle and its inverse give a circulant of diameter n/2.
  Perm c = parse_perm("(1 2 3 4 5 6)", 6);
  RankSet cyc = RankSet::empty(6);
  cyc.bits.set(perm_rank(c));
  cyc.bits.set(perm_rank(inverse(c)));
  SchreierReport s2 = schreier_diameter(cyc, 1);
  CHECK(s2.connected);
  CHECK(s2.diameter == 3);

  // Pairs under a single cycle keep their index difference: five components
  // of six vertices each.
  SchreierReport s3 = schreier_diameter(cyc, 2);
  CHECK_FALSE(s3.connected);
  CHECK(s3.vertices == 30);
  CHECK(s3.component_size == 6);

  // Pairs under all 3-cycles stay connected (the action is 2-transitive)
  // and respect the covering-number bound.
  SchreierReport s3c = schreier_diameter(class_set(5, {3, 1, 1}), 2);
  CHECK(s3c.connected);
  CHECK(s3c.vertices == 20);
  CHECK(s3c.diameter >= 1);
  CHECK(s3c.diameter <= 2);

  // Quotient bound: point diameter never exceeds the covering number.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RankSet A = random_symmetric_set(5, seed, 4, true);
    CoveringReport cov = covering_number(A, Ambient::Sn);
    if (!cov.covered) continue;
    SchreierReport sch = schreier_diameter(A, 1);
    CHECK(sch.connected);
    CHECK(sch.diameter <= cov.m);
  }

  // Fixed points disconnect the action.
  RankSet idswap = RankSet::empty(5);
  idswap.bits.set(0);
  idswap.bits.set(perm_rank(parse_perm("(1 2)", 5)));
  SchreierReport s4 = schreier_diameter(idswap, 1);
  CHECK_FALSE(s4.connected);
  CHECK(s4.diameter == -1);
  CHECK(s4.component_size == 2);

  RankSet dirset = RankSet::empty(5);
  dirset.bits.set(perm_rank(parse_perm("(1 2 3)", 5)));
  CHECK_THROWS_AS(schreier_diameter(dirset, 1), std::invalid_argument);
}

TEST_CASE("stabilizer recovery in product powers") {
  // Full alternating input: the trivial window works immediately.
  StabilizerCoverReport dense = stabilizer_cover(even_set(5), 1);
  CHECK(dense.found);
  CHECK(dense.window.empty());
  CHECK(dense.mu_u == Rat(1));
  CHECK(dense.power == 8);

  // A bare stabilizer subgroup is recovered as itself.
  RankSet stab = pointwise_stab(6, {0, 1}, true);
  StabilizerCoverReport own = stabilizer_cover(stab, 1);
  CHECK(own.found);
  CHECK(own.window == std::vector<int>{0, 1});
  CHECK(own.mu_u == rat(1, 30));
  CHECK(own.budget == rat_pow(rat(1, 30), 5));

  // Planting an extra generating pair makes the eighth power everything, so
  // the window shrinks to nothing.
  RankSet planted = stab;
  Perm g = parse_perm("(1 3)(2 5)", 6);
  planted.bits.set(perm_rank(g));
  planted.bits.set(perm_rank(inverse(g)));
  StabilizerCoverReport rec = stabilizer_cover(planted, 1);
  CHECK(rec.found);
  CHECK(rec.window.size() <= 2);

  // A tiny subgroup forces a deep window.
  RankSet pair = RankSet::empty(6);
  pair.bits.set(0);
  pair.bits.set(perm_rank(parse_perm("(1 2)(3 4)", 6)));
  StabilizerCoverReport tiny = stabilizer_cover(pair, 1);
  CHECK(tiny.found);
  CHECK(tiny.window.size() == 4);
  CHECK(tiny.mu_u == rat(1, 360));

  RankSet odd = RankSet::empty(5);
  odd.bits.set(0);
  odd.bits.set(perm_rank(parse_perm("(1 2)", 5)));
  CHECK_THROWS_AS(stabilizer_cover(odd, 1), std::invalid_argument);
  RankSet dir = RankSet::empty(5);
  dir.bits.set(perm_rank(parse_perm("(1 2 3)", 5)));
  CHECK_THROWS_AS(stabilizer_cover(dir, 1), std::invalid_argument);
}

TEST_CASE("growth report") {
  // The alternating group squares to itself.
  RankSet an = even_set(6);
  GrowthReport g1 = growth_report(an, global_audit(indicator(an), 4.0, 1));
  CHECK(g1.mu_sq == rat(1, 2));
  CHECK(g1.growth == Catch::Approx(1.0));
  CHECK(g1.grid.size() == 9);

  // Frozen doubling measure of the middle band at n = 6.
  RankSet band = band_set(BandParams{6, 2});
  GrowthReport g2 = growth_report(band, global_audit(indicator(band), 4.0, 2));
  CHECK(g2.mu_a == rat(9, 20));
  CHECK(g2.mu_sq == rat(19, 20));
  CHECK(g2.cert.pass);
  // With unspecified constants the grid rows underflow at desk scale; they
  // are reports, so only their shape is pinned.
  for (const GrowthBound& b : g2.grid) {
    CHECK(b.bound >= 0.0);
    CHECK(b.bound <= 1.0);
    CHECK(b.M > 0.0);
    CHECK(b.applicable);
  }
  std::printf("[report] growth n=6 ell=2 mu=%.4f mu2=%.4f M0=%.2f bound0=%.3e\n",
              rat_double(g2.mu_a), rat_double(g2.mu_sq), g2.grid[0].M, g2.grid[0].bound);

  // Subgroups do not grow at all.
  RankSet stab = pointwise_stab(6, {0, 1}, false);
  GrowthReport g3 = growth_report(stab, global_audit(indicator(stab), 4.0, 1));
  CHECK(g3.mu_sq == g3.mu_a);
  CHECK(g3.growth == Catch::Approx(1.0));
}

TEST_CASE("walk mixing profile") {
  // The uniform density never deviates.
  WalkReport flat = mixing_profile(GroupFunction::constant(6, 1.0), 4, P0Mode::TrivialOnly);
  for (const WalkStep& st : flat.steps) {
    CHECK(st.deviation == Catch::Approx(0.0).margin(1e-12));
    CHECK(st.coverage == Catch::Approx(1.0));
    CHECK(st.mean == Catch::Approx(1.0));
  }

  // Deviations shrink monotonically for densities, and the support of an
  // identity-bearing walk only grows.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RankSet A = random_symmetric_set(5, seed, 5, true);
    GroupFunction f = normalized_density(A);
    for (P0Mode mode : {P0Mode::TrivialOnly, P0Mode::Level0}) {
      WalkReport w = mixing_profile(f, 6, mode);
      for (std::size_t i = 1; i < w.steps.size(); ++i) {
        CHECK(w.steps[i].deviation <= w.steps[i - 1].deviation + 1e-12);
        CHECK(w.steps[i].coverage >= w.steps[i - 1].coverage - 1e-12);
      }
    }
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GroupFunction f = random_density(5, seed);
    WalkReport w = mixing_profile(f, 6, P0Mode::Level0);
    for (std::size_t i = 1; i < w.steps.size(); ++i)
      CHECK(w.steps[i].deviation <= w.steps[i - 1].deviation + 1e-12);
  }

  // A walk confined to even permutations mixes to the parity-aware
  // projection but stays a full sign-component away from the plain one.
  GroupFunction f3 = normalized_density(class_set(5, {3, 1, 1}));
  WalkReport wt = mixing_profile(f3, 8, P0Mode::TrivialOnly);
  WalkReport wl = mixing_profile(f3, 8, P0Mode::Level0);
  CHECK(wt.steps.back().deviation == Catch::Approx(1.0).margin(0.01));
  CHECK(wl.steps.back().deviation < 0.01);
  CHECK(wt.steps.back().sign_mean == Catch::Approx(1.0).margin(0.01));
  CHECK(wt.steps[0].coverage == Catch::Approx(20.0 / 120.0));
  CHECK(wt.steps[1].coverage == Catch::Approx(0.5));

  GroupFunction bad = GroupFunction::constant(5, 2.0);
  CHECK_THROWS_AS(mixing_profile(bad, 2, P0Mode::TrivialOnly), std::invalid_argument);
  GroupFunction neg = GroupFunction::constant(5, 1.0);
  neg.v[0] = -0.5;
  neg.v[1] += 0.5;
  CHECK_THROWS_AS(mixing_profile(neg, 2, P0Mode::TrivialOnly), std::invalid_argument);
}

TEST_CASE("triple product mixing") {
  // Constants: everything is the main term.
  GroupFunction one = GroupFunction::constant(5, 1.0);
  TripleMixingReport c = product_mixing_defect(one, one, one);
  CHECK(c.total == Catch::Approx(1.0));
  CHECK(c.main_term == Catch::Approx(1.0));
  CHECK(c.defect <= 1e-12);
  CHECK(c.level_terms[0] == Catch::Approx(1.0));
  CHECK(c.reconstruction_error <= 1e-12);

  // The even-support density 1 + sign is reproduced entirely by the two
  // level-zero characters.
  GroupFunction ev = normalized_density(even_set(5));
  TripleMixingReport s = product_mixing_defect(ev, ev, ev);
  CHECK(s.total == Catch::Approx(2.0));
  CHECK(s.main_term == Catch::Approx(2.0));
  CHECK(s.defect <= 1e-9);
  CHECK(s.level_terms[0] == Catch::Approx(2.0));
  CHECK(s.reconstruction_error <= 1e-9);

  // Level reconstruction on smooth random densities.
  for (std::uint64_t seed = 11; seed <= 13; ++seed) {
    TripleMixingReport r = product_mixing_defect(random_density(6, seed), random_density(6, seed + 50),
                                                 random_density(6, seed + 100));
    CHECK(r.reconstruction_error <= 1e-9);
    CHECK(r.tolerance_scale == Catch::Approx(0.01).epsilon(1e-6));
    std::printf("[report] mixing n=6 seed=%llu total=%.6f main=%.6f defect=%.3e scale=%.3e\n",
                static_cast<unsigned long long>(seed), r.total, r.main_term, r.defect,
                r.tolerance_scale);
  }

  // Exact pair-count identity against the exact convolution.
  {
    const PermTable& T = perm_table(5);
    std::mt19937_64 rng(404);
    RankSet A = RankSet::empty(5), B = RankSet::empty(5), C = RankSet::empty(5);
    std::uniform_int_distribution<int> coin(0, 3);
    for (std::uint32_t r = 0; r < T.size; ++r) {
      if (coin(rng) == 0) A.bits.set(r);
      if (coin(rng) == 0) B.bits.set(r);
      if (coin(rng) == 0) C.bits.set(r);
    }
    const std::uint64_t cnt = triple_product_count(A, B, C);
    std::vector<Rat> fa(T.size, Rat(0)), fb(T.size, Rat(0));
    for (std::uint32_t r = 0; r < T.size; ++r) {
      if (A.test(r)) fa[r] = 1;
      if (B.test(r)) fb[r] = 1;
    }
    std::vector<Rat> conv = convolve_exact(5, fa, fb);
    Rat lhs = 0;
    for (std::uint32_t r = 0; r < T.size; ++r)
      if (C.test(r)) lhs += conv[r];
    CHECK(lhs == rat(static_cast<long long>(cnt), static_cast<long long>(T.size)));

    // Same identity through the floating inner product of densities.
    GroupFunction df = normalized_density(A), dg = normalized_density(B), dh = normalized_density(C);
    const double prob = static_cast<double>(cnt) / (120.0 * 120.0);
    const double scaled = inner(convolve(df, dg), dh) * set_double_mu(A) * set_double_mu(B) * set_double_mu(C);
    CHECK(scaled == Catch::Approx(prob).epsilon(1e-9));
  }

  // Window-routed sets are product-free: the triple correlation collapses
  // to the main term.
  RankSet K = routed_window_set(6, 0, {1, 2});
  CHECK(K.count() == 72);
  CHECK(triple_product_count(K, K, K) == 0);
  GroupFunction fk = normalized_density(K);
  TripleMixingReport pk = product_mixing_defect(fk, fk, fk);
  CHECK(std::abs(pk.total) <= 1e-9);
  CHECK(pk.defect == Catch::Approx(pk.main_term).margin(1e-9));
  CHECK(pk.reconstruction_error <= 1e-9);

  RankSet K7 = routed_window_set(7, 0, {1, 2});
  CHECK(K7.count() == 480);
  CHECK(triple_product_count(K7, K7, K7) == 0);
  CHECK_THROWS_AS(routed_window_set(6, 1, {1, 2}), std::invalid_argument);
}

TEST_CASE("three-term progression search") {
  // Identity plus an involution collide on squares.
  RankSet idt = RankSet::empty(4);
  idt.bits.set(0);
  idt.bits.set(perm_rank(parse_perm("(1 2)", 4)));
  RothReport r1 = find_3ap(idt);
  CHECK(r1.found);
  CHECK_FALSE(r1.square_injective);

  // The found witness satisfies the progression equation.
  const PermTable& T4 = perm_table(4);
  const std::uint32_t y2 = rank_compose(T4.images(r1.y), T4.images(r1.y), 4);
  CHECK(rank_compose(T4.images(r1.x), T4.images(r1.z), 4) == y2);
  CHECK_FALSE((r1.x == r1.y && r1.y == r1.z));

  // The full alternating group has plenty of progressions.
  RothReport r2 = find_3ap(even_set(4));
  CHECK(r2.found);

  // A progression-free pair: distinct 4-cycles with distinct squares.
  RankSet pf = RankSet::empty(4);
  pf.bits.set(perm_rank(parse_perm("(1 2 3 4)", 4)));
  pf.bits.set(perm_rank(parse_perm("(1 2 4 3)", 4)));
  RothReport r3 = find_3ap(pf);
  CHECK_FALSE(r3.found);
  CHECK(r3.square_injective);

  // Exhaustive oracle on random small sets.
  for (std::uint64_t seed = 21; seed <= 26; ++seed) {
    RankSet A = random_symmetric_set(4, seed, 3, seed % 2 == 0);
    RothReport rep = find_3ap(A);
    bool oracle = false;
    std::vector<std::uint32_t> mem;
    for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
         r = A.bits.find_next(r))
      mem.push_back(static_cast<std::uint32_t>(r));
    for (std::uint32_t x : mem)
      for (std::uint32_t y : mem)
        for (std::uint32_t z : mem) {
          if (x == y && y == z) continue;
          if (rank_compose(T4.images(x), T4.images(z), 4) ==
              rank_compose(T4.images(y), T4.images(y), 4))
            oracle = true;
        }
    CHECK(rep.found == oracle);
  }
}

TEST_CASE("covering by subgroup translates") {
  // A pointwise stabilizer covers itself with one translate.
  RankSet stab = pointwise_stab(6, {0, 1}, false);
  SubgroupCoverReport r1 = subgroup_cover(stab, 1);
  CHECK(r1.doubling == Rat(1));
  CHECK(r1.dense_key.key.t() == 2);
  CHECK(r1.dense_key.density == Catch::Approx(1.0));
  CHECK(r1.h_size == 24);
  CHECK(r1.translates.size() == 1);
  CHECK(r1.translates[0] == 0);
  CHECK(r1.covered);
  CHECK(r1.bound_ok);

  // Stabilizer with attached cosets: small doubling, still covered.
  const PermTable& T6 = perm_table(6);
  Perm g = parse_perm("(1 3 5)", 6);
  RankSet A = stab;
  for (std::size_t s = stab.bits.find_first(); s != boost::dynamic_bitset<>::npos;
       s = stab.bits.find_next(s)) {
    A.bits.set(rank_compose(T6.images(perm_rank(g)), T6.images(static_cast<std::uint32_t>(s)), 6));
    A.bits.set(rank_compose(T6.images(static_cast<std::uint32_t>(s)),
                            T6.images(perm_rank(inverse(g))), 6));
  }
  CHECK(is_symmetric_set(A));
  CHECK(A.count() == 66);
  SubgroupCoverReport r2 = subgroup_cover(A, 30);
  CHECK(r2.doubling == rat(20, 11));
  CHECK(r2.covered);
  CHECK(r2.bound_ok);
  for (std::uint32_t z : r2.translates) CHECK(A.test(z));

  // Dense symmetric sets go through the trivial restriction.
  RankSet dense = random_symmetric_set(5, 7, 40, true);
  REQUIRE(rat_double(dense.mu()) > 0.3);
  SubgroupCoverReport r3 = subgroup_cover(dense, 4);
  CHECK(r3.covered);
  CHECK(r3.bound_ok);

  // Doubling above K is refused; so are sets without identity or symmetry.
  RankSet sparse = RankSet::empty(5);
  sparse.bits.set(0);
  sparse.bits.set(perm_rank(parse_perm("(1 2 3 4 5)", 5)));
  sparse.bits.set(perm_rank(parse_perm("(1 5 4 3 2)", 5)));
  CHECK_THROWS_AS(subgroup_cover(sparse, 1), std::invalid_argument);
  RankSet noid = RankSet::empty(5);
  noid.bits.set(perm_rank(parse_perm("(1 2)", 5)));
  CHECK_THROWS_AS(subgroup_cover(noid, 3), std::invalid_argument);
}

TEST_CASE("band family statistics") {
  // Exact density, per-profile product counts, and triple correlation.
  BandReport b3 = make_band(BandParams{8, 3});
  CHECK(b3.mu == rat(8, 35));
  CHECK(b3.mu_match);
  CHECK(b3.overlap_match);
  CHECK(b3.overlap_formula[2] == Rat(1728));
  CHECK(b3.overlap_formula[3] == Rat(1728));
  CHECK(b3.pair_total == Rat(3456));
  CHECK(b3.triple_count == 31850496ull);
  CHECK(b3.triple_match);
  CHECK(b3.triple_correlation == rat(105, 64));
  CHECK(b3.cert.pass);
  CHECK(b3.cert.depth == 3);

  BandReport b2 = make_band(BandParams{8, 2}, 1);
  CHECK(b2.mu == rat(18, 35));
  CHECK(b2.overlap_match);
  CHECK(b2.pair_total == Rat(10368));
  CHECK(b2.overlap_formula[0] == Rat(576));
  CHECK(b2.overlap_formula[1] == Rat(9216));
  CHECK(b2.overlap_formula[2] == Rat(576));
  CHECK(b2.triple_match);
  CHECK(b2.triple_correlation == rat(35, 36));

  // The two thin bands carry no triples at all.
  BandReport b1 = make_band(BandParams{8, 1}, 1);
  CHECK(b1.mu == rat(8, 35));
  CHECK(b1.pair_total == Rat(0));
  CHECK(b1.triple_count == 0);
  CHECK(b1.triple_match);
  CHECK(b1.triple_correlation == Rat(0));

  // Edge case: the block subgroup, where the correlation degenerates to
  // the inverse density.
  BandReport bk = make_band(BandParams{6, 3}, 1);
  CHECK(bk.mu == rat(1, 20));
  CHECK(bk.set.count() == 36);
  CHECK(bk.pair_total == Rat(36));
  CHECK(bk.triple_match);
  CHECK(bk.triple_correlation == Rat(20));

  // The fiber-factored triple count agrees with the direct pair scan.
  BandReport b62 = make_band(BandParams{6, 2}, 1);
  CHECK(b62.triple_count == triple_product_count(b62.set, b62.set, b62.set));

  CHECK_THROWS_AS(make_band(BandParams{7, 2}), std::invalid_argument);
  CHECK_THROWS_AS(make_band(BandParams{8, 5}), std::invalid_argument);
}

TEST_CASE("band linear statistic and chains") {
  // Canonical linear coefficients of the band density: the block pattern
  // at the first-moment rate, via both the exact chain and the floating
  // canonical extraction.
  BandParams p{8, 3};
  RankSet A = band_set(p);
  std::vector<std::vector<Rat>> Q = marginal_chain(A);
  const Rat rho = p.rho();
  CHECK(rho == rat(1, 2));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const int m = ((i < 4) == (j < 4)) ? 1 : -1;
      CHECK(Rat(7) / 8 * (Rat(8) * Q[i][j] - 1) == Rat(m) * rat(7, 16));
    }
  GroupFunction f = normalized_density(A);
  CoefficientMatrix M1 = linear_canonical(f);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const double want = (((i < 4) == (j < 4)) ? 1.0 : -1.0) * 7.0 / 16.0;
      CHECK(M1.a(i, j) == Catch::Approx(want).margin(1e-9));
    }

  // Row sums of the chain are exactly one.
  for (int i = 0; i < 8; ++i) {
    Rat s = 0;
    for (int j = 0; j < 8; ++j) s += Q[i][j];
    CHECK(s == Rat(1));
  }

  // Convolution cross-check at n = 6: the chain square predicts the
  // canonical coefficients of the convolved density, and the coefficient
  // calculus multiplies the same way.
  BandParams p6{6, 2};
  RankSet A6 = band_set(p6);
  GroupFunction f6 = normalized_density(A6);
  GroupFunction f6f6 = convolve(f6, f6);
  std::vector<std::vector<Rat>> Q2 = rat_mat_pow(marginal_chain(A6), 2);
  CoefficientMatrix M2 = linear_canonical(f6f6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(M2.a(i, j) == Catch::Approx(rat_double(Rat(5) / 6 * (Rat(6) * Q2[i][j] - 1))).margin(1e-9));
  CoefficientMatrix M1b = linear_canonical(f6);
  CoefficientMatrix Mprod = linear_convolve(M1b, M1b);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(Mprod.a(i, j) == Catch::Approx(M2.a(i, j)).margin(1e-9));
}

TEST_CASE("band walk sharpness") {
  BandParams p{8, 3};

  // Uniform start: centered statistic, unit second moment.
  SharpnessReport s0 = sharpness_statistic(p, 0);
  CHECK(s0.phi_norm == Catch::Approx(1.0).margin(1e-10));
  CHECK(s0.overlap_mean_scaled == Rat(0));
  CHECK(s0.scaled_match);
  CHECK(s0.nu_phi == Catch::Approx(0.0).margin(1e-12));
  CHECK(s0.linear_mass_scaled == Rat(0));
  CHECK(s0.nu_phi2 == Catch::Approx(1.0));

  // The walk mean and the degree-one mass decay at the exact geometric
  // rate.
  for (int m = 1; m <= 3; ++m) {
    SharpnessReport s = sharpness_statistic(p, m);
    CHECK(s.scaled_match);
    CHECK(s.overlap_mean_scaled == Rat(8) * rat_pow(rat(1, 2), m));
    CHECK(s.mass_match);
    CHECK(s.linear_mass_scaled == Rat(64) * rat_pow(rat(1, 4), m));
    CHECK(s.nu_phi ==
          Catch::Approx(std::pow(0.5, m) * std::sqrt(7.0)).margin(1e-12));
    // Degree-one mass of the m-fold power, in walk normalization.
    const Rat mass = Rat(7) / 64 * s.linear_mass_scaled;
    CHECK(mass == Rat(7) * rat_pow(rat(1, 4), m));
    CHECK(s.nu_phi2 >= 0.0);
    std::printf("[report] sharpness n=8 ell=3 m=%d nu=%.6f nu2=%.6f decay1=%.6f\n", m, s.nu_phi,
                s.nu_phi2, s.decay_grid[0]);
  }

  // The middle band has a vanishing rate: uniform marginals after one step.
  SharpnessReport mid = sharpness_statistic(BandParams{8, 2}, 1);
  CHECK(mid.overlap_mean_scaled == Rat(0));
  CHECK(mid.linear_mass_scaled == Rat(0));
  CHECK(mid.scaled_match);
  CHECK(mid.mass_match);

  // The block subgroup keeps the statistic pinned at its maximum.
  SharpnessReport blk = sharpness_statistic(BandParams{8, 4}, 2);
  CHECK(blk.overlap_mean_scaled == Rat(8));
  CHECK(blk.linear_mass_scaled == Rat(64));
  CHECK(blk.scaled_match);
  CHECK(blk.mass_match);
  CHECK(blk.nu_phi == Catch::Approx(std::sqrt(7.0)));
}

TEST_CASE("half-window family") {
  WindowExample w0 = make_window_example(6, {});
  CHECK(w0.mu == Rat(1));
  CHECK(w0.mu_match);
  CHECK(w0.cert.pass);

  WindowExample w1 = make_window_example(8, {0});
  CHECK(w1.mu == rat(1, 2));
  CHECK(w1.deviation == Catch::Approx(0.0).margin(1e-12));
  CHECK(w1.cert.pass);
  CHECK(w1.cert.biglobal);

  WindowExample w2 = make_window_example(8, {0, 1});
  CHECK(w2.mu == rat(3, 14));
  CHECK(w2.mu_match);
  CHECK(std::abs(w2.deviation) <= w2.order_scale);
  CHECK(w2.cert.pass);

  WindowExample w3 = make_window_example(6, {0, 1, 2});
  CHECK(w3.mu == rat(1, 20));
  CHECK(std::abs(w3.deviation) <= w3.order_scale);
  CHECK(w3.cert.pass);
  std::printf("[report] window n=6 s=3 mu=%.6f dev=%.4f scale=%.4f\n", rat_double(w3.mu),
              w3.deviation, w3.order_scale);

  // Agrees with the image-confined construction.
  WindowExample w4 = make_window_example(6, {0, 1});
  GroupFunction confined = image_confined_set(6, {0, 1}, {0, 1, 2});
  CHECK(w4.set.bits == set_from_indicator(confined).bits);

  CHECK_THROWS_AS(make_window_example(5, {0}), std::invalid_argument);
  CHECK_THROWS_AS(make_window_example(6, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(make_window_example(6, {6}), std::invalid_argument);
}

TEST_CASE("statistic degree masses") {
  // Band anchor at n = 6: the moment projection reproduces the exact
  // isotypic masses through degree two.
  BandParams p{6, 2};
  RankSet A = band_set(p);
  std::vector<long long> h = overlap_statistic(6, 3);
  StatisticMasses sm = statistic_degree_masses(A, h, 2);
  CHECK(sm.cumulative[0] == rat(81, 400));
  CHECK(sm.strict[1] == rat(9, 80));

  const PermTable& T = perm_table(6);
  std::vector<Rat> fx(T.size, Rat(0));
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (A.test(r)) fx[r] = 1;
  for (int d = 1; d <= 2; ++d) {
    std::vector<Rat> part = degree_part_exact(6, fx, d);
    Rat mass = 0;
    for (const Rat& x : part) mass += x * x;
    mass /= Rat(static_cast<long long>(T.size));
    CHECK(sm.strict[d] == mass);
  }

  // Window anchor: same agreement for the half-window routing count.
  RankSet W = make_window_example(6, {0, 1}).set;
  std::vector<long long> hw = window_statistic(6, {0, 1});
  StatisticMasses smw = statistic_degree_masses(W, hw, 2);
  std::vector<Rat> wx(T.size, Rat(0));
  for (std::uint32_t r = 0; r < T.size; ++r)
    if (W.test(r)) wx[r] = 1;
  for (int d = 1; d <= 2; ++d) {
    std::vector<Rat> part = degree_part_exact(6, wx, d);
    Rat mass = 0;
    for (const Rat& x : part) mass += x * x;
    mass /= Rat(static_cast<long long>(T.size));
    CHECK(smw.strict[d] == mass);
  }

  // The sign statistic captures the even indicator exactly.
  const PermTable& T4 = perm_table(4);
  std::vector<long long> sgn(T4.size);
  for (std::uint32_t r = 0; r < T4.size; ++r) sgn[r] = T4.sgn[r];
  StatisticMasses sms = statistic_degree_masses(even_set(4), sgn, 1);
  CHECK(sms.cumulative[0] == rat(1, 4));
  CHECK(sms.cumulative[1] == rat(1, 2));

  // A constant statistic adds nothing beyond the mean.
  std::vector<long long> cst(T4.size, 7);
  StatisticMasses smc = statistic_degree_masses(even_set(4), cst, 1);
  CHECK(smc.cumulative[1] == smc.cumulative[0]);
  CHECK(smc.strict[1] == Rat(0));

  CHECK_THROWS_AS(statistic_degree_masses(A, h, 4), std::invalid_argument);
  std::vector<long long> wrong(10, 0);
  CHECK_THROWS_AS(statistic_degree_masses(A, wrong, 1), std::invalid_argument);
}
