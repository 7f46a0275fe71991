// Command-line front end.  Each subcommand computes one report, writes it as
// JSON into the output directory, and prints a one-line summary.  Exit codes:
// 0 when every check in the run passed, 2 when a check failed (the report
// body carries the failed checks), 1 for malformed input or unusable
// parameters.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "characters.hpp"
#include "combinatorics.hpp"
#include "coupling.hpp"
#include "globalness.hpp"
#include "io.hpp"

namespace snlab {

struct RunConfig {
  int n = 5;
  bool n_given = false;  // set after parsing; some commands pick their own default
  std::uint64_t seed = 1;
  int workers = 0;
  bool exact = false;
  double tol = 1e-9;
  std::string out_dir = ".";
};

namespace cli_detail {

struct CheckList {
  Json rows = Json::array();
  int failed = 0;

  void add(const std::string& name, bool pass, Json detail = Json::object()) {
    rows.push_back(Json{{"check", name}, {"pass", pass}, {"detail", std::move(detail)}});
    if (!pass) ++failed;
  }

  int total() const { return static_cast<int>(rows.size()); }

  std::string summary() const {
    return std::to_string(total() - failed) + "/" + std::to_string(total()) + " checks passed";
  }
};

inline int emit(const RunConfig& cfg, const std::string& kind, Json body, const CheckList& checks,
                const std::string& headline) {
  if (!checks.rows.empty()) {
    body["checks"] = checks.rows;
    Json failed = Json::array();
    for (const auto& row : checks.rows)
      if (!row.at("pass").get<bool>()) failed.push_back(row.at("check"));
    body["failed_checks"] = failed;
  }
  Json report = make_report(kind);
  report["body"] = std::move(body);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  const std::string path = cfg.out_dir + "/" + kind + ".json";
  save_report(path, report);
  std::cout << kind << ": " << headline << " -> " << path << "\n";
  return checks.failed == 0 ? 0 : 2;
}

// Integer character identities; exact at every n the dense table supports.
struct CharacterIdentities {
  long long dim_sum_sq = 0;
  long long group_order = 0;
  bool dims_ok = false;
  bool rows_ok = true;
  bool cols_ok = true;
};

inline CharacterIdentities character_identities(int n) {
  const CharacterTable& T = character_table(n);
  const std::size_t k = T.partitions.size();
  CharacterIdentities out;
  out.group_order = static_cast<long long>(factorial(n));
  for (std::size_t r = 0; r < k; ++r) out.dim_sum_sq += T.dims[r] * T.dims[r];
  out.dims_ok = out.dim_sum_sq == out.group_order;
  for (std::size_t r1 = 0; r1 < k && out.rows_ok; ++r1)
    for (std::size_t r2 = r1; r2 < k && out.rows_ok; ++r2) {
      long long sum = 0;
      for (std::size_t c = 0; c < k; ++c)
        sum += static_cast<long long>(T.class_sizes[c]) * T.chi[r1][c] * T.chi[r2][c];
      out.rows_ok = sum == (r1 == r2 ? out.group_order : 0);
    }
  for (std::size_t c1 = 0; c1 < k && out.cols_ok; ++c1)
    for (std::size_t c2 = c1; c2 < k && out.cols_ok; ++c2) {
      long long sum = 0;
      for (std::size_t r = 0; r < k; ++r) sum += T.chi[r][c1] * T.chi[r][c2];
      out.cols_ok = sum == (c1 == c2 ? static_cast<long long>(T.centralizers[c1]) : 0);
    }
  return out;
}

inline RankSet seeded_set(int n, std::uint64_t seed, std::size_t draws) {
  RankSet A = RankSet::empty(n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, factorial(n) - 1);
  for (std::size_t i = 0; i < draws; ++i) A.insert(static_cast<std::uint32_t>(pick(rng)));
  return A;
}

// Least j >= 1 with x z = y^2 for x, y, z in A, not all equal; the finder must
// agree with this scan.
inline bool progression_scan(const RankSet& A) {
  const PermTable& P = perm_table(A.n);
  std::vector<std::uint32_t> members;
  for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
       r = A.bits.find_next(r))
    members.push_back(static_cast<std::uint32_t>(r));
  std::vector<std::uint32_t> squares(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    squares[i] = rank_compose(P.images(members[i]), P.images(members[i]), A.n);
  for (std::uint32_t x : members)
    for (std::uint32_t z : members) {
      const std::uint32_t xz = rank_compose(P.images(x), P.images(z), A.n);
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (squares[i] != xz) continue;
        const std::uint32_t y = members[i];
        if (!(x == y && y == z)) return true;
      }
    }
  return false;
}

inline Json witness_json(const GlobalnessReport& rep) {
  return Json{{"restriction", restriction_key_str(rep.witness)},
              {"l2_ratio", rep.witness_l2}};
}

inline int cmd_chartable(const RunConfig& cfg) {
  const CharacterTable& T = character_table(cfg.n);
  const CharacterIdentities id = character_identities(cfg.n);

  CheckList checks;
  checks.add("dimension_sum_of_squares", id.dims_ok,
             Json{{"sum", id.dim_sum_sq}, {"group_order", id.group_order}});
  checks.add("row_orthogonality_exact", id.rows_ok);
  checks.add("column_orthogonality_exact", id.cols_ok);

  Json rows = Json::array();
  for (std::size_t r = 0; r < T.partitions.size(); ++r)
    rows.push_back(Json{{"partition", T.partitions[r].str()}, {"dimension", T.dims[r]}});
  Json body{{"n", cfg.n},
            {"partitions", static_cast<int>(T.partitions.size())},
            {"group_order", id.group_order},
            {"rows", rows}};
  return emit(cfg, "chartable", std::move(body), checks,
              "n=" + std::to_string(cfg.n) + " " + checks.summary());
}

inline int cmd_decompose(const RunConfig& cfg, const std::string& f_path) {
  GroupFunction f = f_path.empty() ? random_function(cfg.n, cfg.seed) : load_function(f_path);
  if (f.n > 7) throw std::invalid_argument("decompose: dense decomposition capped at n <= 7");
  const double tol = std::max(cfg.tol, 1e-9);

  Decomposition dec = decompose(f, cfg.workers);
  const std::size_t count = dec.table->partitions.size();
  Json rows = Json::array();
  double mass_sum = 0.0;
  std::vector<double> level_mass(static_cast<std::size_t>(f.n) + 1, 0.0);
  for (std::size_t r = 0; r < count; ++r) {
    const Partition& lam = dec.table->partitions[r];
    GroupFunction part = dec.isotypic(r);
    const double mass = inner(part, part);
    mass_sum += mass;
    level_mass[static_cast<std::size_t>(level_of(lam))] += mass;
    rows.push_back(Json{{"partition", lam.str()},
                        {"degree", degree_of(lam)},
                        {"level", level_of(lam)},
                        {"mass", mass}});
  }
  const double total = inner(f, f);
  const double gap = std::abs(mass_sum - total);

  GroupFunction low = dec.select([](const Partition& lam) { return level_of(lam) <= 1; });
  GroupFunction low2 =
      decompose(low, cfg.workers).select([](const Partition& lam) { return level_of(lam) <= 1; });
  double drift = 0.0;
  for (std::size_t s = 0; s < low.v.size(); ++s)
    drift = std::max(drift, std::abs(low2.v[s] - low.v[s]));

  CheckList checks;
  checks.add("parseval", gap <= tol,
             Json{{"mass_sum", mass_sum}, {"norm_sq", total}, {"gap", gap}});
  checks.add("projection_idempotent", drift <= 1e-10, Json{{"max_drift", drift}});

  Json body{{"n", f.n},
            {"source", f_path.empty() ? std::string("seeded") : f_path},
            {"norm_sq", total},
            {"parseval_gap", gap},
            {"level_mass", level_mass},
            {"rows", rows}};
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d parseval_gap=%.3g", f.n, gap);
  return emit(cfg, "decompose", std::move(body), checks, std::string(head) + " " + checks.summary());
}

inline int cmd_spectra(const RunConfig& cfg, const std::string& family, int k) {
  Json body{{"family", family}, {"n", cfg.n}, {"k", k}};
  std::string headline;
  if (family == "kneser") {
    Json rows = Json::array();
    for (const KneserEigen& e : kneser_spectrum(cfg.n, k))
      rows.push_back(Json{{"level", e.level}, {"value", e.value}, {"multiplicity", e.multiplicity}});
    body["rows"] = rows;
    headline = "kneser n=" + std::to_string(cfg.n) + " k=" + std::to_string(k) + " levels=" +
               std::to_string(rows.size());
  } else {
    const LevelEigenReport rep = disjointness_level_eigenvalues(cfg.n, k);
    body["values"] = rep.values;
    body["max_abs"] = rep.max_abs;
    headline = "disjointness n=" + std::to_string(cfg.n) + " k=" + std::to_string(k) +
               " values=" + std::to_string(rep.values.size());
  }
  return emit(cfg, "spectra", std::move(body), CheckList{}, headline);
}

inline int cmd_global_audit(const RunConfig& cfg, const std::string& set_path, double r, int depth,
                            bool biglobal) {
  const RankSet A = load_set(set_path, cfg.n_given ? cfg.n : 0);
  if (A.count() == 0) throw std::invalid_argument("global audit: the set is empty");
  const GlobalnessReport rep = global_audit(indicator(A), r, depth, biglobal, -1.0, -1.0, false,
                                            cfg.workers);

  CheckList checks;
  checks.add("restrictions_within_budget", rep.pass, witness_json(rep));

  Json body{{"n", A.n},
            {"size", A.count()},
            {"mu", rat_str(A.mu())},
            {"r", rep.r},
            {"depth", rep.depth},
            {"biglobal", rep.biglobal},
            {"worst_l2_ratio", rep.worst_l2_ratio},
            {"witness", witness_json(rep)}};
  if (biglobal) body["worst_l1_ratio"] = rep.worst_l1_ratio;
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d size=%llu pass=%s", A.n,
                static_cast<unsigned long long>(A.count()), rep.pass ? "yes" : "no");
  return emit(cfg, "global_audit", std::move(body), checks, head);
}

inline int cmd_global_find(const RunConfig& cfg, const std::string& set_path, double r) {
  const RankSet A = load_set(set_path, cfg.n_given ? cfg.n : 0);
  const FoundRestriction fr = find_global_restriction(indicator(A), r);
  Json body{{"n", A.n},
            {"size", A.count()},
            {"mu", rat_str(A.mu())},
            {"r", r},
            {"restriction", restriction_key_str(fr.key)},
            {"pins", fr.key.t()},
            {"density", fr.density},
            {"steps", fr.steps},
            {"audit_depth", fr.audit_depth}};
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d pins=%d density=%.4g", A.n, fr.key.t(), fr.density);
  return emit(cfg, "global_find", std::move(body), CheckList{}, head);
}

inline int cmd_coupling(const RunConfig& cfg) {
  if (cfg.n > 5) throw std::invalid_argument("coupling: table comparison capped at n <= 5");
  const CouplingTable greedy = coupling_table_greedy(cfg.n);
  const CouplingTable forgetful = coupling_table_forgetful(cfg.n);

  CheckList checks;
  checks.add("greedy_equals_forgetful", coupling_tables_equal(greedy, forgetful));
  checks.add("greedy_marginals_uniform", coupling_marginals_ok(greedy));
  checks.add("forgetful_marginals_uniform", coupling_marginals_ok(forgetful));

  std::size_t entries = 0;
  for (const auto& row : greedy.rows) entries += row.size();
  Json body{{"n", cfg.n},
            {"rows", greedy.rows.size()},
            {"box_points", greedy.cols.size()},
            {"entries", entries}};
  return emit(cfg, "coupling", std::move(body), checks,
              "n=" + std::to_string(cfg.n) + " " + checks.summary());
}

inline int cmd_exp_diameter(const RunConfig& cfg, const std::string& set_path,
                            const std::string& ambient, bool directed) {
  const RankSet A = load_set(set_path, cfg.n_given ? cfg.n : 0);
  const Ambient amb = ambient == "an" ? Ambient::An : Ambient::Sn;
  const CoveringReport rep = covering_number(A, amb, directed);

  Json mus = Json::array();
  for (const Rat& mu : rep.layer_mu) mus.push_back(rat_str(mu));
  int max_hit = 0;
  std::uint64_t unreached = 0;
  for (int h : rep.first_hit) {
    if (h < 0)
      ++unreached;
    else
      max_hit = std::max(max_hit, h);
  }
  Json body{{"n", A.n},
            {"size", A.count()},
            {"ambient", ambient},
            {"directed", directed},
            {"covered", rep.covered},
            {"covering_number", rep.m},
            {"stabilized", rep.stabilized},
            {"closure_size", rep.closure_size},
            {"layer_mu", mus},
            {"max_first_hit", max_hit},
            {"unreached", unreached},
            {"cert_pass", rep.cert.pass}};
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d covered=%s m=%d", A.n, rep.covered ? "yes" : "no",
                rep.m);
  return emit(cfg, "exp_diameter", std::move(body), CheckList{}, head);
}

inline int cmd_exp_band(const RunConfig& cfg, int ell, bool full) {
  BandParams p;
  p.n = cfg.n_given ? cfg.n : 8;
  p.ell = ell;
  p.validate();
  const BandReport rep = make_band(p);

  CheckList checks;
  checks.add("density_formula", rep.mu_match, Json{{"mu", rat_str(rep.mu)}});
  checks.add("overlap_profile_formula", rep.overlap_match);
  checks.add("triple_count_factorization", rep.triple_match,
             Json{{"triples", rep.triple_count}});
  checks.add("globalness_cert", rep.cert.pass, witness_json(rep.cert));

  Json overlaps = Json::array();
  for (const auto& cnt : rep.overlap_counts) overlaps.push_back(rat_str(cnt));
  Json body{{"n", p.n},
            {"ell", p.ell},
            {"k", p.k()},
            {"rho", rat_str(p.rho())},
            {"mu", rat_str(rep.mu)},
            {"size", rep.set.count()},
            {"overlap_counts", overlaps},
            {"pair_total", rat_str(rep.pair_total)},
            {"triple_count", rep.triple_count},
            {"triple_correlation", rat_str(rep.triple_correlation)},
            {"cert_depth", rep.cert.depth},
            {"cert_pass", rep.cert.pass}};
  if (full) {
    Json walk = Json::array();
    for (int m = 0; m <= 3; ++m) {
      const SharpnessReport s = sharpness_statistic(p, m);
      walk.push_back(Json{{"m", s.m},
                          {"phi_norm", s.phi_norm},
                          {"overlap_mean_scaled", rat_str(s.overlap_mean_scaled)},
                          {"expected_scaled", rat_str(s.expected_scaled)},
                          {"nu_phi", s.nu_phi},
                          {"linear_mass_scaled", rat_str(s.linear_mass_scaled)},
                          {"expected_mass_scaled", rat_str(s.expected_mass_scaled)},
                          {"nu_phi2", s.nu_phi2}});
      checks.add("walk_mean_closed_form_m" + std::to_string(m), s.scaled_match);
      checks.add("walk_mass_closed_form_m" + std::to_string(m), s.mass_match);
    }
    body["walk"] = walk;
  }
  return emit(cfg, "exp_band", std::move(body), checks,
              "n=" + std::to_string(p.n) + " ell=" + std::to_string(p.ell) + " mu=" +
                  rat_str(rep.mu) + " " + checks.summary());
}

inline int cmd_exp_mixing(const RunConfig& cfg, const std::string& f_path, int steps,
                          const std::string& mode_name) {
  GroupFunction f = f_path.empty() ? random_density(cfg.n, cfg.seed) : load_function(f_path);
  const P0Mode mode = mode_name == "trivial" ? P0Mode::TrivialOnly : P0Mode::Level0;
  const WalkReport rep = mixing_profile(f, steps, mode, cfg.workers);

  Json rows = Json::array();
  bool monotone = true;
  for (std::size_t i = 0; i < rep.steps.size(); ++i) {
    const WalkStep& s = rep.steps[i];
    rows.push_back(Json{{"m", s.m},
                        {"coverage", s.coverage},
                        {"mean", s.mean},
                        {"sign_mean", s.sign_mean},
                        {"deviation", s.deviation}});
    if (i > 0 && s.deviation > rep.steps[i - 1].deviation + 1e-12) monotone = false;
  }
  Json body{{"n", f.n},
            {"source", f_path.empty() ? std::string("seeded") : f_path},
            {"mode", mode_name},
            {"steps", rows},
            {"deviation_monotone", monotone},
            {"cert_pass", rep.cert.pass}};
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d steps=%d final_deviation=%.3g", f.n, steps,
                rep.steps.empty() ? 0.0 : rep.steps.back().deviation);
  return emit(cfg, "exp_mixing", std::move(body), CheckList{}, head);
}

inline int cmd_exp_roth(const RunConfig& cfg, const std::string& set_path) {
  const RankSet A = load_set(set_path, cfg.n_given ? cfg.n : 0);
  const RothReport rep = find_3ap(A);

  CheckList checks;
  if (A.count() <= 4096) {
    const bool scan = progression_scan(A);
    checks.add("finder_matches_exhaustive_scan", rep.found == scan,
               Json{{"finder", rep.found}, {"scan", scan}});
  }
  Json body{{"n", A.n},
            {"size", A.count()},
            {"found", rep.found},
            {"square_injective", rep.square_injective},
            {"pairs_scanned", rep.pairs_scanned}};
  if (rep.found) {
    const PermTable& P = perm_table(A.n);
    body["witness"] = Json{{"x", perm_to_string(P.get(rep.x))},
                           {"y", perm_to_string(P.get(rep.y))},
                           {"z", perm_to_string(P.get(rep.z))}};
    const std::uint32_t xz = rank_compose(P.images(rep.x), P.images(rep.z), A.n);
    const std::uint32_t yy = rank_compose(P.images(rep.y), P.images(rep.y), A.n);
    checks.add("witness_is_progression",
               xz == yy && A.test(rep.x) && A.test(rep.y) && A.test(rep.z) &&
                   !(rep.x == rep.y && rep.y == rep.z));
  }
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d size=%llu found=%s", A.n,
                static_cast<unsigned long long>(A.count()), rep.found ? "yes" : "no");
  return emit(cfg, "exp_roth", std::move(body), checks, std::string(head) + " " + checks.summary());
}

inline int cmd_verify_all(const RunConfig& cfg) {
  if (cfg.n < 3 || cfg.n > 6)
    throw std::invalid_argument("verify-all: supported range is 3 <= n <= 6");
  const int n = cfg.n;
  const double tol = std::max(cfg.tol, 1e-9);
  const PermTable& P = perm_table(n);
  CheckList checks;

  const CharacterIdentities chars = character_identities(n);
  checks.add("characters_dimension_sum", chars.dims_ok,
             Json{{"sum", chars.dim_sum_sq}, {"group_order", chars.group_order}});
  checks.add("characters_row_orthogonality", chars.rows_ok);
  checks.add("characters_column_orthogonality", chars.cols_ok);

  double worst_gap = 0.0;
  for (int i = 0; i < 5; ++i) {
    GroupFunction f = random_function(n, cfg.seed + static_cast<std::uint64_t>(i));
    Decomposition dec = decompose(f, cfg.workers);
    double mass = 0.0;
    for (std::size_t r = 0; r < dec.table->partitions.size(); ++r) {
      GroupFunction part = dec.isotypic(r);
      mass += inner(part, part);
    }
    worst_gap = std::max(worst_gap, std::abs(mass - inner(f, f)));
  }
  checks.add("parseval_seeded", worst_gap <= tol, Json{{"worst_gap", worst_gap}});

  {
    GroupFunction f = random_function(n, cfg.seed + 17);
    GroupFunction low =
        decompose(f, cfg.workers).select([](const Partition& lam) { return level_of(lam) <= 1; });
    GroupFunction low2 =
        decompose(low, cfg.workers).select([](const Partition& lam) { return level_of(lam) <= 1; });
    double drift = 0.0;
    for (std::size_t s = 0; s < low.v.size(); ++s)
      drift = std::max(drift, std::abs(low2.v[s] - low.v[s]));
    checks.add("projection_idempotent", drift <= 1e-10, Json{{"max_drift", drift}});
  }

  {
    const int cm = std::min(n, 5);
    const CouplingTable greedy = coupling_table_greedy(cm);
    const CouplingTable forgetful = coupling_table_forgetful(cm);
    checks.add("coupling_tables_match",
               coupling_tables_equal(greedy, forgetful) && coupling_marginals_ok(greedy),
               Json{{"n", cm}});
  }

  {
    BandParams p;
    p.n = n - (n % 2);
    p.ell = std::max(1, p.k() - 1);
    const BandReport rep = make_band(p, 2);
    checks.add("band_closed_forms", rep.mu_match && rep.overlap_match && rep.triple_match,
               Json{{"n", p.n}, {"ell", p.ell}, {"mu", rat_str(rep.mu)}});
  }

  {
    const GroupFunction dict = image_confined_set(n, {0}, {0});
    const GlobalnessReport bad = global_audit(dict, 1.5, 1, false, -1.0, -1.0, false, cfg.workers);
    const GlobalnessReport good = global_audit(GroupFunction::constant(n, 1.0), 2.0, 2, false,
                                               -1.0, -1.0, false, cfg.workers);
    checks.add("globalness_gates", !bad.pass && good.pass,
               Json{{"dictator_pass", bad.pass}, {"constant_pass", good.pass}});
  }

  {
    RankSet cycles = RankSet::empty(n);
    Partition three;
    three.parts.assign(static_cast<std::size_t>(n - 2), 1);
    three.parts[0] = 3;
    std::size_t cls = 0;
    for (std::size_t c = 0; c < P.classes.size(); ++c)
      if (P.classes[c].parts == three.parts) cls = c;
    for (std::uint32_t r = 0; r < P.size; ++r)
      if (P.class_of[r] == cls) cycles.insert(r);
    const CoveringReport rep = covering_number(cycles, Ambient::An);
    bool consistent = rep.covered && !rep.layers.empty();
    RankSet layer = cycles;
    for (std::size_t j = 0; consistent && j < rep.layers.size(); ++j) {
      if (j > 0) layer = product_set(layer, cycles);
      consistent = layer.bits == rep.layers[j];
      for (std::size_t r = layer.bits.find_first();
           consistent && r != boost::dynamic_bitset<>::npos; r = layer.bits.find_next(r))
        consistent = rep.first_hit[r] >= 1 &&
                     rep.first_hit[r] <= static_cast<int>(j) + 1;
    }
    checks.add("covering_layers_consistent", consistent,
               Json{{"m", rep.m}, {"size", cycles.count()}});
  }

  {
    bool agree = true;
    for (int i = 0; i < 3 && agree; ++i) {
      const RankSet A = seeded_set(n, cfg.seed * 7919 + static_cast<std::uint64_t>(i),
                                   std::min<std::size_t>(factorial(n) / 2, 48));
      if (A.count() == 0) continue;
      agree = find_3ap(A).found == progression_scan(A);
    }
    checks.add("progression_finder_matches_scan", agree);
  }

  {
    const GroupFunction f = random_density(n, cfg.seed + 3);
    const WalkReport walk = mixing_profile(f, 4, P0Mode::Level0, cfg.workers);
    bool monotone = true;
    for (std::size_t i = 1; i < walk.steps.size(); ++i)
      if (walk.steps[i].deviation > walk.steps[i - 1].deviation + 1e-12) monotone = false;
    checks.add("walk_deviation_monotone", monotone,
               Json{{"final", walk.steps.empty() ? 0.0 : walk.steps.back().deviation}});
  }

  {
    const int tm = std::min(n, 5);
    const std::size_t draws = factorial(tm) / 4 + 2;
    const RankSet A = seeded_set(tm, cfg.seed + 101, draws);
    const RankSet B = seeded_set(tm, cfg.seed + 202, draws);
    const RankSet C = seeded_set(tm, cfg.seed + 303, draws);
    const std::uint64_t direct = triple_product_count(A, B, C);
    bool match = false;
    if (cfg.exact) {
      std::vector<Rat> fa(factorial(tm), Rat(0)), fb(factorial(tm), Rat(0));
      for (std::size_t r = A.bits.find_first(); r != boost::dynamic_bitset<>::npos;
           r = A.bits.find_next(r))
        fa[r] = Rat(1);
      for (std::size_t r = B.bits.find_first(); r != boost::dynamic_bitset<>::npos;
           r = B.bits.find_next(r))
        fb[r] = Rat(1);
      const std::vector<Rat> conv = convolve_exact<Rat>(tm, fa, fb);
      Rat sum = Rat(0);
      for (std::size_t r = C.bits.find_first(); r != boost::dynamic_bitset<>::npos;
           r = C.bits.find_next(r))
        sum += conv[r];
      match = Rat(sum * factorial(tm)) == Rat(direct);
    } else {
      const GroupFunction conv = convolve(indicator(A), indicator(B), cfg.workers);
      double sum = 0.0;
      for (std::size_t r = C.bits.find_first(); r != boost::dynamic_bitset<>::npos;
           r = C.bits.find_next(r))
        sum += conv.v[r];
      match = std::abs(sum * static_cast<double>(factorial(tm)) -
                       static_cast<double>(direct)) <= 1e-6;
    }
    checks.add("triple_count_convolution_identity", match,
               Json{{"n", tm}, {"count", direct}, {"exact", cfg.exact}});
  }

  Json body{{"config", Json{{"n", cfg.n},
                            {"seed", cfg.seed},
                            {"workers", cfg.workers},
                            {"exact", cfg.exact},
                            {"tol", tol}}}};
  return emit(cfg, "verify_all", std::move(body), checks, checks.summary());
}

}  // namespace cli_detail

// In-process entry point; `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args) {
  RunConfig cfg;
  if (const char* env = std::getenv("SNLAB_OUT"); env && *env) cfg.out_dir = env;

  CLI::App app{"exact harmonic analysis and product-set experiments on symmetric groups"};
  app.require_subcommand(1);
  auto* n_opt = app.add_option("--n", cfg.n, "ground set size")->check(CLI::Range(1, 10));
  app.add_option("--seed", cfg.seed, "seed for generated inputs");
  app.add_option("--workers", cfg.workers, "worker threads (0 = serial)");
  app.add_flag("--exact", cfg.exact, "use exact rational arithmetic where supported");
  app.add_option("--tol", cfg.tol, "float comparison tolerance");
  app.add_option("--out", cfg.out_dir, "report output directory (default $SNLAB_OUT or .)");

  auto* chartable = app.add_subcommand("chartable", "character table identity checks");
  chartable->fallthrough();

  std::string dec_path;
  auto* dec = app.add_subcommand("decompose", "isotypic decomposition of a function");
  dec->fallthrough();
  dec->add_option("--f", dec_path, "function file (CSV); seeded random when omitted");

  std::string spectra_family = "kneser";
  int spectra_k = 2;
  auto* spectra = app.add_subcommand("spectra", "eigenvalues of set-pair operators");
  spectra->fallthrough();
  spectra->add_option("--family", spectra_family, "operator family")
      ->check(CLI::IsMember({"kneser", "disjointness"}));
  spectra->add_option("--k", spectra_k, "subset size")->required();

  auto* global = app.add_subcommand("global", "restriction-growth audits");
  global->require_subcommand(1);
  global->fallthrough();
  std::string audit_path;
  double audit_r = 2.0;
  int audit_depth = 1;
  bool audit_biglobal = false;
  auto* audit = global->add_subcommand("audit", "check every restriction against the budget");
  audit->fallthrough();
  audit->add_option("--set", audit_path, "permutation set file")->required();
  audit->add_option("--r", audit_r, "growth budget per pin");
  audit->add_option("--depth", audit_depth, "restriction depth");
  audit->add_flag("--biglobal", audit_biglobal, "also audit L1 growth");
  std::string find_path;
  double find_r = 2.0;
  auto* find = global->add_subcommand("find", "descend to a dense restriction");
  find->fallthrough();
  find->add_option("--set", find_path, "permutation set file")->required();
  find->add_option("--r", find_r, "density growth threshold");

  auto* coupling = app.add_subcommand("coupling", "box coupling agreement checks");
  coupling->fallthrough();

  auto* exp = app.add_subcommand("exp", "product-set experiments");
  exp->require_subcommand(1);
  exp->fallthrough();
  std::string diam_path, diam_ambient = "sn";
  bool diam_directed = false;
  auto* diam = exp->add_subcommand("diameter", "covering number of a generating set");
  diam->fallthrough();
  diam->add_option("--set", diam_path, "permutation set file")->required();
  diam->add_option("--ambient", diam_ambient, "ambient group")
      ->check(CLI::IsMember({"sn", "an"}));
  diam->add_flag("--directed", diam_directed, "skip the symmetry requirement");
  int band_ell = 3;
  bool band_full = false;
  auto* band = exp->add_subcommand("band", "half-window overlap family");
  band->fallthrough();
  band->add_option("--ell", band_ell, "window overlap");
  band->add_flag("--full", band_full, "include walk statistics");
  std::string mix_path, mix_mode = "level0";
  int mix_steps = 5;
  auto* mixing = exp->add_subcommand("mixing", "convolution walk deviation profile");
  mixing->fallthrough();
  mixing->add_option("--f", mix_path, "density file (CSV); seeded random when omitted");
  mixing->add_option("--steps", mix_steps, "walk length")->check(CLI::Range(1, 16));
  mixing->add_option("--mode", mix_mode, "projection removed before measuring deviation")
      ->check(CLI::IsMember({"trivial", "level0"}));
  std::string roth_path;
  auto* roth = exp->add_subcommand("roth", "three-term progression search");
  roth->fallthrough();
  roth->add_option("--set", roth_path, "permutation set file")->required();

  auto* verify = app.add_subcommand("verify-all", "cross-module identity sweep");
  verify->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  cfg.n_given = n_opt->count() > 0;

  using namespace cli_detail;
  try {
    if (*chartable) return cmd_chartable(cfg);
    if (*dec) return cmd_decompose(cfg, dec_path);
    if (*spectra) return cmd_spectra(cfg, spectra_family, spectra_k);
    if (*audit) return cmd_global_audit(cfg, audit_path, audit_r, audit_depth, audit_biglobal);
    if (*find) return cmd_global_find(cfg, find_path, find_r);
    if (*coupling) return cmd_coupling(cfg);
    if (*diam) return cmd_exp_diameter(cfg, diam_path, diam_ambient, diam_directed);
    if (*band) return cmd_exp_band(cfg, band_ell, band_full);
    if (*mixing) return cmd_exp_mixing(cfg, mix_path, mix_steps, mix_mode);
    if (*roth) return cmd_exp_roth(cfg, roth_path);
    if (*verify) return cmd_verify_all(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace snlab
