#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "snlab/permcore.hpp"

namespace snlab {

// Hook length formula; exact for n <= 20 (the hook product divides n!).
inline long long hook_dimension(const Partition& lambda) {
  int n = lambda.sum();
  if (n > 20) throw std::invalid_argument("hook_dimension: capped at n <= 20");
  if (n == 0) return 1;
  Partition conj = lambda.conjugate();
  std::uint64_t hooks = 1;
  for (int i = 0; i < lambda.length(); ++i)
    for (int j = 0; j < lambda.parts[static_cast<std::size_t>(i)]; ++j) {
      int arm = lambda.parts[static_cast<std::size_t>(i)] - j - 1;
      int leg = conj.parts[static_cast<std::size_t>(j)] - i - 1;
      hooks *= static_cast<std::uint64_t>(arm + leg + 1);
    }
  return static_cast<long long>(factorial(n) / hooks);
}

namespace detail {

// Border-strip recursion on beta-numbers: a strip of size t is a move
// b -> b - t landing outside the set; its height parity is the number of
// beta values jumped over.
inline long long mn_rec(const std::vector<int>& lambda, const std::vector<int>& mu, std::size_t mi,
                        std::map<std::pair<std::vector<int>, std::vector<int>>, long long>& memo) {
  if (mi == mu.size()) return 1;  // sums matched, lambda is empty here
  std::vector<int> mu_rest(mu.begin() + static_cast<std::ptrdiff_t>(mi), mu.end());
  auto key = std::make_pair(lambda, mu_rest);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  int L = static_cast<int>(lambda.size());
  std::vector<int> beta(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) beta[static_cast<std::size_t>(j)] = lambda[static_cast<std::size_t>(j)] + (L - 1 - j);
  int t = mu[mi];
  long long total = 0;
  for (int j = 0; j < L; ++j) {
    int b = beta[static_cast<std::size_t>(j)];
    int target = b - t;
    if (target < 0) continue;
    bool occupied = false;
    int jumped = 0;
    for (int k = 0; k < L; ++k) {
      int v = beta[static_cast<std::size_t>(k)];
      if (v == target) occupied = true;
      if (v > target && v < b) ++jumped;
    }
    if (occupied) continue;
    std::vector<int> nbeta = beta;
    nbeta[static_cast<std::size_t>(j)] = target;
    std::sort(nbeta.begin(), nbeta.end(), std::greater<int>());
    std::vector<int> nlambda;
    for (int k = 0; k < L; ++k) {
      int part = nbeta[static_cast<std::size_t>(k)] - (L - 1 - k);
      if (part > 0) nlambda.push_back(part);
    }
    long long sub = mn_rec(nlambda, mu, mi + 1, memo);
    total += (jumped % 2 == 0) ? sub : -sub;
  }
  memo[key] = total;
  return total;
}

}  // namespace detail

// chi_lambda evaluated at the class of cycle type mu; exact integer.
inline long long mn_character(const Partition& lambda, const Partition& mu) {
  if (lambda.sum() != mu.sum()) throw std::invalid_argument("mn_character: size mismatch");
  static std::mutex mtx;
  static std::map<std::pair<std::vector<int>, std::vector<int>>, long long> memo;
  std::lock_guard<std::mutex> lock(mtx);
  return detail::mn_rec(lambda.parts, mu.parts, 0, memo);
}

struct CharacterTable {
  int n = 0;
  std::vector<Partition> partitions;            // row and column labels, first part descending
  std::vector<std::vector<long long>> chi;      // chi[row][col]
  std::vector<long long> dims;                  // chi evaluated at the identity class
  std::vector<std::uint64_t> class_sizes;       // n!/z_mu per column
  std::vector<std::uint64_t> centralizers;      // z_mu per column
};

inline const CharacterTable& character_table(int n) {
  if (n < 1 || n > 10) throw std::invalid_argument("character_table: capped at n <= 10");
  static std::mutex mtx;
  static std::array<std::unique_ptr<CharacterTable>, 11> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[static_cast<std::size_t>(n)];
  if (!slot) {
    auto T = std::make_unique<CharacterTable>();
    T->n = n;
    T->partitions = partitions_of(n);
    std::size_t k = T->partitions.size();
    T->chi.assign(k, std::vector<long long>(k, 0));
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c) T->chi[r][c] = mn_character(T->partitions[r], T->partitions[c]);
    for (std::size_t c = 0; c < k; ++c) {
      T->centralizers.push_back(centralizer_order(T->partitions[c]));
      T->class_sizes.push_back(factorial(n) / T->centralizers.back());
    }
    for (std::size_t r = 0; r < k; ++r) T->dims.push_back(T->chi[r][k - 1]);  // identity class is (1^n)
    slot = std::move(T);
  }
  return *slot;
}

// Exact structural checks: sum of squared dimensions, row orthogonality
// (weighted by class sizes), column orthogonality (centralizer orders),
// and agreement of recursion dimensions with the hook formula.
inline bool verify_character_table(const CharacterTable& T) {
  std::size_t k = T.partitions.size();
  __int128 dd = 0;
  for (std::size_t r = 0; r < k; ++r) {
    if (T.dims[r] <= 0) return false;
    if (T.dims[r] != hook_dimension(T.partitions[r])) return false;
    dd += static_cast<__int128>(T.dims[r]) * T.dims[r];
  }
  if (dd != static_cast<__int128>(factorial(T.n))) return false;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t s = r; s < k; ++s) {
      __int128 acc = 0;
      for (std::size_t c = 0; c < k; ++c)
        acc += static_cast<__int128>(T.class_sizes[c]) * T.chi[r][c] * T.chi[s][c];
      __int128 want = (r == s) ? static_cast<__int128>(factorial(T.n)) : 0;
      if (acc != want) return false;
    }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = c; d < k; ++d) {
      __int128 acc = 0;
      for (std::size_t r = 0; r < k; ++r) acc += static_cast<__int128>(T.chi[r][c]) * T.chi[r][d];
      __int128 want = (c == d) ? static_cast<__int128>(T.centralizers[c]) : 0;
      if (acc != want) return false;
    }
  return true;
}

// Conjugating a row twists by the sign character: chi_{lambda'} = sgn * chi_lambda.
inline bool verify_conjugate_twist(const CharacterTable& T) {
  std::map<Partition, std::size_t> index;
  for (std::size_t r = 0; r < T.partitions.size(); ++r) index[T.partitions[r]] = r;
  for (std::size_t r = 0; r < T.partitions.size(); ++r) {
    std::size_t rc = index.at(T.partitions[r].conjugate());
    for (std::size_t c = 0; c < T.partitions.size(); ++c)
      if (T.chi[rc][c] != partition_sign(T.partitions[c]) * T.chi[r][c]) return false;
  }
  return true;
}

}  // namespace snlab
