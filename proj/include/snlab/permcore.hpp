#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace snlab {

inline constexpr int kMaxN = 12;    // permutation arithmetic cap
inline constexpr int kDenseN = 8;   // dense (full n!) enumeration cap

inline std::uint64_t factorial(int n) {
  static constexpr std::array<std::uint64_t, 21> f = {
      1ull,
      1ull,
      2ull,
      6ull,
      24ull,
      120ull,
      720ull,
      5040ull,
      40320ull,
      362880ull,
      3628800ull,
      39916800ull,
      479001600ull,
      6227020800ull,
      87178291200ull,
      1307674368000ull,
      20922789888000ull,
      355687428096000ull,
      6402373705728000ull,
      121645100408832000ull,
      2432902008176640000ull};
  if (n < 0 || n > 20) throw std::invalid_argument("factorial: n out of range");
  return f[static_cast<std::size_t>(n)];
}

// n * (n-1) * ... * (n-k+1)
inline std::uint64_t falling_factorial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) r *= static_cast<std::uint64_t>(n - i);
  return r;
}

inline std::uint64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// Permutation of {0,...,n-1}, stored as its image array: img[i] = p(i).
// Text I/O is 1-based; slots at index >= n stay zero so == is structural.
struct Perm {
  std::uint8_t n = 0;
  std::array<std::uint8_t, kMaxN> img{};

  static Perm identity(int n) {
    if (n < 1 || n > kMaxN) throw std::invalid_argument("Perm: n out of range");
    Perm p;
    p.n = static_cast<std::uint8_t>(n);
    for (int i = 0; i < n; ++i) p.img[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    return p;
  }
  int size() const { return n; }
  int operator()(int i) const { return img[static_cast<std::size_t>(i)]; }
  bool operator==(const Perm&) const = default;
  auto operator<=>(const Perm&) const = default;
};

inline Perm perm_from_images0(const std::vector<int>& images) {
  int n = static_cast<int>(images.size());
  if (n < 1 || n > kMaxN) throw std::invalid_argument("perm: size out of range");
  std::uint32_t seen = 0;
  Perm p;
  p.n = static_cast<std::uint8_t>(n);
  for (int i = 0; i < n; ++i) {
    int v = images[static_cast<std::size_t>(i)];
    if (v < 0 || v >= n) throw std::invalid_argument("perm: image out of range");
    if (seen & (1u << v)) throw std::invalid_argument("perm: repeated image");
    seen |= 1u << v;
    p.img[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  }
  return p;
}

// (a * b)(i) = a(b(i)): apply b first.
inline Perm compose(const Perm& a, const Perm& b) {
  if (a.n != b.n) throw std::invalid_argument("compose: size mismatch");
  Perm c;
  c.n = a.n;
  for (int i = 0; i < a.n; ++i) c.img[static_cast<std::size_t>(i)] = a.img[b.img[static_cast<std::size_t>(i)]];
  return c;
}

inline Perm inverse(const Perm& a) {
  Perm c;
  c.n = a.n;
  for (int i = 0; i < a.n; ++i) c.img[a.img[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
  return c;
}

// Lexicographic rank of the image array (Lehmer code, mixed radix).
inline std::uint32_t perm_rank(const Perm& p) {
  std::uint32_t r = 0, used = 0;
  for (int i = 0; i < p.n; ++i) {
    std::uint32_t v = p.img[static_cast<std::size_t>(i)];
    std::uint32_t smaller = static_cast<std::uint32_t>(std::popcount(used & ((1u << v) - 1u)));
    r = r * static_cast<std::uint32_t>(p.n - i) + (v - smaller);
    used |= 1u << v;
  }
  return r;
}

// Rank of (a * b) from raw image arrays; the convolution hot path.
inline std::uint32_t rank_compose(const std::uint8_t* a, const std::uint8_t* b, int n) {
  std::uint32_t r = 0, used = 0;
  for (int i = 0; i < n; ++i) {
    std::uint32_t v = a[b[i]];
    std::uint32_t smaller = static_cast<std::uint32_t>(std::popcount(used & ((1u << v) - 1u)));
    r = r * static_cast<std::uint32_t>(n - i) + (v - smaller);
    used |= 1u << v;
  }
  return r;
}

inline Perm perm_unrank(int n, std::uint64_t rank) {
  if (n < 1 || n > kMaxN) throw std::invalid_argument("perm_unrank: n out of range");
  if (rank >= factorial(n)) throw std::invalid_argument("perm_unrank: rank out of range");
  std::array<std::uint8_t, kMaxN> avail{};
  for (int i = 0; i < n; ++i) avail[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  Perm p;
  p.n = static_cast<std::uint8_t>(n);
  int m = n;
  for (int i = 0; i < n; ++i) {
    std::uint64_t f = factorial(m - 1);
    int c = static_cast<int>(rank / f);
    rank %= f;
    p.img[static_cast<std::size_t>(i)] = avail[static_cast<std::size_t>(c)];
    for (int j = c; j < m - 1; ++j) avail[static_cast<std::size_t>(j)] = avail[static_cast<std::size_t>(j + 1)];
    --m;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Partitions

struct Partition {
  std::vector<int> parts;  // nonincreasing, positive

  Partition() = default;
  explicit Partition(std::vector<int> p) : parts(std::move(p)) {
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      if (parts[i] < parts[i + 1]) throw std::invalid_argument("Partition: parts must be nonincreasing");
    for (int x : parts)
      if (x <= 0) throw std::invalid_argument("Partition: parts must be positive");
  }
  int sum() const { return std::accumulate(parts.begin(), parts.end(), 0); }
  int length() const { return static_cast<int>(parts.size()); }
  bool operator==(const Partition&) const = default;
  auto operator<=>(const Partition&) const = default;

  Partition conjugate() const {
    Partition c;
    if (parts.empty()) return c;
    for (int col = 0; col < parts[0]; ++col) {
      int cnt = 0;
      for (int p : parts)
        if (p > col) ++cnt;
      c.parts.push_back(cnt);
    }
    return c;
  }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(parts[i]);
    }
    return s + "]";
  }
};

// All partitions of n, first part descending: (n), (n-1,1), ..., (1^n).
inline std::vector<Partition> partitions_of(int n) {
  std::vector<Partition> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int rest, int maxp) -> void {
    if (rest == 0) {
      out.emplace_back();
      out.back().parts = cur;
      return;
    }
    for (int p = std::min(rest, maxp); p >= 1; --p) {
      cur.push_back(p);
      self(self, rest - p, p);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

// Centralizer order z_lambda = prod_i i^{m_i} m_i!
inline std::uint64_t centralizer_order(const Partition& lambda) {
  std::map<int, int> mult;
  for (int p : lambda.parts) ++mult[p];
  std::uint64_t z = 1;
  for (auto [i, m] : mult) {
    for (int k = 0; k < m; ++k) z *= static_cast<std::uint64_t>(i);
    z *= factorial(m);
  }
  return z;
}

inline Partition cycle_type(const Perm& p) {
  std::uint32_t seen = 0;
  std::vector<int> lens;
  for (int i = 0; i < p.n; ++i) {
    if (seen & (1u << i)) continue;
    int len = 0, j = i;
    do {
      seen |= 1u << j;
      j = p.img[static_cast<std::size_t>(j)];
      ++len;
    } while (j != i);
    lens.push_back(len);
  }
  std::sort(lens.begin(), lens.end(), std::greater<int>());
  Partition out;
  out.parts = std::move(lens);
  return out;
}

inline int num_cycles(const Perm& p) {
  std::uint32_t seen = 0;
  int c = 0;
  for (int i = 0; i < p.n; ++i) {
    if (seen & (1u << i)) continue;
    ++c;
    int j = i;
    do {
      seen |= 1u << j;
      j = p.img[static_cast<std::size_t>(j)];
    } while (j != i);
  }
  return c;
}

inline int perm_sign(const Perm& p) { return ((p.n - num_cycles(p)) % 2 == 0) ? 1 : -1; }

inline int partition_sign(const Partition& t) {
  return ((t.sum() - t.length()) % 2 == 0) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Ordered injective tuples over {0,...,n-1}

using Tuple = std::vector<int>;

inline std::uint64_t tuple_count(int n, int k) { return falling_factorial(n, k); }

inline Tuple apply_tuple(const Perm& s, const Tuple& t) {
  Tuple out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = s(t[i]);
  return out;
}

// Lexicographic rank among injective k-tuples on {0,...,n-1}.
inline std::uint64_t tuple_rank(int n, const Tuple& t) {
  int k = static_cast<int>(t.size());
  std::uint64_t r = 0;
  std::uint32_t used = 0;
  for (int i = 0; i < k; ++i) {
    int v = t[static_cast<std::size_t>(i)];
    if (v < 0 || v >= n) throw std::invalid_argument("tuple_rank: entry out of range");
    if (used & (1u << v)) throw std::invalid_argument("tuple_rank: repeated entry");
    std::uint32_t smaller = static_cast<std::uint32_t>(std::popcount(used & ((1u << v) - 1u)));
    r += (static_cast<std::uint64_t>(v) - smaller) * falling_factorial(n - 1 - i, k - 1 - i);
    used |= 1u << static_cast<std::uint32_t>(v);
  }
  return r;
}

inline Tuple tuple_unrank(int n, int k, std::uint64_t r) {
  if (r >= tuple_count(n, k)) throw std::invalid_argument("tuple_unrank: rank out of range");
  std::vector<int> avail(static_cast<std::size_t>(n));
  std::iota(avail.begin(), avail.end(), 0);
  Tuple t(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    std::uint64_t f = falling_factorial(n - 1 - i, k - 1 - i);
    int c = static_cast<int>(r / f);
    r %= f;
    t[static_cast<std::size_t>(i)] = avail[static_cast<std::size_t>(c)];
    avail.erase(avail.begin() + c);
  }
  return t;
}

inline std::vector<Tuple> enumerate_tuples(int n, int k) {
  std::uint64_t cnt = tuple_count(n, k);
  std::vector<Tuple> out;
  out.reserve(cnt);
  for (std::uint64_t r = 0; r < cnt; ++r) out.push_back(tuple_unrank(n, k, r));
  return out;
}

// ---------------------------------------------------------------------------
// Text forms. Images are 1-based ("3 1 2"); cycle form "(1 3 2)(4 5)" is
// accepted on input, fixed points omitted.

inline std::string perm_to_string(const Perm& p) {
  std::string s;
  for (int i = 0; i < p.n; ++i) {
    if (i) s += ' ';
    s += std::to_string(p(i) + 1);
  }
  return s;
}

inline Perm parse_perm(const std::string& text, int n) {
  std::string t;
  for (char c : text)
    if (c != ',') t += c;
  std::size_t first = t.find_first_not_of(" \t\r");
  if (first == std::string::npos) throw std::invalid_argument("empty permutation");
  if (t[first] == '(') {
    // product of cycles on 1-based points; points must not repeat
    Perm p = Perm::identity(n);
    std::uint32_t seen = 0;
    std::size_t i = first;
    while (i < t.size()) {
      while (i < t.size() && (t[i] == ' ' || t[i] == '\t' || t[i] == '\r')) ++i;
      if (i >= t.size()) break;
      if (t[i] != '(') throw std::invalid_argument("cycle form: expected '('");
      std::size_t close = t.find(')', i);
      if (close == std::string::npos) throw std::invalid_argument("cycle form: missing ')'");
      std::istringstream in(t.substr(i + 1, close - i - 1));
      std::vector<int> cyc;
      int v;
      while (in >> v) {
        if (v < 1 || v > n) throw std::invalid_argument("cycle form: point out of range");
        if (seen & (1u << (v - 1))) throw std::invalid_argument("cycle form: repeated point");
        seen |= 1u << (v - 1);
        cyc.push_back(v - 1);
      }
      if (!in.eof()) throw std::invalid_argument("cycle form: bad token");
      if (cyc.empty()) throw std::invalid_argument("cycle form: empty cycle");
      for (std::size_t j = 0; j < cyc.size(); ++j)
        p.img[static_cast<std::size_t>(cyc[j])] =
            static_cast<std::uint8_t>(cyc[(j + 1) % cyc.size()]);
      i = close + 1;
    }
    return p;
  }
  std::istringstream in(t);
  std::vector<int> images;
  int v;
  while (in >> v) images.push_back(v - 1);
  if (!in.eof()) throw std::invalid_argument("image form: bad token");
  if (static_cast<int>(images.size()) != n)
    throw std::invalid_argument("image form: expected " + std::to_string(n) + " entries, got " +
                                std::to_string(images.size()));
  return perm_from_images0(images);
}

// ---------------------------------------------------------------------------
// Dense group cache (n <= 8): flat image arrays in rank order, inverse ranks,
// conjugacy class labels aligned with partitions_of(n) order.

struct PermTable {
  int n = 0;
  std::uint32_t size = 0;
  std::vector<std::uint8_t> img;        // size * n
  std::vector<std::uint32_t> inv;       // rank of inverse
  std::vector<std::uint16_t> class_of;  // class index per rank
  std::vector<std::int8_t> sgn;
  std::vector<Partition> classes;  // = partitions_of(n)
  std::vector<std::uint32_t> class_size;

  const std::uint8_t* images(std::uint32_t r) const { return &img[static_cast<std::size_t>(r) * n]; }
  Perm get(std::uint32_t r) const {
    Perm p;
    p.n = static_cast<std::uint8_t>(n);
    const std::uint8_t* a = images(r);
    for (int i = 0; i < n; ++i) p.img[static_cast<std::size_t>(i)] = a[i];
    return p;
  }
};

inline const PermTable& perm_table(int n) {
  if (n < 1 || n > kDenseN) throw std::invalid_argument("perm_table: dense enumeration capped at n <= 8");
  static std::mutex mu;
  static std::array<std::unique_ptr<PermTable>, kDenseN + 1> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[static_cast<std::size_t>(n)];
  if (!slot) {
    auto T = std::make_unique<PermTable>();
    T->n = n;
    T->size = static_cast<std::uint32_t>(factorial(n));
    T->img.resize(static_cast<std::size_t>(T->size) * n);
    T->inv.resize(T->size);
    T->class_of.resize(T->size);
    T->sgn.resize(T->size);
    T->classes = partitions_of(n);
    T->class_size.assign(T->classes.size(), 0);
    std::map<Partition, std::uint16_t> index;
    for (std::size_t c = 0; c < T->classes.size(); ++c) index[T->classes[c]] = static_cast<std::uint16_t>(c);
    for (std::uint32_t r = 0; r < T->size; ++r) {
      Perm p = perm_unrank(n, r);
      for (int i = 0; i < n; ++i) T->img[static_cast<std::size_t>(r) * n + i] = p.img[static_cast<std::size_t>(i)];
      T->inv[r] = perm_rank(inverse(p));
      std::uint16_t c = index.at(cycle_type(p));
      T->class_of[r] = c;
      ++T->class_size[c];
      T->sgn[r] = static_cast<std::int8_t>(perm_sign(p));
    }
    slot = std::move(T);
  }
  return *slot;
}

}  // namespace snlab
