#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace snlab {

using BigInt = boost::multiprecision::cpp_int;
// Exact rational scalar used by every exact path (coupling tables, class
// measures, closed-form counts). Arbitrary precision, always normalized.
using Rat = boost::multiprecision::cpp_rational;

inline Rat rat(long long p, long long q = 1) { return Rat(BigInt(p), BigInt(q)); }

inline double rat_double(const Rat& r) { return r.convert_to<double>(); }

// Canonical text form "p/q" (reduced, q > 0), integers rendered as "p".
inline std::string rat_str(const Rat& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline Rat rat_pow(const Rat& base, int e) {
  Rat acc(1);
  Rat b = base;
  int k = e;
  if (k < 0) {
    b = Rat(1) / b;
    k = -k;
  }
  while (k > 0) {
    if (k & 1) acc *= b;
    b *= b;
    k >>= 1;
  }
  return acc;
}

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

}  // namespace snlab
