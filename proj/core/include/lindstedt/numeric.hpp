#pragma once

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>

namespace lindstedt {

using Rational = mpq_class;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.get_d(); }

// A finite double is a dyadic rational, so this conversion loses nothing.
inline Rational exact(double x) {
  Rational r(x);
  r.canonicalize();
  return r;
}

template <class T>
inline T from_double(double x) {
  if constexpr (is_exact_v<T>) {
    return exact(x);
  } else {
    return x;
  }
}

inline double abs_of(double x) { return std::fabs(x); }
inline Rational abs_of(const Rational& x) { return abs(x); }

template <class T>
inline bool is_zero(const T& x) {
  if constexpr (is_exact_v<T>) {
    return sgn(x) == 0;
  } else {
    return x == 0.0;
  }
}

// Integer power with integer base, returned in T. Negative exponents give 1/b^|e|.
template <class T>
inline T int_pow(long base, int e) {
  T r = T(1);
  T b = T(base);
  int k = e < 0 ? -e : e;
  for (int i = 0; i < k; ++i) r *= b;
  if (e < 0) r = T(1) / r;
  return r;
}

// p^x for real x. Exact mode requires an integer exponent.
template <class T>
T real_pow(long p, double x);

template <>
inline double real_pow<double>(long p, double x) {
  return std::pow(static_cast<double>(p), x);
}

bool is_integral(double x);

template <>
Rational real_pow<Rational>(long p, double x);

std::string to_string(const Rational& x);
inline std::string to_string(double x) { return std::to_string(x); }

// Lattice vector in Z^D, D <= kMaxDim. Unused trailing components stay zero.
inline constexpr int kMaxDim = 4;

struct IVec {
  std::array<int, kMaxDim> c{};

  int& operator[](int i) { return c[i]; }
  int operator[](int i) const { return c[i]; }

  friend IVec operator+(const IVec& a, const IVec& b) {
    IVec r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
  }
  friend IVec operator-(const IVec& a, const IVec& b) {
    IVec r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
  }
  friend bool operator==(const IVec&, const IVec&) = default;
  friend auto operator<=>(const IVec&, const IVec&) = default;
};

inline long dot(const IVec& a, const IVec& b) {
  long s = 0;
  for (int i = 0; i < kMaxDim; ++i) s += static_cast<long>(a.c[i]) * b.c[i];
  return s;
}
inline long norm2(const IVec& a) { return dot(a, a); }
inline double dist(const IVec& a, const IVec& b) {
  return std::sqrt(static_cast<double>(norm2(a - b)));
}
inline long l1(const IVec& a) {
  long s = 0;
  for (int v : a.c) s += v < 0 ? -v : v;
  return s;
}

IVec make_ivec(std::initializer_list<int> xs);
std::string to_string(const IVec& v, int D);

struct IVecHash {
  std::size_t operator()(const IVec& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int x : v.c) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Time-space Fourier index (n, m).
struct Mode {
  long n = 0;
  IVec m;
  friend bool operator==(const Mode&, const Mode&) = default;
  friend auto operator<=>(const Mode&, const Mode&) = default;
};

struct ModeHash {
  std::size_t operator()(const Mode& k) const noexcept {
    return IVecHash{}(k.m) * 31u + std::hash<long>{}(k.n);
  }
};

}  // namespace lindstedt
