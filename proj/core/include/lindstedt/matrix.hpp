#pragma once

#include <cassert>
#include <cstddef>
#include <optional>
#include <utility>
#include <limits>
#include <vector>

#include "lindstedt/numeric.hpp"

namespace lindstedt {

// Small dense row-major matrix. Cluster blocks are a few entries wide, so no
// attempt is made at cache blocking; T is double or Rational.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : r_(r), c_(c), a_(r * c, T(0)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }
  static Matrix diagonal(const std::vector<T>& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  bool empty() const { return r_ == 0 || c_ == 0; }

  T& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }

  Matrix transpose() const {
    Matrix t(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool is_zero() const {
    for (const T& x : a_)
      if (!lindstedt::is_zero(x)) return false;
    return true;
  }

  bool is_symmetric(double tol = 0.0) const {
    if (r_ != c_) return false;
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = i + 1; j < c_; ++j) {
        if constexpr (is_exact_v<T>) {
          if ((*this)(i, j) != (*this)(j, i)) return false;
        } else {
          if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
        }
      }
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    assert(r_ == o.r_ && c_ == o.c_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    assert(r_ == o.r_ && c_ == o.c_);
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Matrix& operator*=(const T& s) {
    for (T& x : a_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
  friend Matrix operator*(const T& s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) {
    for (T& x : a.a_) x = -x;
    return a;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    assert(a.c_ == b.r_);
    Matrix r(a.r_, b.c_);
    for (std::size_t i = 0; i < a.r_; ++i)
      for (std::size_t k = 0; k < a.c_; ++k) {
        const T& aik = a(i, k);
        if (lindstedt::is_zero(aik)) continue;
        for (std::size_t j = 0; j < b.c_; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& v) {
    assert(a.c_ == v.size());
    std::vector<T> r(a.r_, T(0));
    for (std::size_t i = 0; i < a.r_; ++i)
      for (std::size_t j = 0; j < a.c_; ++j) r[i] += a(i, j) * v[j];
    return r;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.r_ == b.r_ && a.c_ == b.c_ && a.a_ == b.a_;
  }

  // Rows/columns picked by index lists.
  Matrix select(const std::vector<std::size_t>& ri, const std::vector<std::size_t>& ci) const {
    Matrix s(ri.size(), ci.size());
    for (std::size_t i = 0; i < ri.size(); ++i)
      for (std::size_t j = 0; j < ci.size(); ++j) s(i, j) = (*this)(ri[i], ci[j]);
    return s;
  }

  const std::vector<T>& data() const { return a_; }

 private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<T> a_;
};

template <class T>
Matrix<double> to_double(const Matrix<T>& m) {
  Matrix<double> d(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d(i, j) = to_double(m(i, j));
  return d;
}

inline Matrix<Rational> to_exact(const Matrix<double>& m) {
  Matrix<Rational> q(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) q(i, j) = exact(m(i, j));
  return q;
}

// Gauss-Jordan elimination. Exact for Rational; partial pivoting for double.
// Returns nullopt when a pivot vanishes (exactly, or below 1e-300 in floats).
template <class T>
std::optional<Matrix<T>> try_inverse(const Matrix<T>& a) {
  const std::size_t n = a.rows();
  assert(a.cols() == n);
  Matrix<T> w = a;
  Matrix<T> inv = Matrix<T>::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    if constexpr (is_exact_v<T>) {
      for (std::size_t r = col; r < n; ++r)
        if (sgn(w(r, col)) != 0) {
          piv = r;
          break;
        }
    } else {
      double best = 0.0;
      for (std::size_t r = col; r < n; ++r)
        if (std::fabs(w(r, col)) > best) {
          best = std::fabs(w(r, col));
          piv = r;
        }
      if (best < 1e-300) piv = n;
    }
    if (piv == n) return std::nullopt;
    if (piv != col)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(w(piv, j), w(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    const T p = w(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      w(col, j) /= p;
      inv(col, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = w(r, col);
      if (lindstedt::is_zero(f)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        w(r, j) -= f * w(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

template <class T>
T determinant(const Matrix<T>& a) {
  const std::size_t n = a.rows();
  Matrix<T> w = a;
  T det = T(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    if constexpr (is_exact_v<T>) {
      for (std::size_t r = col; r < n; ++r)
        if (sgn(w(r, col)) != 0) {
          piv = r;
          break;
        }
    } else {
      double best = 0.0;
      for (std::size_t r = col; r < n; ++r)
        if (std::fabs(w(r, col)) > best) {
          best = std::fabs(w(r, col));
          piv = r;
        }
      if (best == 0.0) piv = n;
    }
    if (piv == n) return T(0);
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(w(piv, j), w(col, j));
      det = -det;
    }
    det *= w(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const T f = w(r, col) / w(col, col);
      if (lindstedt::is_zero(f)) continue;
      for (std::size_t j = col; j < n; ++j) w(r, j) -= f * w(col, j);
    }
  }
  return det;
}

struct LogDeterminant {
  int sign = 0;  // 0 when singular
  double log10_abs = -std::numeric_limits<double>::infinity();
};

// Sign and log10 |det| by partial pivoting; no overflow for large blocks.
inline LogDeterminant log_determinant(const Matrix<double>& a) {
  const std::size_t n = a.rows();
  Matrix<double> w = a;
  LogDeterminant out;
  int sign = 1;
  double acc = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(w(r, col)) > std::fabs(w(piv, col))) piv = r;
    if (w(piv, col) == 0.0) return out;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(w(piv, j), w(col, j));
      sign = -sign;
    }
    if (w(col, col) < 0) sign = -sign;
    acc += std::log10(std::fabs(w(col, col)));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = w(r, col) / w(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) w(r, j) -= f * w(col, j);
    }
  }
  out.sign = sign;
  out.log10_abs = acc;
  return out;
}

// Symmetric eigenvalues in ascending order (double only).
std::vector<double> symmetric_eigenvalues(const Matrix<double>& a);

}  // namespace lindstedt
