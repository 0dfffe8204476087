#include "lindstedt/numeric.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

#include "lindstedt/errors.hpp"
#include "lindstedt/matrix.hpp"

namespace lindstedt {

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

template <>
Rational real_pow<Rational>(long p, double x) {
  if (!is_integral(x))
    throw ConfigError("arithmetic", "exact mode needs an integer exponent, got " + std::to_string(x));
  return int_pow<Rational>(p, static_cast<int>(x));
}

std::string to_string(const Rational& x) { return x.get_str(); }

IVec make_ivec(std::initializer_list<int> xs) {
  IVec v;
  int i = 0;
  for (int x : xs) v.c[i++] = x;
  return v;
}

std::string to_string(const IVec& v, int D) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < D; ++i) os << (i ? "," : "") << v.c[i];
  os << ')';
  return os.str();
}

std::vector<double> symmetric_eigenvalues(const Matrix<double>& a) {
  const auto n = static_cast<Eigen::Index>(a.rows());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> ev(n);
  for (Eigen::Index i = 0; i < n; ++i) ev[i] = es.eigenvalues()(i);
  return ev;
}

}  // namespace lindstedt
