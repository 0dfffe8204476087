#include "lindstedt/trees.hpp"

namespace lindstedt {

template <class T>
CountertermTable<T>::CountertermTable(Builder b, BlockPredicate omega, int D)
    : builder_(std::move(b)), omega_(std::move(omega)), D_(D) {
  if (!omega_) throw ConfigError("counterterms", "an index set predicate is required");
}

template <class T>
const ScaleSums<T>& CountertermTable<T>::sums(int k, long n, const ClusterRef& j) const {
  const CountertermKey key{k, n, j};
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
  }
  if (!builder_)
    throw MissingCounterterm("counterterms", "no entry for k=" + std::to_string(k) + " n=" + std::to_string(n) +
                                                 " p=" + std::to_string(j.p) + " j=" + std::to_string(j.j));
  ScaleSums<T> s = builder_(k, n, j);
  for (const auto& [h1, V] : s)
    if (!(V == V.transpose())) {
      if constexpr (is_exact_v<T>) {
        throw InvariantViolation("counterterms", "family sum V_" + std::to_string(h1) + " is not symmetric");
      } else if (!V.is_symmetric(1e-12)) {
        throw InvariantViolation("counterterms", "family sum V_" + std::to_string(h1) + " is not symmetric");
      }
    }
  std::lock_guard<std::mutex> lk(mu_);
  return table_.emplace(key, std::move(s)).first->second;
}

template <class T>
Matrix<T> CountertermTable<T>::L(int k, long n, const ClusterRef& j, int h, int d) const {
  Matrix<T> out(d, d);
  if (!omega_(n, j)) return out;
  for (const auto& [h1, V] : sums(k, n, j))
    if (h1 < h - 1) out -= V;
  return out;
}

template <class T>
Matrix<T> CountertermTable<T>::assembled(int k, long n, const ClusterRef& j, double x, double y,
                                         const CutoffSpec& cut, int d) const {
  Matrix<T> out(d, d);
  if (!omega_(n, j)) return out;
  const T cb = cut.chibar_as<T>(y, 1);
  for (const auto& [h1, V] : sums(k, n, j)) out -= (cb * cut.C_h_as<T>(x, h1)) * V;
  return out;
}

template <class T>
void CountertermTable<T>::insert(const CountertermKey& key, ScaleSums<T> s) {
  std::lock_guard<std::mutex> lk(mu_);
  table_[key] = std::move(s);
}

template <class T>
std::vector<CountertermKey> CountertermTable<T>::keys() const {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<CountertermKey> out;
  for (const auto& kv : table_) out.push_back(kv.first);
  return out;
}

template <class T>
void CountertermTable<T>::inject_asymmetry(const CountertermKey& key, const T& delta) {
  std::lock_guard<std::mutex> lk(mu_);
  auto& s = table_[key];
  const int d = D_ > 0 ? static_cast<int>(s.empty() ? 2 : s.begin()->second.rows()) : 2;
  if (s.empty()) s.emplace(-1, Matrix<T>(d, d));
  for (auto& [h1, V] : s)
    if (V.rows() > 1) V(0, 1) += delta;
}

template class CountertermTable<double>;
template class CountertermTable<Rational>;

}  // namespace lindstedt
