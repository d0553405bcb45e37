#include "waveformer/params.hpp"

#include <algorithm>

#include "waveformer/error.hpp"

namespace waveformer {

template <typename T>
Tensor<T> ParamStore<T>::add(std::string name, Shape shape, std::vector<T> values) {
  if (contains(name)) fail(ErrorKind::config, "duplicate parameter name '" + name + "'");
  auto t = Tensor<T>::from(std::move(shape), std::move(values), true);
  entries_.push_back({std::move(name), t});
  return t;
}

template <typename T>
Tensor<T> ParamStore<T>::zeros(std::string name, Shape shape) {
  return constant(std::move(name), std::move(shape), T(0));
}

template <typename T>
Tensor<T> ParamStore<T>::constant(std::string name, Shape shape, T value) {
  std::vector<T> v(shape_numel(shape), value);
  return add(std::move(name), std::move(shape), std::move(v));
}

template <typename T>
Tensor<T> ParamStore<T>::uniform(std::string name, Shape shape, T bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound),
                                              static_cast<double>(bound));
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return add(std::move(name), std::move(shape), std::move(v));
}

template <typename T>
Tensor<T> ParamStore<T>::normal(std::string name, Shape shape, T stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, static_cast<double>(stddev));
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return add(std::move(name), std::move(shape), std::move(v));
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedParam<T>& p) { return p.name == name; });
}

template <typename T>
Tensor<T> ParamStore<T>::get(std::string_view name) const {
  for (const auto& p : entries_) {
    if (p.name == name) return p.tensor;
  }
  fail(ErrorKind::not_found, "no parameter named '" + std::string(name) + "'");
}

template <typename T>
std::size_t ParamStore<T>::total_elements() const noexcept {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.tensor.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : entries_) p.tensor.zero_grad();
}

template <typename T>
std::vector<std::vector<T>> ParamStore<T>::snapshot() const {
  std::vector<std::vector<T>> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

template <typename T>
void ParamStore<T>::restore(const std::vector<std::vector<T>>& values) {
  if (values.size() != entries_.size()) {
    fail(ErrorKind::compatibility, "parameter snapshot has " + std::to_string(values.size()) +
                                       " tensors, model has " + std::to_string(entries_.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto dst = entries_[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) {
      fail(ErrorKind::compatibility, "parameter '" + entries_[i].name + "' size mismatch");
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace waveformer
