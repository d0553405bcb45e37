#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "waveformer/ops.hpp"
#include "waveformer/tensor.hpp"

namespace waveformer {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

// Ordered registry of learnable tensors. Registration order is the
// checkpoint order.
template <typename T>
class ParamStore {
 public:
  Tensor<T> add(std::string name, Shape shape, std::vector<T> values);
  Tensor<T> zeros(std::string name, Shape shape);
  Tensor<T> constant(std::string name, Shape shape, T value);
  Tensor<T> uniform(std::string name, Shape shape, T bound, Rng& rng);
  Tensor<T> normal(std::string name, Shape shape, T stddev, Rng& rng);

  const std::vector<NamedParam<T>>& entries() const noexcept { return entries_; }
  std::vector<NamedParam<T>>& entries() noexcept { return entries_; }

  bool contains(std::string_view name) const noexcept;
  Tensor<T> get(std::string_view name) const;

  std::size_t total_elements() const noexcept;
  void zero_grad();

  // Deep copy of all parameter values, in registration order.
  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

 private:
  std::vector<NamedParam<T>> entries_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace waveformer
