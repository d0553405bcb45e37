#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace waveformer {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

namespace detail {

// One value in the computation graph. Op results keep references to their
// parents and a rule that pushes this node's gradient into them.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  bool tape_released = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
  bool is_leaf() const noexcept { return !backward_fn; }
};

}  // namespace detail

// Tape recording is on by default. While a guard is alive on a thread, ops
// on that thread produce constants.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

// Dense row-major tensor with reverse-mode differentiation. Copies share the
// underlying node, so a Tensor behaves like a handle.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodeT = detail::Node<T>;
  using BackwardFn = std::function<void(NodeT&)>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  // Result of a differentiable op. The tape edge is recorded only when grad
  // mode is on and at least one parent requires grad.
  static Tensor make_result(Shape shape, std::vector<T> data, const std::vector<Tensor>& parents,
                            BackwardFn backward_fn);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node().data.size(); }

  std::span<const T> data() const { return node().data; }
  std::span<T> mutable_data() { return node().data; }
  T item() const;
  T at(std::size_t flat_index) const;

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool flag);

  bool has_grad() const { return !node().grad.empty(); }
  std::span<const T> grad() const { return node().grad; }
  std::span<T> mutable_grad() { return node().ensure_grad(); }
  void zero_grad();

  bool has_tape() const { return defined() && !node().is_leaf(); }

  // Same values, no graph connection, no grad requirement.
  Tensor detach() const;

  // Reverse-mode sweep from this scalar. Gradients accumulate into every
  // requires-grad tensor reachable from it. The tape is released afterwards
  // unless retain_graph is set.
  void backward(bool retain_graph = false) const;

  NodeT& node() const;
  const std::shared_ptr<NodeT>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

  std::shared_ptr<NodeT> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace waveformer
