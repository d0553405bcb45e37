#include "waveformer/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "waveformer/error.hpp"

namespace waveformer {

namespace {
thread_local bool t_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() noexcept { return t_grad_enabled; }

std::size_t shape_numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  std::vector<T> data(shape_numel(shape), value);
  return from(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    fail(ErrorKind::dimension, "tensor shape " + shape_str(shape) + " holds " +
                                   std::to_string(shape_numel(shape)) + " elements, got " +
                                   std::to_string(data.size()));
  }
  auto node = std::make_shared<NodeT>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::make_result(Shape shape, std::vector<T> data,
                                 const std::vector<Tensor>& parents, BackwardFn backward_fn) {
  Tensor out = from(std::move(shape), std::move(data), false);
  if (!grad_enabled()) return out;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.defined() && p.requires_grad(); });
  if (!any) return out;
  auto& n = out.node();
  n.requires_grad = true;
  n.parents.reserve(parents.size());
  for (const auto& p : parents) n.parents.push_back(p.node_ptr());
  n.backward_fn = std::move(backward_fn);
  return out;
}

template <typename T>
typename Tensor<T>::NodeT& Tensor<T>::node() const {
  if (!node_) fail(ErrorKind::tape, "use of an undefined tensor");
  return *node_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return node().shape;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    fail(ErrorKind::dimension, "axis " + std::to_string(axis) + " out of range for shape " +
                                   shape_str(s));
  }
  return s[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    fail(ErrorKind::dimension, "item() needs a single element, shape is " + shape_str(shape()));
  }
  return node().data[0];
}

template <typename T>
T Tensor<T>::at(std::size_t flat_index) const {
  if (flat_index >= numel()) fail(ErrorKind::bounds, "flat index out of range");
  return node().data[flat_index];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (has_tape() && !flag) {
    fail(ErrorKind::tape, "cannot clear requires_grad on an op result; use detach()");
  }
  node().requires_grad = flag;
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node().data, false);
}

template <typename T>
void Tensor<T>::backward(bool retain_graph) const {
  auto& root = node();
  if (root.data.size() != 1) {
    fail(ErrorKind::dimension, "backward() needs a scalar loss, got shape " + shape_str(root.shape));
  }
  if (root.tape_released) {
    fail(ErrorKind::tape, "tape already released by an earlier backward(); rebuild the graph");
  }
  if (!root.requires_grad) {
    fail(ErrorKind::tape, "loss does not depend on any tensor requiring grad (no tape)");
  }

  // Iterative post-order DFS gives a topological order with each node once.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeT* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T(0));
  }
  root.ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (!n->is_leaf()) n->backward_fn(*n);
  }

  if (!retain_graph) {
    for (NodeT* n : order) {
      if (n->is_leaf()) continue;
      n->backward_fn = nullptr;
      n->parents.clear();
      n->tape_released = true;
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace waveformer
