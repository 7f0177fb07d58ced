// Copyright 2026 The kpn-burst Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KPN_TENSOR_HPP_
#define KPN_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpn {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Raised for any operand whose extents do not satisfy an op's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// One vertex of the gradient tape. Leaves have no backprop closure; interior
// nodes hold their inputs alive and know how to push their grad into them.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array with an optional reverse-mode tape.
///
/// A Tensor is a cheap handle; copies share the same node. Constants never
/// receive gradient. Parameters are leaves that accumulate gradient across
/// backward() calls until zero_grad() is invoked.
template <typename T>
class Tensor {
 public:
  using Node = detail::Node<T>;
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<T> values);
  static Tensor constant(Shape shape, T fill);
  static Tensor parameter(Shape shape, std::vector<T> values);
  static Tensor scalar(T value) { return constant(Shape{1}, value); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return node_->value.size(); }

  std::span<const T> values() const { return node_->value; }
  // Writable view for leaves (optimizer updates, test perturbations).
  std::span<T> mutable_values();
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }

  T item() const;
  void zero_grad();

  /// Backpropagates d(this)/d(leaf) into every reachable parameter.
  void backward() const;

  /// Constant copy of the current values, detached from any tape.
  Tensor detached() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an interior tape node. When no input requires gradient the result
/// is a constant and the closure is dropped.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(detail::Node<T>&)> backprop);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace kpn

#endif  // KPN_TENSOR_HPP_
