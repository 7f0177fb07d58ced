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

#include "kpn/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace kpn {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape, std::size_t values) {
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      throw ShapeError("tensor: extent of dimension " + std::to_string(i) +
                       " is zero in " + shape_string(shape));
    }
  }
  if (element_count(shape) != values) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " holds " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(values));
  }
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::constant(Shape shape, std::vector<T> values) {
  check_shape(shape, values.size());
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::constant(Shape shape, T fill) {
  std::vector<T> values(element_count(shape), fill);
  return constant(std::move(shape), std::move(values));
}

template <typename T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) +
                     " out of range for " + shape_string(node_->shape));
  }
  return node_->shape[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
  if (!node_->is_leaf) {
    throw std::logic_error("tensor: only leaf values may be mutated");
  }
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("tensor: item() on non-scalar " +
                     shape_string(node_->shape));
  }
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  if (!node_) throw std::logic_error("tensor: backward() on empty tensor");
  if (node_->value.size() != 1) {
    throw ShapeError("tensor: backward() needs a scalar loss, got " +
                     shape_string(node_->shape));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; reversed it is a valid propagation order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->is_leaf) node->grad.assign(node->value.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->is_leaf) continue;
    if (node->backprop) node->backprop(*node);
    if (node != node_.get()) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template <typename T>
Tensor<T> Tensor<T>::detached() const {
  return constant(node_->shape, node_->value);
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(detail::Node<T>&)> backprop) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  node->is_leaf = !any;
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backprop = std::move(backprop);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, std::vector<float>,
                                   std::vector<Tensor<float>>,
                                   std::function<void(detail::Node<float>&)>);
template Tensor<double> make_result(
    Shape, std::vector<double>, std::vector<Tensor<double>>,
    std::function<void(detail::Node<double>&)>);

}  // namespace kpn
