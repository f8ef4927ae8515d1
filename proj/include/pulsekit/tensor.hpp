#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pulsekit/error.hpp"

namespace pulsekit::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major n-dimensional array. Value semantics: copies copy data.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_dims();
  }
  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }
  const T& at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape of equal element count.
  BasicTensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return BasicTensor(std::move(shape), data_);
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor& other) const = default;

 private:
  void check_dims() const {
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (shape_[i] == 0) {
        throw ShapeError("dimension " + std::to_string(i) + " of shape " + shape_str(shape_) +
                         " is zero");
      }
    }
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size()) throw ShapeError("index rank mismatch");
    std::size_t off = 0;
    std::size_t d = 0;
    for (std::size_t i : idx) {
      if (i >= shape_[d]) throw ShapeError("index out of range in dim " + std::to_string(d));
      off = off * shape_[d] + i;
      ++d;
    }
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Graph node: a value plus an optional gradient buffer.
template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool requires_grad = false;
};

/// Shared handle to a graph node. Parameters are long-lived leaves;
/// intermediate results are created by ops and die with the tape.
template <typename T>
class BasicVar {
 public:
  BasicVar() : node_(std::make_shared<Node<T>>()) {}
  explicit BasicVar(BasicTensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  const BasicTensor<T>& value() const { return node_->value; }
  BasicTensor<T>& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const BasicTensor<T>& grad() const { return node_->grad; }

  /// Gradient buffer, zero-allocated on first use.
  BasicTensor<T>& grad_buffer() {
    if (node_->grad.empty()) node_->grad = BasicTensor<T>(node_->value.shape());
    return node_->grad;
  }
  void zero_grad() { node_->grad = BasicTensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  bool same_node(const BasicVar& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Var = BasicVar<float>;
using VarD = BasicVar<double>;

/// Ordered record of differentiable ops. Each recorded closure propagates its
/// output gradient into its inputs; backward replays them in reverse.
template <typename T>
class BasicTape {
 public:
  explicit BasicTape(bool recording = true) : recording_(recording) {}
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return ops_.size(); }

  /// True when an op over these inputs must be recorded.
  bool tracks(std::initializer_list<const BasicVar<T>*> inputs) const {
    if (!recording_) return false;
    for (const auto* v : inputs) {
      if (v->requires_grad()) return true;
    }
    return false;
  }

  void record(std::function<void()> backward_fn) {
    if (consumed_) throw std::logic_error("tape already consumed by backward()");
    ops_.push_back(std::move(backward_fn));
  }

  /// Seeds d(root)/d(root) = 1 for a scalar root and replays the tape.
  void backward(BasicVar<T>& root) {
    if (consumed_) throw std::logic_error("backward() called twice on the same tape");
    if (root.value().size() != 1) throw ShapeError("backward root must be a scalar");
    consumed_ = true;
    if (!root.requires_grad()) return;
    root.grad_buffer()[0] += T{1};
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    ops_.clear();
  }

  bool consumed() const { return consumed_; }

 private:
  bool recording_;
  bool consumed_ = false;
  std::vector<std::function<void()>> ops_;
};

using Tape = BasicTape<float>;
using TapeD = BasicTape<double>;

}  // namespace pulsekit::nn
