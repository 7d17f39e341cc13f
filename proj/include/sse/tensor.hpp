#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sse/errors.hpp"

namespace sse {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient is written
  bool requires_grad = false;
  bool leaf = true;
};

// Shared handle to a dense row-major array. Copies alias the same storage;
// use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor vector(std::vector<T> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> values,
                       bool requires_grad = false);

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t rank() const { return s_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return s_->shape.at(axis); }
  std::size_t numel() const { return s_->data.size(); }

  std::span<T> data() { return s_->data; }
  std::span<const T> data() const { return s_->data; }
  T& operator[](std::size_t i) { return s_->data[i]; }
  const T& operator[](std::size_t i) const { return s_->data[i]; }
  T& at(std::size_t r, std::size_t c) { return s_->data[r * s_->shape[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return s_->data[r * s_->shape[1] + c]; }
  T item() const;

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool on) { s_->requires_grad = on; }
  bool is_leaf() const { return s_->leaf; }

  bool has_grad() const { return !s_->grad.empty(); }
  // Allocates a zero gradient on first access.
  std::span<T> grad();
  std::span<const T> grad() const { return s_->grad; }
  void zero_grad();

  Tensor clone() const;
  // Throws NumericError naming `what` if any value is NaN or infinite.
  void validate_finite(const std::string& what) const;

  TensorStorage<T>* storage() const { return s_.get(); }
  const std::shared_ptr<TensorStorage<T>>& shared() const { return s_; }

 private:
  std::shared_ptr<TensorStorage<T>> s_;
};

// Ordered record of executed operations. Ops append a backward closure when a
// tape is active on the calling thread and one of their inputs needs a
// gradient. Gradients of intermediate tensors live on the tensors; gradients
// of leaves (parameters) are buffered here until flush_leaf_grads() adds them
// into the leaves, which lets independent tapes run on separate threads
// against shared parameters.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&)>;

  void record(BackwardFn fn) { nodes_.push_back(std::move(fn)); }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer for t, allocated zero-filled on first use.
  std::span<T> grad_of(const Tensor<T>& t);
  // Gradient that reached a non-leaf output, or an empty span if none did.
  std::span<const T> upstream(const Tensor<T>& t) const { return t.storage()->grad; }
  // Row-sparse accumulation into a leaf matrix (embedding gathers).
  void add_row_grad(const Tensor<T>& table, std::size_t row, std::span<const T> g);

  // Seeds d(loss) = seed and runs the recorded closures newest first. The
  // recorded graph is released afterwards. Leaf gradients stay buffered unless
  // flush is set.
  void backward(const Tensor<T>& loss, T seed = T(1), bool flush = true);
  void flush_leaf_grads();
  void clear();

 private:
  std::vector<BackwardFn> nodes_;
  std::unordered_map<TensorStorage<T>*, std::pair<std::shared_ptr<TensorStorage<T>>, std::vector<T>>>
      dense_;
  std::unordered_map<TensorStorage<T>*,
                     std::pair<std::shared_ptr<TensorStorage<T>>, std::map<std::size_t, std::vector<T>>>>
      rows_;
  std::vector<TensorStorage<T>*> order_;  // first-touch order, for a fixed flush order
};

template <typename T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

// Makes `tape` the recording target on this thread for the scope's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : prev_(active_tape<T>()) { active_tape<T>() = &tape; }
  ~TapeScope() { active_tape<T>() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* prev_;
};

// Suspends recording (evaluation, frozen encoders).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : prev_(active_tape<T>()) { active_tape<T>() = nullptr; }
  ~NoGradScope() { active_tape<T>() = prev_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* prev_;
};

template <typename T>
using NamedTensors = std::vector<std::pair<std::string, Tensor<T>>>;

}  // namespace sse
