#include "sse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sse {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor shape " + shape_str(shape) + " has a zero extent");
  }
}
}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) : s_(std::make_shared<TensorStorage<T>>()) {
  check_shape(shape);
  s_->data.assign(shape_numel(shape), T(0));
  s_->shape = std::move(shape);
  s_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : s_(std::make_shared<TensorStorage<T>>()) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  s_->shape = std::move(shape);
  s_->data = std::move(values);
  s_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::vector(std::vector<T> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::vector<T> values,
                            bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return s_->data[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), T(0));
  return s_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(s_->grad.begin(), s_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(s_->shape, s_->data, s_->requires_grad);
  out.s_->grad = s_->grad;
  return out;
}

template <typename T>
void Tensor<T>::validate_finite(const std::string& what) const {
  for (std::size_t i = 0; i < s_->data.size(); ++i) {
    if (!std::isfinite(s_->data[i])) {
      throw NumericError(what + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template <typename T>
std::span<T> Tape<T>::grad_of(const Tensor<T>& t) {
  TensorStorage<T>* s = t.storage();
  if (!s->leaf) {
    if (s->grad.empty()) s->grad.assign(s->data.size(), T(0));
    return s->grad;
  }
  auto it = dense_.find(s);
  if (it == dense_.end()) {
    it = dense_.emplace(s, std::make_pair(t.shared(), std::vector<T>(s->data.size(), T(0)))).first;
    order_.push_back(s);
  }
  return it->second.second;
}

template <typename T>
void Tape<T>::add_row_grad(const Tensor<T>& table, std::size_t row, std::span<const T> g) {
  TensorStorage<T>* s = table.storage();
  const std::size_t width = s->shape.at(1);
  if (!s->leaf) {
    auto dst = grad_of(table);
    for (std::size_t j = 0; j < width; ++j) dst[row * width + j] += g[j];
    return;
  }
  auto it = rows_.find(s);
  if (it == rows_.end()) {
    it = rows_.emplace(s, std::make_pair(table.shared(), std::map<std::size_t, std::vector<T>>{}))
             .first;
    order_.push_back(s);
  }
  auto& buf = it->second.second[row];
  if (buf.empty()) buf.assign(width, T(0));
  for (std::size_t j = 0; j < width; ++j) buf[j] += g[j];
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss, T seed, bool flush) {
  if (loss.numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (loss.requires_grad()) {
    grad_of(loss)[0] += seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(*this);
  }
  nodes_.clear();
  if (flush) flush_leaf_grads();
}

template <typename T>
void Tape<T>::flush_leaf_grads() {
  for (TensorStorage<T>* s : order_) {
    if (s->grad.empty()) s->grad.assign(s->data.size(), T(0));
    if (auto it = dense_.find(s); it != dense_.end()) {
      const auto& g = it->second.second;
      for (std::size_t i = 0; i < g.size(); ++i) s->grad[i] += g[i];
    }
    if (auto it = rows_.find(s); it != rows_.end()) {
      const std::size_t width = s->shape.at(1);
      for (const auto& [row, g] : it->second.second) {
        for (std::size_t j = 0; j < width; ++j) s->grad[row * width + j] += g[j];
      }
    }
  }
  dense_.clear();
  rows_.clear();
  order_.clear();
}

template <typename T>
void Tape<T>::clear() {
  nodes_.clear();
  dense_.clear();
  rows_.clear();
  order_.clear();
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace sse
