#pragma once

// Differentiable tensor operations. Every op computes its forward value
// eagerly and, when a tape is active and an input requires a gradient,
// records the matching backward rule.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "sse/rng.hpp"
#include "sse/tensor.hpp"

namespace sse {

enum class Mode { train, eval };

enum class Pointwise { sigmoid, tanh, relu, abs };
enum class Binary { add, sub, hadamard };

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// W[out x in] x[in] + b[out]. b may be undefined.
template <typename T>
Tensor<T> affine(const Tensor<T>& w, const Tensor<T>& x, const Tensor<T>& b);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

template <typename T>
Tensor<T> transpose(const Tensor<T>& m);

// Row t of a matrix as a vector.
template <typename T>
Tensor<T> select_row(const Tensor<T>& m, std::size_t row);

// Stacks vectors of equal length as the first rows of an [n_rows x D] matrix;
// rows past rows.size() are zero.
template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows, std::size_t n_rows);

template <typename T>
struct RowMax {
  Tensor<T> values;
  std::vector<std::size_t> argmax;  // 0-based column per row
};

// Per-row maximum over the first valid_len columns of H[D x n]. Ties go to
// the earliest column, which is also the only one receiving gradient.
template <typename T>
RowMax<T> rowwise_max(const Tensor<T>& h, std::size_t valid_len);

template <typename T>
Tensor<T> pointwise(Pointwise op, const Tensor<T>& x);

template <typename T>
Tensor<T> binary(Binary op, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return pointwise(Pointwise::sigmoid, x); }
template <typename T>
Tensor<T> tanh(const Tensor<T>& x) { return pointwise(Pointwise::tanh, x); }
template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return pointwise(Pointwise::relu, x); }
template <typename T>
Tensor<T> abs(const Tensor<T>& x) { return pointwise(Pointwise::abs, x); }
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return binary(Binary::add, a, b); }
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return binary(Binary::sub, a, b); }
template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(Binary::hadamard, a, b);
}

// -log softmax(logits)[label], as a one-element tensor.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label);

// Inverted dropout in train mode, identity in eval mode.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng);

// out[i] = table[ids[i]]. Gradient flows back row-sparse.
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> ids);

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

// One LSTM step, gates stacked (input, forget, cell, output) in w_x[4h x in],
// w_h[4h x h] and bias[4h]. Fused into a single tape node.
template <typename T>
LstmState<T> lstm_cell(const Tensor<T>& w_x, const Tensor<T>& w_h, const Tensor<T>& bias,
                       const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev);

// Negative control for gradient checking: while set, the named op applies its
// backward rule twice. Empty disables. Process-wide and not synchronised, so
// set it before any graph is built.
void corrupt_backward(std::string_view op);
std::string_view corrupted_backward();
// Names accepted by corrupt_backward, one per backward rule.
std::span<const std::string_view> op_names();

}  // namespace sse
