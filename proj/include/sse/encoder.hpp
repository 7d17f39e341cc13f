#pragma once

// Stacked bidirectional LSTM sentence encoder with shortcut or residual
// connections between layers and max pooling over time.
//
// Layer i (1-based) reads, at every time step t:
//   none           h^{i-1}_t
//   word_shortcut  [w_t, h^{i-1}_t]
//   full_shortcut  [w_t, h^{i-1}_t, ..., h^1_t]
//   residual       [w_t, h^1_t + ... + h^{i-1}_t]
// and layer 1 reads w_t in every mode. The sentence vector is the per-row
// maximum of the last layer's outputs over the valid time steps.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sse/classifier.hpp"
#include "sse/ops.hpp"
#include "sse/rng.hpp"
#include "sse/tensor.hpp"

namespace sse {

enum class ConnectionMode { none, word_shortcut, full_shortcut, residual };

std::string_view to_string(ConnectionMode m);
ConnectionMode parse_connection_mode(std::string_view s);

struct EncoderConfig {
  ConnectionMode mode = ConnectionMode::full_shortcut;
  std::vector<std::size_t> layer_dims{512, 1024, 2048};  // per-direction hidden sizes
  std::size_t embed_dim = 300;

  void validate() const;
  std::size_t num_layers() const { return layer_dims.size(); }
  // Width of the per-step input to layer i (1-based).
  std::size_t input_dim(std::size_t layer) const;
  std::size_t output_dim() const { return 2 * layer_dims.back(); }
};

template <typename T>
struct LSTMDirectionParams {
  Tensor<T> w_x;   // [4h x in], gate blocks (input, forget, cell, output)
  Tensor<T> w_h;   // [4h x h]
  Tensor<T> bias;  // [4h], forget block starts at 1

  static LSTMDirectionParams init(std::size_t in_dim, std::size_t hidden, Rng& rng);
  std::size_t hidden() const { return w_h.dim(1); }
  std::size_t in_dim() const { return w_x.dim(1); }
};

template <typename T>
struct BiLSTMLayer {
  LSTMDirectionParams<T> forward;
  LSTMDirectionParams<T> backward;

  std::size_t hidden() const { return forward.hidden(); }
  std::size_t output_dim() const { return 2 * hidden(); }
};

template <typename T>
struct EncoderParams {
  std::vector<BiLSTMLayer<T>> layers;

  static EncoderParams init(const EncoderConfig& cfg, Rng& rng);
  void append_named(NamedTensors<T>& out, const std::string& prefix) const;
};

template <typename T>
LstmState<T> lstm_cell_step(const LSTMDirectionParams<T>& p, const Tensor<T>& x,
                            const Tensor<T>& h_prev, const Tensor<T>& c_prev);

// inputs [n x in] -> [n x 2h]. The forward direction runs over steps
// 0..valid_len-1, the backward one from valid_len-1 down to 0, both from zero
// state. Rows at and past valid_len are zero.
template <typename T>
Tensor<T> run_bilstm_layer(const BiLSTMLayer<T>& layer, const Tensor<T>& inputs,
                           std::size_t valid_len);

// Sequence-level input for layer `layer` (1-based). `embedded` is [n x d] and
// prev_outputs holds the [n x 2d_j] outputs of layers 1..layer-1.
template <typename T>
Tensor<T> compose_layer_input(ConnectionMode mode, std::size_t layer, const Tensor<T>& embedded,
                              const std::vector<Tensor<T>>& prev_outputs);

// [n x d] embeddings -> sentence vector of length 2 * d_m.
template <typename T>
Tensor<T> encode(const EncoderParams<T>& params, const EncoderConfig& cfg, const Tensor<T>& embedded,
                 std::size_t valid_len);

// Trainable scalars of one LSTM direction: 4 * ((in + h) * h + h).
std::uint64_t lstm_direction_param_count(std::size_t in_dim, std::size_t hidden);

struct ParamCount {
  std::uint64_t encoder = 0;
  std::uint64_t classifier = 0;
  std::uint64_t embedding = 0;
  std::uint64_t total() const { return encoder + classifier + embedding; }
};

ParamCount param_count(const EncoderConfig& enc, const MLPConfig& mlp, bool count_embedding,
                       std::size_t vocab_size = 0);

}  // namespace sse
