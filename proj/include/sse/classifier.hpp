#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sse/ops.hpp"
#include "sse/rng.hpp"
#include "sse/tensor.hpp"

namespace sse {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);

// Label ids as stored in checkpoints.
enum class Label : std::size_t { entailment = 0, neutral = 1, contradiction = 2 };
inline constexpr std::size_t kNumClasses = 3;
std::string_view to_string(Label l);
// Throws ConfigError for anything but the three class names.
Label parse_label(std::string_view s);

struct MLPConfig {
  std::size_t num_hidden_layers = 2;
  std::size_t hidden_units = 1600;
  Activation activation = Activation::relu;
  double dropout_rate = 0.1;
  std::size_t num_classes = kNumClasses;

  void validate() const;
};

template <typename T>
struct MLPParams {
  // Hidden layers first, output layer last.
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;

  static MLPParams init(const MLPConfig& cfg, std::size_t input_dim, Rng& rng);
  void append_named(NamedTensors<T>& out, const std::string& prefix) const;
};

// [v_p, v_h, |v_p - v_h|, v_p * v_h]
template <typename T>
Tensor<T> matching_features(const Tensor<T>& v_p, const Tensor<T>& v_h);

// Hidden layers: affine, activation, dropout. Output layer: affine only.
template <typename T>
Tensor<T> mlp_forward(const MLPConfig& cfg, const MLPParams<T>& params, const Tensor<T>& features,
                      Mode mode, Rng& rng);

// Arg-max class, lowest index on ties. Throws NumericError on NaN.
template <typename T>
std::size_t predict(const Tensor<T>& logits);

}  // namespace sse
