#include "sse/encoder.hpp"

#include <cmath>

namespace sse {

std::string_view to_string(ConnectionMode m) {
  switch (m) {
    case ConnectionMode::none:
      return "none";
    case ConnectionMode::word_shortcut:
      return "word_shortcut";
    case ConnectionMode::full_shortcut:
      return "full_shortcut";
    case ConnectionMode::residual:
      return "residual";
  }
  return "?";
}

ConnectionMode parse_connection_mode(std::string_view s) {
  if (s == "none") return ConnectionMode::none;
  if (s == "word_shortcut") return ConnectionMode::word_shortcut;
  if (s == "full_shortcut") return ConnectionMode::full_shortcut;
  if (s == "residual") return ConnectionMode::residual;
  throw ConfigError("unknown connection mode '" + std::string(s) +
                    "' (expected none, word_shortcut, full_shortcut or residual)");
}

void EncoderConfig::validate() const {
  if (layer_dims.empty()) throw ConfigError("encoder.layer_dims needs at least one layer");
  for (auto d : layer_dims) {
    if (d == 0) throw ConfigError("encoder.layer_dims entries must be positive");
  }
  if (embed_dim == 0) throw ConfigError("encoder.embed_dim must be positive");
  if (mode == ConnectionMode::residual) {
    for (auto d : layer_dims) {
      if (d != layer_dims.front()) {
        throw ConfigError("residual connections need equal layer dims, got unequal encoder.layer_dims");
      }
    }
  }
}

std::size_t EncoderConfig::input_dim(std::size_t layer) const {
  if (layer == 0 || layer > layer_dims.size()) {
    throw IndexError("layer index " + std::to_string(layer) + " out of range");
  }
  if (layer == 1) return embed_dim;
  const std::size_t prev = 2 * layer_dims[layer - 2];
  switch (mode) {
    case ConnectionMode::none:
      return prev;
    case ConnectionMode::word_shortcut:
    case ConnectionMode::residual:
      return embed_dim + prev;
    case ConnectionMode::full_shortcut: {
      std::size_t w = embed_dim;
      for (std::size_t j = 0; j + 1 < layer; ++j) w += 2 * layer_dims[j];
      return w;
    }
  }
  return 0;
}

template <typename T>
LSTMDirectionParams<T> LSTMDirectionParams<T>::init(std::size_t in_dim, std::size_t hidden,
                                                    Rng& rng) {
  LSTMDirectionParams p{Tensor<T>({4 * hidden, in_dim}, true), Tensor<T>({4 * hidden, hidden}, true),
                        Tensor<T>({4 * hidden}, true)};
  // Glorot-uniform per gate block.
  const double lim_x = std::sqrt(6.0 / static_cast<double>(in_dim + hidden));
  const double lim_h = std::sqrt(6.0 / static_cast<double>(2 * hidden));
  for (auto& v : p.w_x.data()) v = static_cast<T>(uniform(rng, -lim_x, lim_x));
  for (auto& v : p.w_h.data()) v = static_cast<T>(uniform(rng, -lim_h, lim_h));
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias[j] = T(1);
  return p;
}

template <typename T>
EncoderParams<T> EncoderParams<T>::init(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  EncoderParams p;
  for (std::size_t i = 1; i <= cfg.num_layers(); ++i) {
    const std::size_t in = cfg.input_dim(i), h = cfg.layer_dims[i - 1];
    auto fwd = LSTMDirectionParams<T>::init(in, h, rng);
    auto bwd = LSTMDirectionParams<T>::init(in, h, rng);
    p.layers.push_back({fwd, bwd});
  }
  return p;
}

template <typename T>
void EncoderParams<T>::append_named(NamedTensors<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (int dir = 0; dir < 2; ++dir) {
      const auto& p = dir == 0 ? layers[i].forward : layers[i].backward;
      const std::string base = prefix + "layer" + std::to_string(i) + (dir == 0 ? ".fwd." : ".bwd.");
      out.emplace_back(base + "W_x", p.w_x);
      out.emplace_back(base + "W_h", p.w_h);
      out.emplace_back(base + "b", p.bias);
    }
  }
}

template <typename T>
LstmState<T> lstm_cell_step(const LSTMDirectionParams<T>& p, const Tensor<T>& x,
                            const Tensor<T>& h_prev, const Tensor<T>& c_prev) {
  return lstm_cell(p.w_x, p.w_h, p.bias, x, h_prev, c_prev);
}

template <typename T>
Tensor<T> run_bilstm_layer(const BiLSTMLayer<T>& layer, const Tensor<T>& inputs,
                           std::size_t valid_len) {
  if (inputs.rank() != 2) {
    throw DimensionError("run_bilstm_layer: inputs must be [n x in], got " +
                         shape_str(inputs.shape()));
  }
  if (layer.forward.in_dim() != layer.backward.in_dim() || layer.forward.hidden() != layer.backward.hidden()) {
    throw DimensionError("run_bilstm_layer: forward and backward directions disagree in shape");
  }
  if (valid_len == 0) throw EmptySequenceError("run_bilstm_layer: valid length is zero");
  const std::size_t n = inputs.dim(0);
  if (valid_len > n) {
    throw DimensionError("run_bilstm_layer: valid length " + std::to_string(valid_len) +
                         " exceeds sequence length " + std::to_string(n));
  }
  const std::size_t h = layer.hidden();

  std::vector<Tensor<T>> steps(valid_len);
  for (std::size_t t = 0; t < valid_len; ++t) steps[t] = select_row(inputs, t);

  std::vector<Tensor<T>> fwd(valid_len), bwd(valid_len);
  LstmState<T> st{Tensor<T>({h}), Tensor<T>({h})};
  for (std::size_t t = 0; t < valid_len; ++t) {
    st = lstm_cell_step(layer.forward, steps[t], st.h, st.c);
    fwd[t] = st.h;
  }
  st = {Tensor<T>({h}), Tensor<T>({h})};
  for (std::size_t t = valid_len; t-- > 0;) {
    st = lstm_cell_step(layer.backward, steps[t], st.h, st.c);
    bwd[t] = st.h;
  }
  return concat<T>({stack_rows(fwd, n), stack_rows(bwd, n)}, 1);
}

template <typename T>
Tensor<T> compose_layer_input(ConnectionMode mode, std::size_t layer, const Tensor<T>& embedded,
                              const std::vector<Tensor<T>>& prev_outputs) {
  if (layer == 0) throw IndexError("compose_layer_input: layers are numbered from 1");
  if (prev_outputs.size() != layer - 1) {
    throw DimensionError("compose_layer_input: layer " + std::to_string(layer) + " needs " +
                         std::to_string(layer - 1) + " previous outputs, got " +
                         std::to_string(prev_outputs.size()));
  }
  if (layer == 1) return embedded;
  switch (mode) {
    case ConnectionMode::none:
      return prev_outputs.back();
    case ConnectionMode::word_shortcut:
      return concat<T>({embedded, prev_outputs.back()}, 1);
    case ConnectionMode::full_shortcut: {
      std::vector<Tensor<T>> parts{embedded};
      for (auto it = prev_outputs.rbegin(); it != prev_outputs.rend(); ++it) parts.push_back(*it);
      return concat<T>(parts, 1);
    }
    case ConnectionMode::residual: {
      Tensor<T> sum = prev_outputs.front();
      for (std::size_t j = 1; j < prev_outputs.size(); ++j) {
        if (prev_outputs[j].shape() != sum.shape()) {
          throw ConfigError("residual connections need equal layer widths, got " +
                            shape_str(sum.shape()) + " and " + shape_str(prev_outputs[j].shape()));
        }
        sum = add(sum, prev_outputs[j]);
      }
      return concat<T>({embedded, sum}, 1);
    }
  }
  return embedded;
}

template <typename T>
Tensor<T> encode(const EncoderParams<T>& params, const EncoderConfig& cfg, const Tensor<T>& embedded,
                 std::size_t valid_len) {
  if (params.layers.size() != cfg.num_layers()) {
    throw DimensionError("encode: parameters hold " + std::to_string(params.layers.size()) +
                         " layers, config expects " + std::to_string(cfg.num_layers()));
  }
  if (embedded.rank() != 2 || embedded.dim(1) != cfg.embed_dim) {
    throw DimensionError("encode: embedded sentence " + shape_str(embedded.shape()) +
                         " does not have width " + std::to_string(cfg.embed_dim));
  }
  std::vector<Tensor<T>> outputs;
  for (std::size_t i = 1; i <= cfg.num_layers(); ++i) {
    Tensor<T> x = compose_layer_input(cfg.mode, i, embedded, outputs);
    outputs.push_back(run_bilstm_layer(params.layers[i - 1], x, valid_len));
  }
  return rowwise_max(transpose(outputs.back()), valid_len).values;
}

std::uint64_t lstm_direction_param_count(std::size_t in_dim, std::size_t hidden) {
  const std::uint64_t in = in_dim, h = hidden;
  return 4 * ((in + h) * h + h);
}

ParamCount param_count(const EncoderConfig& enc, const MLPConfig& mlp, bool count_embedding,
                       std::size_t vocab_size) {
  enc.validate();
  mlp.validate();
  ParamCount c;
  for (std::size_t i = 1; i <= enc.num_layers(); ++i) {
    c.encoder += 2 * lstm_direction_param_count(enc.input_dim(i), enc.layer_dims[i - 1]);
  }
  std::uint64_t fan_in = 4 * static_cast<std::uint64_t>(enc.output_dim());
  for (std::size_t i = 0; i <= mlp.num_hidden_layers; ++i) {
    const std::uint64_t fan_out = i < mlp.num_hidden_layers ? mlp.hidden_units : mlp.num_classes;
    c.classifier += fan_in * fan_out + fan_out;
    fan_in = fan_out;
  }
  if (count_embedding) c.embedding = static_cast<std::uint64_t>(vocab_size) * enc.embed_dim;
  return c;
}

#define SSE_INSTANTIATE_ENCODER(T)                                                                \
  template struct LSTMDirectionParams<T>;                                                         \
  template struct EncoderParams<T>;                                                               \
  template LstmState<T> lstm_cell_step(const LSTMDirectionParams<T>&, const Tensor<T>&,           \
                                       const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> run_bilstm_layer(const BiLSTMLayer<T>&, const Tensor<T>&, std::size_t);      \
  template Tensor<T> compose_layer_input(ConnectionMode, std::size_t, const Tensor<T>&,           \
                                         const std::vector<Tensor<T>>&);                          \
  template Tensor<T> encode(const EncoderParams<T>&, const EncoderConfig&, const Tensor<T>&,      \
                            std::size_t);

SSE_INSTANTIATE_ENCODER(float)
SSE_INSTANTIATE_ENCODER(double)

}  // namespace sse
