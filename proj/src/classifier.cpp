#include "sse/classifier.hpp"

#include <cmath>

namespace sse {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "' (expected relu or tanh)");
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::entailment:
      return "entailment";
    case Label::neutral:
      return "neutral";
    case Label::contradiction:
      return "contradiction";
  }
  return "?";
}

Label parse_label(std::string_view s) {
  if (s == "entailment") return Label::entailment;
  if (s == "neutral") return Label::neutral;
  if (s == "contradiction") return Label::contradiction;
  throw ConfigError("unknown label '" + std::string(s) + "'");
}

void MLPConfig::validate() const {
  if (num_hidden_layers < 1 || num_hidden_layers > 2) {
    throw ConfigError("mlp.num_hidden_layers must be 1 or 2");
  }
  if (hidden_units < 1) throw ConfigError("mlp.hidden_units must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("mlp.dropout must lie in [0, 1)");
  }
  if (num_classes != kNumClasses) throw ConfigError("mlp.num_classes is fixed at 3");
}

template <typename T>
MLPParams<T> MLPParams<T>::init(const MLPConfig& cfg, std::size_t input_dim, Rng& rng) {
  cfg.validate();
  MLPParams p;
  std::size_t fan_in = input_dim;
  for (std::size_t layer = 0; layer <= cfg.num_hidden_layers; ++layer) {
    const std::size_t fan_out = layer < cfg.num_hidden_layers ? cfg.hidden_units : cfg.num_classes;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor<T> w({fan_out, fan_in}, true);
    for (auto& v : w.data()) v = static_cast<T>(uniform(rng, -limit, limit));
    p.weights.push_back(w);
    p.biases.push_back(Tensor<T>({fan_out}, true));
    fan_in = fan_out;
  }
  return p;
}

template <typename T>
void MLPParams<T>::append_named(NamedTensors<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string layer =
        i + 1 == weights.size() ? prefix + "out" : prefix + "hidden" + std::to_string(i);
    out.emplace_back(layer + ".W", weights[i]);
    out.emplace_back(layer + ".b", biases[i]);
  }
}

template <typename T>
Tensor<T> matching_features(const Tensor<T>& v_p, const Tensor<T>& v_h) {
  if (v_p.numel() != v_h.numel() || v_p.rank() != 1 || v_h.rank() != 1) {
    throw DimensionError("matching_features: sentence vectors " + shape_str(v_p.shape()) + " and " +
                         shape_str(v_h.shape()) + " differ");
  }
  return concat<T>({v_p, v_h, abs(sub(v_p, v_h)), hadamard(v_p, v_h)}, 0);
}

template <typename T>
Tensor<T> mlp_forward(const MLPConfig& cfg, const MLPParams<T>& params, const Tensor<T>& features,
                      Mode mode, Rng& rng) {
  if (params.weights.size() != cfg.num_hidden_layers + 1) {
    throw DimensionError("mlp_forward: parameters hold " + std::to_string(params.weights.size()) +
                         " layers, config expects " + std::to_string(cfg.num_hidden_layers + 1));
  }
  Tensor<T> x = features;
  for (std::size_t i = 0; i < cfg.num_hidden_layers; ++i) {
    x = affine(params.weights[i], x, params.biases[i]);
    x = cfg.activation == Activation::relu ? relu(x) : tanh(x);
    x = dropout(x, cfg.dropout_rate, mode, rng);
  }
  return affine(params.weights.back(), x, params.biases.back());
}

template <typename T>
std::size_t predict(const Tensor<T>& logits) {
  auto z = logits.data();
  std::size_t best = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::isnan(z[i])) throw NumericError("predict: NaN logit at index " + std::to_string(i));
    if (z[i] > z[best]) best = i;
  }
  return best;
}

#define SSE_INSTANTIATE_CLASSIFIER(T)                                                        \
  template struct MLPParams<T>;                                                              \
  template Tensor<T> matching_features(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> mlp_forward(const MLPConfig&, const MLPParams<T>&, const Tensor<T>&,   \
                                 Mode, Rng&);                                                \
  template std::size_t predict(const Tensor<T>&);

SSE_INSTANTIATE_CLASSIFIER(float)
SSE_INSTANTIATE_CLASSIFIER(double)

}  // namespace sse
