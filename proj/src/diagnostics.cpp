#include "sse/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "sse/ops.hpp"
#include "sse/rng.hpp"
#include "sse/training.hpp"

namespace sse {

namespace {

using Loss = std::function<Tensor<double>()>;

Tensor<double> rand_t(Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = uniform(rng, -scale, scale);
  return Tensor<double>(std::move(shape), std::move(v), true);
}

// relu and abs have a kink at 0 that central differences straddle.
Tensor<double> rand_off_kink(Shape shape, Rng& rng) {
  auto t = rand_t(std::move(shape), rng, 2.0);
  for (auto& v : t.data()) {
    if (std::abs(v) < 0.1) v += v < 0 ? -0.2 : 0.2;
  }
  return t;
}

// Keeps a corrupted backward rule out of the scalar reduction, so a failing
// check points at the op under test only.
class SuspendCorruption {
 public:
  SuspendCorruption() : saved_(corrupted_backward()) { corrupt_backward(""); }
  ~SuspendCorruption() { corrupt_backward(saved_); }
  SuspendCorruption(const SuspendCorruption&) = delete;
  SuspendCorruption& operator=(const SuspendCorruption&) = delete;

 private:
  std::string saved_;
};

Tensor<double> fixed_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> w(rows * cols);
  for (auto& x : w) x = uniform(rng, -1.0, 1.0);
  return Tensor<double>::matrix(rows, cols, std::move(w));
}

// Reduces a vector- or matrix-valued op to a scalar through fixed random
// projections, so every output element carries a distinct weight.
Loss projected(std::function<Tensor<double>()> op, std::uint64_t seed) {
  return [op = std::move(op), seed] {
    Tensor<double> y = op();
    SuspendCorruption guard;
    Rng rng(seed);
    if (y.rank() == 1) return affine(fixed_matrix(1, y.numel(), rng), y, Tensor<double>{});
    auto left = fixed_matrix(1, y.dim(0), rng);
    auto right = fixed_matrix(y.dim(1), 1, rng);
    return matmul(left, matmul(y, right));
  };
}

struct Case {
  Loss loss;
  NamedTensors<double> params;
};

Case make_case(std::string_view op, Rng& rng) {
  if (op == "matmul") {
    auto a = rand_t({3, 4}, rng), b = rand_t({4, 2}, rng);
    return {projected([=] { return matmul(a, b); }, 1), {{"a", a}, {"b", b}}};
  }
  if (op == "affine") {
    auto w = rand_t({3, 4}, rng), x = rand_t({4}, rng), b = rand_t({3}, rng);
    return {projected([=] { return affine(w, x, b); }, 2), {{"w", w}, {"x", x}, {"b", b}}};
  }
  if (op == "concat") {
    auto a = rand_t({2, 3}, rng), b = rand_t({2, 2}, rng);
    return {projected([=] { return concat<double>({a, b}, 1); }, 3), {{"a", a}, {"b", b}}};
  }
  if (op == "transpose") {
    auto m = rand_t({3, 4}, rng);
    return {projected([=] { return transpose(m); }, 4), {{"m", m}}};
  }
  if (op == "select_row") {
    auto m = rand_t({3, 4}, rng);
    return {projected([=] { return select_row(m, 1); }, 5), {{"m", m}}};
  }
  if (op == "stack_rows") {
    auto a = rand_t({4}, rng), b = rand_t({4}, rng);
    return {projected([=] { return stack_rows<double>({a, b}, 3); }, 6), {{"a", a}, {"b", b}}};
  }
  if (op == "rowwise_max") {
    // Continuous random values make ties (and argmax flips under eps) vanishingly unlikely.
    auto h = rand_t({4, 5}, rng);
    return {projected([=] { return rowwise_max(h, 4).values; }, 7), {{"h", h}}};
  }
  for (auto [name, p] : {std::pair{"sigmoid", Pointwise::sigmoid}, {"tanh", Pointwise::tanh},
                         {"relu", Pointwise::relu}, {"abs", Pointwise::abs}}) {
    if (op == name) {
      auto x = rand_off_kink({16}, rng);
      return {projected([=] { return pointwise(p, x); }, 8), {{"x", x}}};
    }
  }
  for (auto [name, b] :
       {std::pair{"add", Binary::add}, {"sub", Binary::sub}, {"hadamard", Binary::hadamard}}) {
    if (op == name) {
      auto x = rand_t({16}, rng, 2.0), y = rand_t({16}, rng, 2.0);
      return {projected([=] { return binary(b, x, y); }, 9), {{"x", x}, {"y", y}}};
    }
  }
  if (op == "softmax_cross_entropy") {
    auto z = rand_t({5}, rng, 3.0);
    return {[=] { return softmax_cross_entropy(z, 2); }, {{"logits", z}}};
  }
  if (op == "dropout") {
    // Same mask on every evaluation: the generator is rebuilt each call.
    auto x = rand_t({32}, rng);
    return {projected(
                [=] {
                  Rng mask(17);
                  return dropout(x, 0.3, Mode::train, mask);
                },
                10),
            {{"x", x}}};
  }
  if (op == "gather_rows") {
    auto table = rand_t({4, 3}, rng);
    return {projected(
                [=] {
                  const std::size_t ids[] = {2, 0, 2};
                  return gather_rows<double>(table, ids);
                },
                11),
            {{"table", table}}};
  }
  if (op == "lstm_cell") {
    const std::size_t in = 3, hid = 2;
    auto wx = rand_t({4 * hid, in}, rng, 0.5), wh = rand_t({4 * hid, hid}, rng, 0.5);
    auto b = rand_t({4 * hid}, rng, 0.5);
    auto x = rand_t({in}, rng), h = rand_t({hid}, rng), c = rand_t({hid}, rng);
    // h and c both feed the loss so both backward paths run.
    return {[=] {
              auto st = lstm_cell(wx, wh, b, x, h, c);
              SuspendCorruption guard;
              Rng proj(12);
              return add(affine(fixed_matrix(1, hid, proj), st.h, Tensor<double>{}),
                         affine(fixed_matrix(1, hid, proj), st.c, Tensor<double>{}));
            },
            {{"W_x", wx}, {"W_h", wh}, {"bias", b}, {"x", x}, {"h_prev", h}, {"c_prev", c}}};
  }
  throw ConfigError("no gradient check defined for op '" + std::string(op) + "'");
}

}  // namespace

std::vector<OpCheck> check_ops() {
  std::vector<OpCheck> out;
  for (auto op : op_names()) {
    Rng rng(mix_seed(stable_hash(op), 0));
    auto c = make_case(op, rng);
    out.push_back({std::string(op), grad_check(c.loss, c.params)});
  }
  return out;
}

ModelCheck check_model(ConnectionMode mode) {
  const std::vector<NLIExample> data{
      {{"a", "b", "c"}, {"c", "d", "a"}, Label::neutral, ""},
      {{"e", "b", "f"}, {"d", "e"}, Label::contradiction, ""}};
  auto vocab = Vocabulary::build(corpus_of(data));
  EncoderConfig enc{mode, {5, 7}, 4};
  if (mode == ConnectionMode::residual) enc.layer_dims = {6, 6};
  const MLPConfig mlp{2, 8, Activation::relu, 0.0};
  auto model = NLIModel<double>::create(vocab, enc, mlp, random_embeddings<double>(vocab, 4, 5), 13);
  // Larger embeddings than the +-0.05 default so gradients are well above
  // finite-difference noise.
  for (auto& v : model.embedding.matrix.data()) v *= 20.0;
  model.embedding.zero_pad_row();

  const auto batch = make_batch(data, model.vocab);
  auto loss = [&] {
    Tensor<double> total;
    for (std::size_t i = 0; i < batch.size; ++i) {
      Rng unused(0);
      auto l = softmax_cross_entropy(example_logits(model, batch, i, Mode::eval, unused),
                                     batch.labels[i]);
      total = total.defined() ? add(total, l) : l;
    }
    return total;
  };
  return {enc, grad_check(loss, model.trainable_parameters())};
}

std::vector<ParamTableRow> published_param_table() {
  const MLPConfig mlp{1, 800, Activation::relu, 0.1};
  auto enc = [](ConnectionMode m, std::size_t h) { return EncoderConfig{m, {h, h, h}, 300}; };
  return {{"300D residual", enc(ConnectionMode::residual, 300), mlp, 9.7e6},
          {"600D residual", enc(ConnectionMode::residual, 600), mlp, 28.9e6},
          {"600D shortcut", enc(ConnectionMode::full_shortcut, 600), mlp, 34.7e6}};
}

}  // namespace sse
