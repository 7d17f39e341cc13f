#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "sse/classifier.hpp"
#include "sse/encoder.hpp"
#include "sse/gradcheck.hpp"
#include "sse/ops.hpp"

using namespace sse;
using test::fixed_projection;
using test::random_tensor;

namespace {

constexpr ConnectionMode kModes[] = {ConnectionMode::none, ConnectionMode::word_shortcut,
                                     ConnectionMode::full_shortcut, ConnectionMode::residual};

void fill(Tensor<double>& t, double v) {
  for (auto& x : t.data()) x = v;
}

NamedTensors<double> named(const EncoderParams<double>& p) {
  NamedTensors<double> out;
  p.append_named(out, "");
  return out;
}

// Input width of layer i written straight from the connection definitions.
std::size_t expected_width(ConnectionMode mode, std::size_t d, const std::vector<std::size_t>& dims,
                           std::size_t i) {
  if (i == 1) return d;
  switch (mode) {
    case ConnectionMode::none:
      return 2 * dims[i - 2];
    case ConnectionMode::word_shortcut:
      return d + 2 * dims[i - 2];
    case ConnectionMode::residual:
      return d + 2 * dims[0];
    case ConnectionMode::full_shortcut: {
      std::size_t w = d;
      for (std::size_t j = 0; j + 1 < i; ++j) w += 2 * dims[j];
      return w;
    }
  }
  return 0;
}

}  // namespace

TEST_CASE("lstm cell step: zero and forget-bias cases") {
  Rng rng(1);
  auto p = LSTMDirectionParams<double>::init(4, 3, rng);
  for (std::size_t g = 0; g < 12; ++g) CHECK(p.bias[g] == (g >= 3 && g < 6 ? 1.0 : 0.0));
  fill(p.w_x, 0);
  fill(p.w_h, 0);
  auto x = Tensor<double>::vector({0, 0, 0, 0});
  auto h0 = Tensor<double>::vector({0, 0, 0});

  SUBCASE("all zero") {
    fill(p.bias, 0);
    auto s = lstm_cell_step(p, x, h0, h0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.h[j] == 0.0);
  }
  SUBCASE("forget bias 1 scales the cell by sigmoid(1)") {
    auto c0 = Tensor<double>::vector({1.0, -2.0, 0.5});
    auto s = lstm_cell_step(p, x, h0, c0);
    const double f = 1.0 / (1.0 + std::exp(-1.0));
    for (std::size_t j = 0; j < 3; ++j) CHECK(s.c[j] == doctest::Approx(f * c0[j]).epsilon(1e-14));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(lstm_cell_step(p, Tensor<double>::vector({0, 0}), h0, h0), DimensionError);
  }
}

TEST_CASE("bilstm layer") {
  Rng rng(2);
  BiLSTMLayer<double> layer{LSTMDirectionParams<double>::init(3, 2, rng),
                            LSTMDirectionParams<double>::init(3, 2, rng)};

  SUBCASE("single step is one forward and one backward cell on the token") {
    auto in = random_tensor({1, 3}, rng, 1.0, false);
    auto out = run_bilstm_layer(layer, in, 1);
    auto x = select_row(in, 0);
    auto z = Tensor<double>::vector({0, 0});
    auto f = lstm_cell_step(layer.forward, x, z, z);
    auto b = lstm_cell_step(layer.backward, x, z, z);
    REQUIRE(out.shape() == Shape{1, 4});
    CHECK(out.at(0, 0) == f.h[0]);
    CHECK(out.at(0, 1) == f.h[1]);
    CHECK(out.at(0, 2) == b.h[0]);
    CHECK(out.at(0, 3) == b.h[1]);
  }
  SUBCASE("padded rows are exactly zero") {
    auto in = random_tensor({5, 3}, rng, 1.0, false);
    auto out = run_bilstm_layer(layer, in, 3);
    for (std::size_t t = 3; t < 5; ++t) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(out.at(t, j) == 0.0);
    }
    CHECK_THROWS_AS(run_bilstm_layer(layer, in, 0), EmptySequenceError);
  }
  SUBCASE("tied directions: reversing the input mirrors the output") {
    BiLSTMLayer<double> tied{layer.forward, layer.forward};
    const std::size_t n = 6;
    auto in = random_tensor({n, 3}, rng, 1.0, false);
    std::vector<double> rev;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < 3; ++j) rev.push_back(in.at(n - 1 - t, j));
    }
    auto out = run_bilstm_layer(tied, in, n);
    auto out_rev = run_bilstm_layer(tied, Tensor<double>::matrix(n, 3, rev), n);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(out_rev.at(t, j) == out.at(n - 1 - t, 2 + j));
        CHECK(out_rev.at(t, 2 + j) == out.at(n - 1 - t, j));
      }
    }
  }
}

TEST_CASE("layer input widths for the documented configurations") {
  EncoderConfig full{ConnectionMode::full_shortcut, {512, 1024, 2048}, 300};
  CHECK(full.input_dim(1) == 300);
  CHECK(full.input_dim(2) == 1324);
  CHECK(full.input_dim(3) == 3372);
  CHECK(full.output_dim() == 4096);
  EncoderConfig res{ConnectionMode::residual, {600, 600, 600}, 300};
  CHECK(res.input_dim(2) == 1500);
  CHECK(res.input_dim(3) == 1500);
  EncoderConfig none{ConnectionMode::none, {5, 7}, 4};
  CHECK(none.input_dim(2) == 10);
  EncoderConfig bad{ConnectionMode::residual, {4, 5}, 3};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("compose_layer_input") {
  Rng rng(3);
  auto w = random_tensor({2, 3}, rng, 1.0, false);
  auto h1 = random_tensor({2, 4}, rng, 1.0, false);
  auto h2 = random_tensor({2, 4}, rng, 1.0, false);
  for (auto mode : kModes) CHECK(compose_layer_input(mode, 1, w, {}).shape() == w.shape());

  auto full = compose_layer_input(ConnectionMode::full_shortcut, 3, w, {h1, h2});
  REQUIRE(full.shape() == Shape{2, 11});
  // [w, h^2, h^1]
  CHECK(full.at(1, 0) == w.at(1, 0));
  CHECK(full.at(1, 3) == h2.at(1, 0));
  CHECK(full.at(1, 7) == h1.at(1, 0));

  auto word = compose_layer_input(ConnectionMode::word_shortcut, 3, w, {h1, h2});
  REQUIRE(word.shape() == Shape{2, 7});
  CHECK(word.at(0, 3) == h2.at(0, 0));

  auto none = compose_layer_input(ConnectionMode::none, 3, w, {h1, h2});
  REQUIRE(none.shape() == Shape{2, 4});
  CHECK(none.at(0, 2) == h2.at(0, 2));

  auto res = compose_layer_input(ConnectionMode::residual, 3, w, {h1, h2});
  REQUIRE(res.shape() == Shape{2, 7});
  CHECK(res.at(1, 5) == h1.at(1, 2) + h2.at(1, 2));
}

TEST_CASE("dimension law over random configurations") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mode = kModes[uniform_index(rng, 4)];
    const std::size_t m = 1 + uniform_index(rng, 4);
    const std::size_t d = 1 + uniform_index(rng, 64);
    std::vector<std::size_t> dims(m);
    for (auto& x : dims) x = 1 + uniform_index(rng, 64);
    if (mode == ConnectionMode::residual) dims.assign(m, dims[0]);
    EncoderConfig cfg{mode, dims, d};
    auto params = EncoderParams<float>::init(cfg, rng);
    for (std::size_t i = 1; i <= m; ++i) {
      const auto w = expected_width(mode, d, dims, i);
      CHECK(cfg.input_dim(i) == w);
      CHECK(params.layers[i - 1].forward.in_dim() == w);
      CHECK(params.layers[i - 1].backward.in_dim() == w);
    }
  }
}

TEST_CASE("encode: output length, padding inertness, m=1 degeneracy") {
  Rng rng(5);
  SUBCASE("sentence vector has 2*d_m entries") {
    EncoderConfig cfg{ConnectionMode::full_shortcut, {3, 4, 6}, 5};
    auto p = EncoderParams<double>::init(cfg, rng);
    auto v = encode(p, cfg, random_tensor({4, 5}, rng, 1.0, false), 4);
    CHECK(v.shape() == Shape{12});
  }
  SUBCASE("appended PAD rows change neither the vector nor any gradient") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto mode = kModes[trial % 4];
      EncoderConfig cfg{mode, {3, 4}, 3};
      if (mode == ConnectionMode::residual) cfg.layer_dims = {3, 3};
      auto p = EncoderParams<double>::init(cfg, rng);
      const std::size_t n = 1 + uniform_index(rng, 5), pad = 1 + uniform_index(rng, 5);
      auto x = random_tensor({n, 3}, rng);
      std::vector<double> padded(x.data().begin(), x.data().end());
      padded.resize((n + pad) * 3, 0.0);
      auto xp = Tensor<double>({n + pad, 3}, padded, true);
      auto proj = fixed_projection(cfg.output_dim(), 100 + trial);

      auto run = [&](const Tensor<double>& input) {
        for (auto& [name, t] : named(p)) t.zero_grad();
        Tape<double> tape;
        TapeScope<double> scope(tape);
        auto v = encode(p, cfg, input, n);
        tape.backward(affine(proj, v, Tensor<double>{}));
        std::vector<double> grads;
        for (auto& [name, t] : named(p)) grads.insert(grads.end(), t.grad().begin(), t.grad().end());
        return std::make_pair(std::vector<double>(v.data().begin(), v.data().end()), grads);
      };
      auto [v1, g1] = run(x);
      auto [v2, g2] = run(xp);
      CHECK(v1 == v2);
      CHECK(g1 == g2);
      for (std::size_t i = 0; i < n * 3; ++i) CHECK(xp.grad()[i] == x.grad()[i]);
      for (std::size_t i = n * 3; i < (n + pad) * 3; ++i) CHECK(xp.grad()[i] == 0.0);
    }
  }
  SUBCASE("one layer is the same network in every mode") {
    EncoderConfig base{ConnectionMode::none, {4}, 3};
    auto p = EncoderParams<double>::init(base, rng);
    auto x = random_tensor({5, 3}, rng, 1.0, false);
    auto ref = encode(p, base, x, 5);
    for (auto mode : kModes) {
      EncoderConfig cfg{mode, {4}, 3};
      auto v = encode(p, cfg, x, 5);
      CHECK(std::vector<double>(v.data().begin(), v.data().end()) ==
            std::vector<double>(ref.data().begin(), ref.data().end()));
    }
  }
}

TEST_CASE("encoder gradients match finite differences in every mode") {
  Rng rng(6);
  for (auto mode : kModes) {
    EncoderConfig cfg{mode, {5, 7}, 4};
    if (mode == ConnectionMode::residual) cfg.layer_dims = {5, 5};
    auto p = EncoderParams<double>::init(cfg, rng);
    auto x = random_tensor({3, 4}, rng);
    auto proj = fixed_projection(cfg.output_dim(), 7);
    auto params = named(p);
    params.emplace_back("x", x);
    auto rep = grad_check([&] { return affine(proj, encode(p, cfg, x, 3), Tensor<double>{}); },
                          params);
    INFO(to_string(mode), " worst ", rep.worst().name);
    CHECK(rep.max_rel_error() < 1e-4);
  }
}

TEST_CASE("parameter count") {
  CHECK(lstm_direction_param_count(4, 3) == 96);
  Rng rng(8);
  CHECK(LSTMDirectionParams<float>::init(4, 3, rng).w_x.numel() +
            LSTMDirectionParams<float>::init(4, 3, rng).w_h.numel() + 12 ==
        96);

  const MLPConfig mlp{1, 800, Activation::relu, 0.1};
  struct Row {
    ConnectionMode mode;
    std::size_t dim;
    double published;
  };
  for (auto [mode, dim, published] : {Row{ConnectionMode::residual, 300, 9.7e6},
                                  Row{ConnectionMode::residual, 600, 28.9e6},
                                  Row{ConnectionMode::full_shortcut, 600, 34.7e6}}) {
    EncoderConfig cfg{mode, {dim, dim, dim}, 300};
    const auto count = param_count(cfg, mlp, false).total();
    INFO(to_string(mode), " ", dim, "D: ", count);
    CHECK(std::abs(static_cast<double>(count) - published) / published < 0.10);

    // Matches what is actually allocated.
    auto enc = EncoderParams<float>::init(cfg, rng);
    auto cls = MLPParams<float>::init(mlp, 4 * cfg.output_dim(), rng);
    NamedTensors<float> all;
    enc.append_named(all, "");
    cls.append_named(all, "");
    std::uint64_t allocated = 0;
    for (auto& [name, t] : all) allocated += t.numel();
    CHECK(allocated == count);
  }
  EncoderConfig small{ConnectionMode::full_shortcut, {2, 3}, 4};
  CHECK(param_count(small, mlp, true, 10).embedding == 40);
}
