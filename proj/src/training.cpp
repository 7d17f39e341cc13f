#include "sse/training.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sse/checkpoint.hpp"
#include "sse/kernels.hpp"

namespace sse {

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix_seed(mix_seed(seed, stream), index);
}

enum Stream : std::uint64_t { kMixture = 1, kShuffle = 2, kDropout = 3 };

template <typename T>
Tensor<T> clone_tensor(const Tensor<T>& t) {
  return t.defined() ? t.clone() : t;
}

template <typename T>
LSTMDirectionParams<T> clone_dir(const LSTMDirectionParams<T>& p) {
  return {p.w_x.clone(), p.w_h.clone(), p.bias.clone()};
}

}  // namespace

template <typename T>
NLIModel<T> NLIModel<T>::create(Vocabulary vocab, const EncoderConfig& enc, const MLPConfig& mlp,
                                EmbeddingTable<T> embedding, std::uint64_t seed) {
  enc.validate();
  mlp.validate();
  if (embedding.vocab_size() != vocab.size()) {
    throw ConfigError("embedding table has " + std::to_string(embedding.vocab_size()) +
                      " rows but the vocabulary has " + std::to_string(vocab.size()) + " tokens");
  }
  if (embedding.dim() != enc.embed_dim) {
    throw ConfigError("embedding dimension " + std::to_string(embedding.dim()) +
                      " does not match encoder.embed_dim " + std::to_string(enc.embed_dim));
  }
  Rng rng(seed);
  NLIModel m;
  m.vocab = std::move(vocab);
  m.encoder_cfg = enc;
  m.mlp_cfg = mlp;
  m.embedding = std::move(embedding);
  m.embedding.matrix.set_requires_grad(m.embedding.fine_tune);
  m.embedding.zero_pad_row();
  m.encoder = EncoderParams<T>::init(enc, rng);
  m.classifier = MLPParams<T>::init(mlp, 4 * enc.output_dim(), rng);
  return m;
}

template <typename T>
NamedTensors<T> NLIModel<T>::named_parameters() const {
  NamedTensors<T> out;
  out.emplace_back(kEmbeddingName, embedding.matrix);
  encoder.append_named(out, "encoder.");
  classifier.append_named(out, "classifier.");
  return out;
}

template <typename T>
NamedTensors<T> NLIModel<T>::trainable_parameters() const {
  NamedTensors<T> out;
  for (auto& [name, t] : named_parameters()) {
    if (name == kEmbeddingName && !embedding.fine_tune) continue;
    out.emplace_back(name, t);
  }
  return out;
}

template <typename T>
void NLIModel<T>::zero_grad() {
  for (auto& [name, t] : named_parameters()) {
    Tensor<T> h = t;
    h.zero_grad();
  }
}

template <typename T>
NLIModel<T> NLIModel<T>::clone() const {
  NLIModel m;
  m.vocab = vocab;
  m.encoder_cfg = encoder_cfg;
  m.mlp_cfg = mlp_cfg;
  m.embedding = {clone_tensor(embedding.matrix), embedding.fine_tune};
  for (const auto& layer : encoder.layers) {
    m.encoder.layers.push_back({clone_dir(layer.forward), clone_dir(layer.backward)});
  }
  for (const auto& w : classifier.weights) m.classifier.weights.push_back(w.clone());
  for (const auto& b : classifier.biases) m.classifier.biases.push_back(b.clone());
  return m;
}

template <typename T>
Tensor<T> encode_sentence(const NLIModel<T>& model, std::span<const std::size_t> ids,
                          std::size_t valid_len) {
  return encode(model.encoder, model.encoder_cfg, lookup(model.embedding, ids), valid_len);
}

template <typename T>
Tensor<T> example_logits(const NLIModel<T>& model, const Batch& batch, std::size_t i, Mode mode,
                         Rng& rng) {
  Tensor<T> vp = encode_sentence(model, batch.premise(i), batch.premise_len[i]);
  Tensor<T> vh = encode_sentence(model, batch.hypothesis(i), batch.hypothesis_len[i]);
  return mlp_forward(model.mlp_cfg, model.classifier, matching_features(vp, vh), mode, rng);
}

template <typename T>
ForwardResult nli_forward(const NLIModel<T>& model, const Batch& batch, Mode mode,
                          std::uint64_t dropout_seed) {
  if (batch.size == 0) throw ConfigError("nli_forward: empty batch");
  NoGradScope<T> off;
  ForwardResult res;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size; ++i) {
    Rng rng(mix_seed(dropout_seed, i));
    Tensor<T> logits = example_logits(model, batch, i, mode, rng);
    total += static_cast<double>(softmax_cross_entropy(logits, batch.labels[i]).item());
    res.predictions.push_back(predict(logits));
  }
  res.mean_loss = total / static_cast<double>(batch.size);
  return res;
}

template <typename T>
ForwardResult compute_gradients(NLIModel<T>& model, const Batch& batch, Mode mode,
                                std::uint64_t dropout_seed, int threads) {
  if (batch.size == 0) throw ConfigError("compute_gradients: empty batch");
  model.zero_grad();
  const std::size_t n = batch.size;
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::vector<Tape<T>> tapes(shards);
  std::vector<double> losses(n);
  std::vector<std::size_t> preds(n);
  std::vector<std::exception_ptr> errors(shards);
  const T seed = T(1) / static_cast<T>(n);

  auto run_shard = [&](std::size_t s) {
    try {
      TapeScope<T> scope(tapes[s]);
      for (std::size_t i = s * n / shards; i < (s + 1) * n / shards; ++i) {
        Rng rng(mix_seed(dropout_seed, i));
        Tensor<T> logits = example_logits(model, batch, i, mode, rng);
        Tensor<T> loss = softmax_cross_entropy(logits, batch.labels[i]);
        losses[i] = static_cast<double>(loss.item());
        preds[i] = predict(logits);
        tapes[s].backward(loss, seed, false);
      }
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };

  if (shards == 1) {
    run_shard(0);
  } else {
    const auto ns = static_cast<long long>(shards);
#pragma omp parallel for num_threads(threads) schedule(static, 1)
    for (long long s = 0; s < ns; ++s) run_shard(static_cast<std::size_t>(s));
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& tape : tapes) tape.flush_leaf_grads();

  ForwardResult res;
  res.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  res.predictions = std::move(preds);
  return res;
}

template <typename T>
AdamState<T> AdamState<T>::init(const NamedTensors<T>& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  for (const auto& [name, t] : params) {
    s.names.push_back(name);
    s.m.emplace_back(t.numel(), T(0));
    s.v.emplace_back(t.numel(), T(0));
  }
  return s;
}

template <typename T>
void adam_step(AdamState<T>& state, const NamedTensors<T>& params, double lr) {
  if (params.size() != state.names.size()) {
    throw ConfigError("adam_step: optimizer tracks " + std::to_string(state.names.size()) +
                      " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& [name, t] = params[p];
    if (name != state.names[p] || t.numel() != state.m[p].size()) {
      throw ConfigError("adam_step: parameter '" + name + "' does not match optimizer slot '" +
                        state.names[p] + "'");
    }
    if (!t.requires_grad() || !t.has_grad()) continue;
    for (T g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
  }
  state.step += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2, eps = state.cfg.epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<T> t = params[p].second;
    if (!t.requires_grad()) continue;
    std::size_t first = 0;
    if (params[p].first == kEmbeddingName) first = t.dim(1);  // PAD row
    auto w = t.data();
    auto g = std::span<const T>(t.storage()->grad);
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = first; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : static_cast<double>(g[i]);
      const double mi = b1 * static_cast<double>(m[i]) + (1.0 - b1) * gi;
      const double vi = b2 * static_cast<double>(v[i]) + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + eps);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
    }
  }
}

double lr_schedule(std::size_t epoch, double base_lr, std::size_t decay_every) {
  if (decay_every == 0) throw ConfigError("lr_schedule: decay_every must be positive");
  return std::ldexp(base_lr, -static_cast<int>(epoch / decay_every));
}

std::uint64_t mixture_seed(std::uint64_t train_seed, std::size_t epoch) {
  return derive(train_seed, kMixture, epoch);
}

std::vector<NLIExample> sample_epoch(std::span<const NLIExample> primary,
                                     std::span<const NLIExample> aux, double rate,
                                     std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("sample_epoch: rate must lie in [0, 1]");
  // The small slack keeps products like 0.15 * 200 from flooring to 29.
  const auto take = std::min<std::size_t>(
      aux.size(), static_cast<std::size_t>(std::floor(rate * static_cast<double>(aux.size()) + 1e-9)));
  Rng rng(seed);
  std::vector<std::size_t> idx(aux.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<NLIExample> out(primary.begin(), primary.end());
  out.reserve(primary.size() + take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(aux[idx[i]]);
  shuffle(out.begin(), out.end(), rng);
  return out;
}

template <typename T>
EvalResult evaluate(const NLIModel<T>& model, std::span<const NLIExample> examples,
                    std::size_t batch_size, int threads) {
  if (examples.empty()) throw ConfigError("evaluate: empty dataset");
  std::vector<std::size_t> preds(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
  const auto n = static_cast<long long>(examples.size());
  const auto step = static_cast<long long>(std::max<std::size_t>(1, batch_size));
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1) if (threads > 1)
  for (long long start = 0; start < n; start += step) {
    const auto s = static_cast<std::size_t>(start);
    const auto e = static_cast<std::size_t>(std::min(n, start + step));
    try {
      Batch b = make_batch(examples.subspan(s, e - s), model.vocab);
      auto r = nli_forward(model, b, Mode::eval);
      std::copy(r.predictions.begin(), r.predictions.end(), preds.begin() + s);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  EvalResult res;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const bool ok = preds[i] == static_cast<std::size_t>(examples[i].label);
    res.correct += ok;
    res.total += 1;
    if (!examples[i].genre.empty()) {
      auto& g = res.per_genre[examples[i].genre];
      g.first += ok;
      g.second += 1;
    }
  }
  return res;
}

std::string EpochMetrics::to_json_line(bool include_time) const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["train_loss"] = train_loss;
  nlohmann::ordered_json dev = nlohmann::ordered_json::object();
  for (const auto& [name, acc] : dev_acc) dev[name] = acc;
  j["dev_acc"] = dev;
  j["selection"] = selection;
  j["improved"] = improved;
  j["wall_time_s"] = include_time ? nlohmann::ordered_json(wall_time_s) : nlohmann::ordered_json();
  return j.dump();
}

TrainResult train(NLIModel<float>& model, const TrainConfig& cfg, const TrainData& data,
                  const TrainOutputs& outputs) {
  cfg.validate();
  if (data.train.empty()) throw ConfigError("train: empty training set");
  if (data.dev.empty()) throw ConfigError("train: model selection needs at least one dev set");
  for (const auto& d : data.dev) {
    if (d.examples.empty()) throw ConfigError("train: dev set '" + d.name + "' is empty");
  }
  model.embedding.fine_tune = cfg.fine_tune;
  model.embedding.matrix.set_requires_grad(cfg.fine_tune);
  const int threads = cfg.deterministic ? 1 : cfg.threads;
  kernels::set_num_threads(threads);

  const NamedTensors<float> params = model.trainable_parameters();
  AdamState<float> adam = AdamState<float>::init(params);

  namespace fs = std::filesystem;
  std::ofstream metrics;
  std::ofstream timing;
  if (!outputs.out_dir.empty()) {
    fs::create_directories(outputs.out_dir);
    metrics.open(fs::path(outputs.out_dir) / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw IoError("cannot write metrics log in '" + outputs.out_dir + "'");
    if (cfg.deterministic) timing.open(fs::path(outputs.out_dir) / "timing.jsonl", std::ios::trunc);
  }

  TrainResult result;
  result.best = model.clone();
  result.best_optimizer = adam;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr_schedule(epoch, cfg.base_lr, cfg.decay_every);

    const auto epoch_data =
        sample_epoch(data.train, data.aux, cfg.mix_rate, mixture_seed(cfg.seed, epoch));
    const auto batches =
        make_batches(epoch_data, model.vocab, cfg.batch_size, derive(cfg.seed, kShuffle, epoch));
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto res = compute_gradients(model, batches[b], Mode::train,
                                         derive(derive(cfg.seed, kDropout, epoch), 0, b), threads);
      adam_step(adam, params, em.lr);
      loss_sum += res.mean_loss * static_cast<double>(batches[b].size);
    }
    em.train_loss = loss_sum / static_cast<double>(epoch_data.size());

    double acc_sum = 0.0;
    for (const auto& d : data.dev) {
      const double acc = evaluate(model, d.examples, 64, threads).accuracy();
      em.dev_acc.emplace_back(d.name, acc);
      acc_sum += acc;
    }
    em.selection = acc_sum / static_cast<double>(data.dev.size());
    em.improved = em.selection > result.best_score;
    em.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const nlohmann::json extra = {{"epoch", epoch}, {"selection", em.selection}};
    if (em.improved) {
      result.best = model.clone();
      result.best_optimizer = adam;
      result.best_epoch = epoch;
      result.best_score = em.selection;
      if (!outputs.out_dir.empty()) {
        save_checkpoint(result.best, &result.best_optimizer,
                        (fs::path(outputs.out_dir) / "best.ckpt").string(), extra);
      }
    }
    if (!outputs.out_dir.empty()) {
      save_checkpoint(model, &adam, (fs::path(outputs.out_dir) / "last.ckpt").string(), extra);
      metrics << em.to_json_line(!cfg.deterministic) << '\n' << std::flush;
      if (timing.is_open()) {
        timing << nlohmann::json{{"epoch", epoch}, {"wall_time_s", em.wall_time_s}}.dump() << '\n'
               << std::flush;
      }
    }
    result.log.push_back(em);
    if (outputs.on_epoch) outputs.on_epoch(em);
  }
  return result;
}

#define SSE_INSTANTIATE_TRAINING(T)                                                               \
  template struct NLIModel<T>;                                                                    \
  template struct AdamState<T>;                                                                   \
  template Tensor<T> encode_sentence(const NLIModel<T>&, std::span<const std::size_t>,            \
                                     std::size_t);                                                \
  template Tensor<T> example_logits(const NLIModel<T>&, const Batch&, std::size_t, Mode, Rng&);   \
  template ForwardResult nli_forward(const NLIModel<T>&, const Batch&, Mode, std::uint64_t);      \
  template ForwardResult compute_gradients(NLIModel<T>&, const Batch&, Mode, std::uint64_t, int); \
  template void adam_step(AdamState<T>&, const NamedTensors<T>&, double);                         \
  template EvalResult evaluate(const NLIModel<T>&, std::span<const NLIExample>, std::size_t, int);

SSE_INSTANTIATE_TRAINING(float)
SSE_INSTANTIATE_TRAINING(double)

}  // namespace sse
