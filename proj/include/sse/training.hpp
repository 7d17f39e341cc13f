#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sse/classifier.hpp"
#include "sse/config.hpp"
#include "sse/data.hpp"
#include "sse/embedding.hpp"
#include "sse/encoder.hpp"

namespace sse {

// Siamese NLI model: one encoder shared by premise and hypothesis.
template <typename T>
struct NLIModel {
  Vocabulary vocab;
  EncoderConfig encoder_cfg;
  MLPConfig mlp_cfg;
  EmbeddingTable<T> embedding;
  EncoderParams<T> encoder;
  MLPParams<T> classifier;

  static NLIModel create(Vocabulary vocab, const EncoderConfig& enc, const MLPConfig& mlp,
                         EmbeddingTable<T> embedding, std::uint64_t seed);

  // Every tensor, embedding table included, in a fixed order.
  NamedTensors<T> named_parameters() const;
  // Tensors the optimiser updates (the table only when fine-tuning).
  NamedTensors<T> trainable_parameters() const;
  void zero_grad();
  NLIModel clone() const;
};

inline constexpr const char* kEmbeddingName = "embedding.weight";

template <typename T>
Tensor<T> encode_sentence(const NLIModel<T>& model, std::span<const std::size_t> ids,
                          std::size_t valid_len);

// Logits for example i of a batch. Dropout draws from `rng` in train mode.
template <typename T>
Tensor<T> example_logits(const NLIModel<T>& model, const Batch& batch, std::size_t i, Mode mode,
                         Rng& rng);

struct ForwardResult {
  double mean_loss = 0.0;
  std::vector<std::size_t> predictions;
};

// Per-example dropout streams are derived from (dropout_seed, example index),
// so results do not depend on how examples are split across threads.
template <typename T>
ForwardResult nli_forward(const NLIModel<T>& model, const Batch& batch, Mode mode,
                          std::uint64_t dropout_seed = 0);

// Zeroes the gradients, then accumulates d(mean batch loss) into every
// trainable tensor. With threads > 1 the batch is split into contiguous
// shards, each with its own tape, and shard gradients are summed in shard
// order.
template <typename T>
ForwardResult compute_gradients(NLIModel<T>& model, const Batch& batch, Mode mode,
                                std::uint64_t dropout_seed, int threads = 1);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig cfg;
  std::uint64_t step = 0;
  std::vector<std::string> names;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static AdamState init(const NamedTensors<T>& params, AdamConfig cfg = {});
};

// One bias-corrected Adam update on every parameter with requires_grad set.
// Row 0 of the embedding table (PAD) is never touched. A NaN or infinite
// gradient aborts the whole step with a NumericError naming the parameter.
template <typename T>
void adam_step(AdamState<T>& state, const NamedTensors<T>& params, double lr);

// base_lr * 0.5^floor(epoch / decay_every), epochs counted from 0.
double lr_schedule(std::size_t epoch, double base_lr = 0.0002, std::size_t decay_every = 2);

// All of `primary` plus floor(rate * |aux|) aux examples drawn without
// replacement, shuffled together. The draw is a function of `seed`.
std::vector<NLIExample> sample_epoch(std::span<const NLIExample> primary,
                                     std::span<const NLIExample> aux, double rate,
                                     std::uint64_t seed);

// The seed train() passes to sample_epoch for a given epoch.
std::uint64_t mixture_seed(std::uint64_t train_seed, std::size_t epoch);

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_genre;  // correct, total
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

// Eval mode (no dropout). Throws ConfigError on an empty dataset.
template <typename T>
EvalResult evaluate(const NLIModel<T>& model, std::span<const NLIExample> examples,
                    std::size_t batch_size = 64, int threads = 1);

struct DevSet {
  std::string name;
  std::vector<NLIExample> examples;
};

struct TrainData {
  std::vector<NLIExample> train;
  std::vector<NLIExample> aux;
  std::vector<DevSet> dev;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::vector<std::pair<std::string, double>> dev_acc;
  double selection = 0.0;  // mean dev accuracy
  double wall_time_s = 0.0;
  bool improved = false;

  // Line-delimited record. Wall time is written as null when
  // include_time is false so deterministic runs log identical bytes.
  std::string to_json_line(bool include_time) const;
};

struct TrainResult {
  NLIModel<float> best;
  AdamState<float> best_optimizer;
  std::vector<EpochMetrics> log;
  std::size_t best_epoch = 0;
  double best_score = -1.0;
};

struct TrainOutputs {
  std::string out_dir;  // empty: keep everything in memory
  // Called after every epoch, after artifacts are written.
  std::function<void(const EpochMetrics&)> on_epoch;
};

// Per epoch: resample the mixture, shuffle into batches, Adam over every
// batch (the last may be short), evaluate every dev set, keep the model with
// the best mean dev accuracy. With an output directory this writes
// metrics.jsonl, last.ckpt after each full epoch and best.ckpt.
TrainResult train(NLIModel<float>& model, const TrainConfig& cfg, const TrainData& data,
                  const TrainOutputs& outputs = {});

}  // namespace sse
