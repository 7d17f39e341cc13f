#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sse/classifier.hpp"
#include "sse/data.hpp"
#include "sse/encoder.hpp"

namespace sse {

struct TrainConfig {
  std::size_t batch_size = 32;
  double base_lr = 0.0002;
  std::size_t decay_every = 2;  // epochs per halving
  std::size_t max_epochs = 10;
  std::uint64_t seed = 1;
  double mix_rate = 0.15;  // fraction of the auxiliary set added each epoch
  bool fine_tune = true;
  int threads = 1;
  bool deterministic = true;

  void validate() const;
};

struct SynthSplit {
  std::size_t train = 3000;
  std::size_t dev = 600;
  std::size_t vocab_size = 64;
  std::size_t max_len = 12;
  std::uint64_t seed = 1;
};

struct DataConfig {
  std::string train;      // primary training set (JSONL)
  std::string aux_train;  // mixed in at mix_rate per epoch, optional
  std::map<std::string, std::string> dev;
  std::optional<SynthSplit> synthetic;  // replaces the files when set
};

struct EmbeddingConfig {
  std::string path;  // GloVe text file, empty for random initialisation
  std::uint64_t seed = 7;
};

// Everything a run needs. Defaults are the strongest single model: three
// shortcut-stacked layers (512, 1024, 2048), a 2 x 1600 relu MLP and
// fine-tuned 300-d embeddings.
struct RunConfig {
  EncoderConfig encoder;
  MLPConfig mlp;
  TrainConfig train;
  DataConfig data;
  EmbeddingConfig embedding;
  std::string out_dir = "runs/default";

  void validate() const;
};

nlohmann::json to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MLPConfig& c);
MLPConfig mlp_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
// Strict: unknown keys and wrongly typed values raise ConfigError naming the
// field. Missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);

// Applies "a.b.c=value" to a JSON document. The value is read as JSON when it
// parses (numbers, booleans, arrays) and as a plain string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// defaults <- file (if non-empty) <- overrides, in that order.
RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides);

// Relative paths resolve against $SSE_DATA_DIR when it is set.
std::string resolve_data_path(const std::string& path);

}  // namespace sse
