#include "sse/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sse {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
  if (decay_every < 1) throw ConfigError("train.decay_every must be at least 1");
  if (!(mix_rate >= 0.0 && mix_rate <= 1.0)) throw ConfigError("train.mix_rate must lie in [0, 1]");
  if (threads < 1) throw ConfigError("train.threads must be at least 1");
}

void RunConfig::validate() const {
  encoder.validate();
  mlp.validate();
  train.validate();
}

namespace {

// Reads j[key] into `out` when present; wraps type errors with the field path.
template <typename V>
void read(const json& j, const char* key, V& out, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<V>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + path + key + "' has the wrong type: " + it->dump());
  }
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ConfigError("config section '" + (path.empty() ? std::string("<root>") : path) +
                      "' must be an object");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
  std::set<std::string> k(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!k.count(it.key())) throw ConfigError("unknown config field '" + path + it.key() + "'");
  }
}

}  // namespace

json to_json(const EncoderConfig& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"layer_dims", c.layer_dims},
          {"embed_dim", c.embed_dim}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  require_object(j, "encoder");
  reject_unknown(j, {"mode", "layer_dims", "embed_dim"}, "encoder.");
  EncoderConfig c;
  std::string mode(to_string(c.mode));
  read(j, "mode", mode, "encoder.");
  c.mode = parse_connection_mode(mode);
  read(j, "layer_dims", c.layer_dims, "encoder.");
  read(j, "embed_dim", c.embed_dim, "encoder.");
  return c;
}

json to_json(const MLPConfig& c) {
  return {{"num_hidden_layers", c.num_hidden_layers},
          {"hidden_units", c.hidden_units},
          {"activation", std::string(to_string(c.activation))},
          {"dropout", c.dropout_rate}};
}

MLPConfig mlp_config_from_json(const json& j) {
  require_object(j, "mlp");
  reject_unknown(j, {"num_hidden_layers", "hidden_units", "activation", "dropout"}, "mlp.");
  MLPConfig c;
  std::string act(to_string(c.activation));
  read(j, "num_hidden_layers", c.num_hidden_layers, "mlp.");
  read(j, "hidden_units", c.hidden_units, "mlp.");
  read(j, "activation", act, "mlp.");
  read(j, "dropout", c.dropout_rate, "mlp.");
  c.activation = parse_activation(act);
  return c;
}

json to_json(const RunConfig& c) {
  json train = {{"batch_size", c.train.batch_size},   {"base_lr", c.train.base_lr},
                {"decay_every", c.train.decay_every}, {"max_epochs", c.train.max_epochs},
                {"seed", c.train.seed},               {"mix_rate", c.train.mix_rate},
                {"fine_tune", c.train.fine_tune},     {"threads", c.train.threads},
                {"deterministic", c.train.deterministic}};
  json data = {{"train", c.data.train}, {"aux_train", c.data.aux_train}, {"dev", c.data.dev}};
  if (c.data.synthetic) {
    const auto& s = *c.data.synthetic;
    data["synthetic"] = {{"train", s.train},
                         {"dev", s.dev},
                         {"vocab_size", s.vocab_size},
                         {"max_len", s.max_len},
                         {"seed", s.seed}};
  } else {
    data["synthetic"] = nullptr;
  }
  return {{"encoder", to_json(c.encoder)},
          {"mlp", to_json(c.mlp)},
          {"train", train},
          {"data", data},
          {"embedding", {{"path", c.embedding.path}, {"seed", c.embedding.seed}}},
          {"out_dir", c.out_dir}};
}

RunConfig run_config_from_json(const json& j) {
  require_object(j, "");
  reject_unknown(j, {"encoder", "mlp", "train", "data", "embedding", "out_dir"}, "");
  RunConfig c;
  if (auto it = j.find("encoder"); it != j.end()) c.encoder = encoder_config_from_json(*it);
  if (auto it = j.find("mlp"); it != j.end()) c.mlp = mlp_config_from_json(*it);
  if (auto it = j.find("train"); it != j.end()) {
    require_object(*it, "train");
    reject_unknown(*it,
                   {"batch_size", "base_lr", "decay_every", "max_epochs", "seed", "mix_rate",
                    "fine_tune", "threads", "deterministic"},
                   "train.");
    read(*it, "batch_size", c.train.batch_size, "train.");
    read(*it, "base_lr", c.train.base_lr, "train.");
    read(*it, "decay_every", c.train.decay_every, "train.");
    read(*it, "max_epochs", c.train.max_epochs, "train.");
    read(*it, "seed", c.train.seed, "train.");
    read(*it, "mix_rate", c.train.mix_rate, "train.");
    read(*it, "fine_tune", c.train.fine_tune, "train.");
    read(*it, "threads", c.train.threads, "train.");
    read(*it, "deterministic", c.train.deterministic, "train.");
  }
  if (auto it = j.find("data"); it != j.end()) {
    require_object(*it, "data");
    reject_unknown(*it, {"train", "aux_train", "dev", "synthetic"}, "data.");
    read(*it, "train", c.data.train, "data.");
    read(*it, "aux_train", c.data.aux_train, "data.");
    read(*it, "dev", c.data.dev, "data.");
    if (auto s = it->find("synthetic"); s != it->end() && !s->is_null()) {
      require_object(*s, "data.synthetic");
      reject_unknown(*s, {"train", "dev", "vocab_size", "max_len", "seed"}, "data.synthetic.");
      SynthSplit sp;
      read(*s, "train", sp.train, "data.synthetic.");
      read(*s, "dev", sp.dev, "data.synthetic.");
      read(*s, "vocab_size", sp.vocab_size, "data.synthetic.");
      read(*s, "max_len", sp.max_len, "data.synthetic.");
      read(*s, "seed", sp.seed, "data.synthetic.");
      c.data.synthetic = sp;
    }
  }
  if (auto it = j.find("embedding"); it != j.end()) {
    require_object(*it, "embedding");
    reject_unknown(*it, {"path", "seed"}, "embedding.");
    read(*it, "path", c.embedding.path, "embedding.");
    read(*it, "seed", c.embedding.seed, "embedding.");
  }
  read(j, "out_dir", c.out_dir, "");
  c.validate();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    node = &(*node)[parts[i]];
  }
  if (node->is_null()) *node = json::object();
  (*node)[parts.back()] = value;
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = to_json(RunConfig{});
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
    // Validate the file on its own first so unknown keys are reported
    // against the file rather than the merged document.
    run_config_from_json(file);
    doc.merge_patch(file);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return run_config_from_json(doc);
}

std::string resolve_data_path(const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  if (const char* dir = std::getenv("SSE_DATA_DIR"); dir && *dir) {
    return (std::filesystem::path(dir) / p).string();
  }
  return path;
}

}  // namespace sse
