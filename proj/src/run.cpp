#include "sse/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sse/errors.hpp"
#include "sse/rng.hpp"

namespace sse {

namespace {

// Seed stream for weight initialisation, next to the training module's
// mixture / shuffle / dropout streams.
constexpr std::uint64_t kInitStream = 4;
constexpr std::uint64_t kSynthDevStream = 5;

std::vector<NLIExample> load_file(const std::string& path, const std::string& role,
                                  std::vector<std::string>& warnings) {
  const std::string resolved = resolve_data_path(path);
  auto ds = load_nli_jsonl(resolved);
  if (ds.skipped_no_consensus > 0) {
    warnings.push_back(role + ": skipped " + std::to_string(ds.skipped_no_consensus) +
                       " examples without a gold label");
  }
  for (const auto& m : ds.malformed) {
    warnings.push_back(role + ": line " + std::to_string(m.line) + ": " + m.reason);
  }
  return std::move(ds.examples);
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fmt_acc(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

template <typename V>
std::vector<V> read_list(const nlohmann::json& j, const char* key,
                         const std::function<V(const nlohmann::json&)>& conv) {
  std::vector<V> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array() || it->empty()) {
    throw ConfigError(std::string("grid field '") + key + "' must be a non-empty array");
  }
  for (const auto& v : *it) out.push_back(conv(v));
  return out;
}

std::size_t as_size(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("grid field '" + what + "' must hold non-negative integers, got " + v.dump());
  }
  return v.get<std::size_t>();
}

}  // namespace

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.data.synthetic) {
    const auto& s = *cfg.data.synthetic;
    out.data.train = synth_generate({s.train, s.vocab_size, s.max_len, s.seed});
    out.data.dev.push_back(
        {"dev", synth_generate({s.dev, s.vocab_size, s.max_len, mix_seed(s.seed, kSynthDevStream)})});
    return out;
  }
  if (cfg.data.train.empty()) {
    throw ConfigError("data.train is not set (and data.synthetic is off)");
  }
  if (cfg.data.dev.empty()) throw ConfigError("data.dev needs at least one named dev set");
  out.data.train = load_file(cfg.data.train, "data.train", out.warnings);
  if (!cfg.data.aux_train.empty()) {
    out.data.aux = load_file(cfg.data.aux_train, "data.aux_train", out.warnings);
  }
  for (const auto& [name, path] : cfg.data.dev) {
    out.data.dev.push_back({name, load_file(path, "data.dev." + name, out.warnings)});
  }
  return out;
}

NLIModel<float> build_model(const RunConfig& cfg, const TrainData& data, LoadReport* report) {
  cfg.encoder.validate();
  cfg.mlp.validate();
  auto corpus = corpus_of(data.train);
  const auto aux = corpus_of(data.aux);
  corpus.insert(corpus.end(), aux.begin(), aux.end());
  Vocabulary vocab = Vocabulary::build(corpus);

  const std::size_t d = cfg.encoder.embed_dim;
  EmbeddingTable<float> table =
      cfg.embedding.path.empty()
          ? random_embeddings<float>(vocab, d, cfg.embedding.seed, cfg.train.fine_tune)
          : load_pretrained<float>(resolve_data_path(cfg.embedding.path), vocab, d,
                                   cfg.embedding.seed, cfg.train.fine_tune, report);
  return NLIModel<float>::create(std::move(vocab), cfg.encoder, cfg.mlp, std::move(table),
                                 mix_seed(cfg.train.seed, kInitStream));
}

TrainResult run_training(const RunConfig& cfg, const TrainData& data, NLIModel<float>& model,
                         std::function<void(const EpochMetrics&)> on_epoch) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream snap(fs::path(cfg.out_dir) / "config.json", std::ios::trunc);
    if (!snap) throw IoError("cannot write config snapshot in '" + cfg.out_dir + "'");
    snap << to_json(cfg).dump(2) << '\n';
  }
  return train(model, cfg.train, data, {cfg.out_dir, std::move(on_epoch)});
}

AblationGrid AblationGrid::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("ablation grid must be a JSON object");
  static const std::vector<std::string> known{"mode", "layer_dims", "fine_tune", "mlp", "seeds",
                                              "epochs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("unknown grid field '" + it.key() + "'");
    }
  }
  AblationGrid g;
  g.modes = read_list<ConnectionMode>(j, "mode", [](const nlohmann::json& v) {
    if (!v.is_string()) throw ConfigError("grid field 'mode' must hold strings");
    return parse_connection_mode(v.get<std::string>());
  });
  g.layer_dims = read_list<std::vector<std::size_t>>(j, "layer_dims", [](const nlohmann::json& v) {
    if (!v.is_array() || v.empty()) throw ConfigError("grid field 'layer_dims' must hold arrays");
    std::vector<std::size_t> dims;
    for (const auto& x : v) dims.push_back(as_size(x, "layer_dims"));
    return dims;
  });
  g.fine_tune = read_list<bool>(j, "fine_tune", [](const nlohmann::json& v) {
    if (!v.is_boolean()) throw ConfigError("grid field 'fine_tune' must hold booleans");
    return v.get<bool>();
  });
  g.mlp = read_list<std::pair<std::size_t, Activation>>(j, "mlp", [](const nlohmann::json& v) {
    if (!v.is_object() || !v.contains("num_hidden_layers") || !v.contains("activation") ||
        v.size() != 2 || !v["activation"].is_string()) {
      throw ConfigError(
          "grid field 'mlp' must hold {\"num_hidden_layers\": n, \"activation\": name} objects");
    }
    return std::pair{as_size(v["num_hidden_layers"], "mlp.num_hidden_layers"),
                     parse_activation(v["activation"].get<std::string>())};
  });
  g.seeds = read_list<std::uint64_t>(j, "seeds", [](const nlohmann::json& v) {
    return static_cast<std::uint64_t>(as_size(v, "seeds"));
  });
  if (auto it = j.find("epochs"); it != j.end()) g.epochs = as_size(*it, "epochs");
  return g;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const AblationGrid& grid,
                                      const TrainData& data, const AblationProgress& progress) {
  // An absent axis is a single-valued axis holding the base setting.
  const auto modes = grid.modes.empty() ? std::vector{base.encoder.mode} : grid.modes;
  const auto dims = grid.layer_dims.empty() ? std::vector<std::vector<std::size_t>>{base.encoder.layer_dims}
                                             : grid.layer_dims;
  const auto tunes = grid.fine_tune.empty() ? std::vector{base.train.fine_tune} : grid.fine_tune;
  const auto mlps = grid.mlp.empty()
                        ? std::vector{std::pair{base.mlp.num_hidden_layers, base.mlp.activation}}
                        : grid.mlp;
  const auto seeds = grid.seeds.empty() ? std::vector{base.train.seed} : grid.seeds;
  const std::size_t budget = grid.epochs ? grid.epochs : base.train.max_epochs;

  std::vector<AblationRow> rows;
  for (auto mode : modes) {
    for (const auto& ld : dims) {
      for (bool ft : tunes) {
        for (const auto& [layers, act] : mlps) {
          for (auto seed : seeds) {
            RunConfig cfg = base;
            cfg.encoder.mode = mode;
            cfg.encoder.layer_dims = ld;
            cfg.train.fine_tune = ft;
            cfg.mlp.num_hidden_layers = layers;
            cfg.mlp.activation = act;
            cfg.train.seed = seed;
            cfg.train.max_epochs = budget;

            AblationRow row{mode, ld, ft, layers, act, seed, budget, "ok", "", {}, 0.0};
            try {
              cfg.validate();
            } catch (const ConfigError& e) {
              row.status = "skipped";
              row.reason = e.what();
            }
            if (row.status == "ok") {
              auto model = build_model(cfg, data);
              auto result = train(model, cfg.train, data);
              row.dev_acc = result.log[result.best_epoch].dev_acc;
              row.selection = result.best_score;
            }
            if (progress) progress(row);
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::vector<std::string> dev_names;
  for (const auto& r : rows) {
    for (const auto& [name, acc] : r.dev_acc) {
      if (std::find(dev_names.begin(), dev_names.end(), name) == dev_names.end()) {
        dev_names.push_back(name);
      }
    }
  }

  std::ostringstream os;
  os << "mode,layer_dims,fine_tune,mlp_layers,activation,seed,budget_epochs";
  for (const auto& n : dev_names) os << ',' << csv_field("acc_" + n);
  os << ",selection,status,reason\n";

  auto config_cols = [](const AblationRow& r) {
    return std::string(to_string(r.mode)) + ',' + join_dims(r.layer_dims) + ',' +
           (r.fine_tune ? "true" : "false") + ',' + std::to_string(r.mlp_layers) + ',' +
           std::string(to_string(r.activation));
  };
  auto accs = [&](const std::vector<std::pair<std::string, double>>& dev) {
    std::string s;
    for (const auto& n : dev_names) {
      s += ',';
      for (const auto& [name, acc] : dev) {
        if (name == n) s += fmt_acc(acc);
      }
    }
    return s;
  };

  // Groups keep first-appearance order so mean rows follow the grid order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const AblationRow*>> groups;
  for (const auto& r : rows) {
    const std::string key = config_cols(r);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
    os << key << ',' << r.seed << ',' << r.budget_epochs << accs(r.dev_acc) << ','
       << (r.status == "ok" ? fmt_acc(r.selection) : "") << ',' << r.status << ','
       << csv_field(r.reason) << '\n';
  }
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<std::pair<std::string, double>> mean_dev;
    double sel = 0.0;
    std::size_t ok = 0;
    for (const auto* r : g) {
      if (r->status != "ok") continue;
      ++ok;
      sel += r->selection;
      for (const auto& [name, acc] : r->dev_acc) {
        auto it = std::find_if(mean_dev.begin(), mean_dev.end(),
                               [&](const auto& p) { return p.first == name; });
        if (it == mean_dev.end()) {
          mean_dev.emplace_back(name, acc);
        } else {
          it->second += acc;
        }
      }
    }
    os << key << ",mean," << g.front()->budget_epochs;
    if (ok == 0) {
      os << accs({}) << ",,skipped," << csv_field(g.front()->reason) << '\n';
      continue;
    }
    for (auto& [name, acc] : mean_dev) acc /= static_cast<double>(ok);
    os << accs(mean_dev) << ',' << fmt_acc(sel / static_cast<double>(ok)) << ",ok,\n";
  }
  return os.str();
}

double mean_selection(const std::vector<AblationRow>& rows, ConnectionMode mode) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.mode == mode && r.status == "ok") {
      sum += r.selection;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace sse
