// sse: command-line front end (train, eval, encode, ablate, gradcheck,
// params, synth).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sse/checkpoint.hpp"
#include "sse/config.hpp"
#include "sse/diagnostics.hpp"
#include "sse/errors.hpp"
#include "sse/ops.hpp"
#include "sse/run.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Globals {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<bool> deterministic;
};

std::string error_kind(const std::exception& e) {
  using namespace sse;
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const IndexError*>(&e)) return "IndexError";
  if (dynamic_cast<const NumericError*>(&e)) return "NumericError";
  if (dynamic_cast<const EmptySequenceError*>(&e)) return "EmptySequenceError";
  if (dynamic_cast<const NonDeterministicError*>(&e)) return "NonDeterministicError";
  if (dynamic_cast<const FormatError*>(&e)) return "FormatError";
  if (dynamic_cast<const VersionError*>(&e)) return "VersionError";
  if (dynamic_cast<const TruncatedError*>(&e)) return "TruncatedError";
  if (dynamic_cast<const UnknownTensorError*>(&e)) return "UnknownTensorError";
  return "Error";
}

// defaults <- --config <- --set, then the dedicated flags on top.
sse::RunConfig resolve(const Globals& g) {
  std::vector<std::string> sets = g.sets;
  if (g.seed) sets.push_back("train.seed=" + std::to_string(*g.seed));
  if (g.out_dir) sets.push_back("out_dir=" + json(*g.out_dir).dump());
  if (g.threads) sets.push_back("train.threads=" + std::to_string(*g.threads));
  if (g.deterministic) sets.push_back(std::string("train.deterministic=") + (*g.deterministic ? "true" : "false"));
  auto cfg = sse::resolve_config(g.config, sets);
  cfg.validate();
  return cfg;
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

ordered_json dev_json(const std::vector<std::pair<std::string, double>>& dev) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, acc] : dev) j[name] = acc;
  return j;
}

// --- train -----------------------------------------------------------------

int cmd_train(const Globals& g) {
  const auto cfg = resolve(g);
  const auto loaded = sse::load_data(cfg);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';

  sse::LoadReport report;
  auto model = sse::build_model(cfg, loaded.data, &report);
  if (!cfg.embedding.path.empty()) {
    std::cerr << "embeddings: " << report.found << " of " << report.vocab_tokens
              << " vocabulary tokens found in " << cfg.embedding.path << '\n';
  }

  auto on_epoch = [&](const sse::EpochMetrics& m) {
    if (g.json) return;
    std::cout << "epoch " << m.epoch << "  lr " << m.lr << "  loss " << std::fixed
              << std::setprecision(4) << m.train_loss;
    for (const auto& [name, acc] : m.dev_acc) std::cout << "  " << name << ' ' << acc;
    std::cout << (m.improved ? "  *" : "") << std::defaultfloat << std::setprecision(6) << '\n'
              << std::flush;
  };

  sse::TrainResult result;
  try {
    result = sse::run_training(cfg, loaded.data, model, on_epoch);
  } catch (const std::exception& e) {
    // Whatever was written so far stays; the report says why it stopped.
    std::ofstream err(fs::path(cfg.out_dir) / "error.json", std::ios::trunc);
    err << ordered_json{{"error", error_kind(e)}, {"message", e.what()}}.dump(2) << '\n';
    throw;
  }

  if (g.json) {
    ordered_json epochs = ordered_json::array();
    for (const auto& m : result.log) {
      epochs.push_back(ordered_json::parse(m.to_json_line(!cfg.train.deterministic)));
    }
    print_json({{"status", "ok"},
                {"out_dir", cfg.out_dir},
                {"best_epoch", result.best_epoch},
                {"best_score", result.best_score},
                {"epochs", epochs}});
  } else {
    std::cout << "best epoch " << result.best_epoch << ", mean dev accuracy " << result.best_score
              << "\nartifacts in " << cfg.out_dir << '\n';
  }
  return 0;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const Globals& g, const std::string& ckpt_path, const std::string& data_path) {
  const auto ckpt = sse::load_checkpoint(ckpt_path);
  const auto ds = sse::load_nli_jsonl(sse::resolve_data_path(data_path));
  for (const auto& m : ds.malformed) {
    std::cerr << "warning: line " << m.line << ": " << m.reason << '\n';
  }
  if (ds.examples.empty()) throw sse::ConfigError("dataset '" + data_path + "' has no usable examples");

  // A dataset sharing no token with the checkpoint vocabulary was almost
  // certainly paired with the wrong checkpoint.
  bool any_known = false;
  for (const auto& ex : ds.examples) {
    for (const auto* seq : {&ex.premise, &ex.hypothesis}) {
      for (const auto& tok : *seq) any_known = any_known || ckpt.model.vocab.find(tok).has_value();
    }
    if (any_known) break;
  }
  if (!any_known) {
    throw sse::ConfigError("no token of '" + data_path +
                           "' occurs in the checkpoint vocabulary; wrong checkpoint?");
  }

  const int threads = g.threads.value_or(1);
  const auto res = sse::evaluate(ckpt.model, ds.examples, 64, threads);
  if (g.json) {
    ordered_json genres = ordered_json::object();
    for (const auto& [genre, ct] : res.per_genre) {
      genres[genre] = {{"accuracy", static_cast<double>(ct.first) / static_cast<double>(ct.second)},
                       {"correct", ct.first},
                       {"total", ct.second}};
    }
    print_json({{"accuracy", res.accuracy()},
                {"correct", res.correct},
                {"total", res.total},
                {"per_genre", genres}});
  } else {
    std::cout << "accuracy " << std::fixed << std::setprecision(4) << res.accuracy() << " ("
              << res.correct << '/' << res.total << ")\n";
    for (const auto& [genre, ct] : res.per_genre) {
      std::cout << "  " << std::left << std::setw(16) << genre << ' '
                << static_cast<double>(ct.first) / static_cast<double>(ct.second) << " ("
                << ct.first << '/' << ct.second << ")\n";
    }
  }
  return 0;
}

// --- encode ----------------------------------------------------------------

int cmd_encode(const Globals& g, const std::string& ckpt_path, const std::string& sentences_path,
               const std::string& output, const std::string& format) {
  const auto ckpt = sse::load_checkpoint(ckpt_path);
  std::ifstream in(sentences_path);
  if (!in) throw sse::IoError("cannot open sentences file '" + sentences_path + "'");

  std::vector<std::vector<float>> vectors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = sse::tokenize_raw(line);
    if (tokens.empty()) throw sse::ParseError("empty sentence in '" + sentences_path + "'", lineno);
    const auto ids = ckpt.model.vocab.encode(tokens);
    const auto v = sse::encode_sentence(ckpt.model, ids, ids.size());
    vectors.emplace_back(v.data().begin(), v.data().end());
  }
  if (vectors.empty()) throw sse::ParseError("no sentences in '" + sentences_path + "'", 1);
  const std::size_t dim = vectors.front().size();

  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::binary | std::ios::trunc);
    if (!file) throw sse::IoError("cannot write '" + output + "'");
  }
  std::ostream& out = output.empty() ? std::cout : file;
  if (format == "binary") {
    // Raw little-endian float32, rows back to back.
    for (const auto& v : vectors) {
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
  } else if (!(g.json && output.empty())) {
    out << std::setprecision(9);
    for (const auto& v : vectors) {
      for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
      out << '\n';
    }
  }
  out.flush();

  if (g.json) {
    ordered_json j{{"count", vectors.size()}, {"dim", dim}, {"format", format}};
    if (!output.empty()) {
      j["output"] = output;
    } else if (format != "binary") {
      j["vectors"] = vectors;
    }
    if (!(output.empty() && format == "binary")) print_json(j);
  }
  return 0;
}

// --- ablate ----------------------------------------------------------------

int cmd_ablate(const Globals& g, const std::string& grid_path, std::string csv_path) {
  const auto cfg = resolve(g);
  std::ifstream gin(grid_path);
  if (!gin) throw sse::IoError("cannot open grid file '" + grid_path + "'");
  json grid_json;
  try {
    grid_json = json::parse(gin);
  } catch (const json::exception& e) {
    throw sse::ConfigError("grid file '" + grid_path + "' is not valid JSON: " + e.what());
  }
  const auto grid = sse::AblationGrid::from_json(grid_json);
  const auto loaded = sse::load_data(cfg);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';

  auto progress = [](const sse::AblationRow& r) {
    std::cerr << sse::to_string(r.mode) << " seed " << r.seed << ": " << r.status;
    if (r.status == "ok") std::cerr << " " << r.selection;
    if (!r.reason.empty()) std::cerr << " (" << r.reason << ")";
    std::cerr << '\n';
  };
  const auto rows = sse::run_ablation(cfg, grid, loaded.data, progress);
  const std::string csv = sse::ablation_csv(rows);

  if (csv_path.empty()) csv_path = (fs::path(cfg.out_dir) / "ablation.csv").string();
  if (auto parent = fs::path(csv_path).parent_path(); !parent.empty()) fs::create_directories(parent);
  {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw sse::IoError("cannot write '" + csv_path + "'");
    out << csv;
  }

  if (g.json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back({{"mode", sse::to_string(r.mode)},
                     {"layer_dims", r.layer_dims},
                     {"fine_tune", r.fine_tune},
                     {"mlp_layers", r.mlp_layers},
                     {"activation", sse::to_string(r.activation)},
                     {"seed", r.seed},
                     {"budget_epochs", r.budget_epochs},
                     {"dev_acc", dev_json(r.dev_acc)},
                     {"selection", r.status == "ok" ? ordered_json(r.selection) : ordered_json()},
                     {"status", r.status},
                     {"reason", r.reason}});
    }
    print_json({{"csv", csv_path}, {"rows", arr}});
  } else {
    std::cout << csv;
  }
  return 0;
}

// --- gradcheck -------------------------------------------------------------

int cmd_gradcheck(const Globals& g, const std::string& corrupt) {
  if (!corrupt.empty()) {
    const auto names = sse::op_names();
    if (std::find(names.begin(), names.end(), corrupt) == names.end()) {
      throw sse::ConfigError("--corrupt: unknown op '" + corrupt + "'");
    }
    sse::corrupt_backward(corrupt);
  }

  std::vector<std::string> failures;
  ordered_json ops = ordered_json::array();
  for (const auto& c : sse::check_ops()) {
    const double err = c.report.max_rel_error();
    if (!c.passed()) failures.push_back("op '" + c.op + "' (" + c.report.worst().name + ")");
    ops.push_back({{"op", c.op}, {"max_rel_error", err}, {"passed", c.passed()}});
    if (!g.json) {
      std::cout << (c.passed() ? "ok   " : "FAIL ") << "op " << std::left << std::setw(22) << c.op
                << std::scientific << std::setprecision(2) << err << std::defaultfloat << '\n';
    }
  }

  ordered_json models = ordered_json::array();
  for (auto mode : {sse::ConnectionMode::none, sse::ConnectionMode::word_shortcut,
                    sse::ConnectionMode::full_shortcut, sse::ConnectionMode::residual}) {
    const auto m = sse::check_model(mode);
    ordered_json params = ordered_json::array();
    if (!g.json) {
      std::cout << "model " << sse::to_string(mode) << " dims (" << m.encoder.layer_dims[0] << ','
                << m.encoder.layer_dims[1] << "), d=" << m.encoder.embed_dim << '\n';
    }
    for (const auto& p : m.report.params) {
      const bool ok = p.max_rel_error < sse::kModelTolerance;
      if (!ok) failures.push_back(std::string(sse::to_string(mode)) + " parameter '" + p.name + "'");
      params.push_back({{"name", p.name}, {"max_rel_error", p.max_rel_error}, {"passed", ok}});
      if (!g.json) {
        std::cout << (ok ? "ok   " : "FAIL ") << "  " << std::left << std::setw(40) << p.name
                  << std::scientific << std::setprecision(2) << p.max_rel_error
                  << std::defaultfloat << '\n';
      }
    }
    models.push_back({{"mode", sse::to_string(mode)},
                      {"layer_dims", m.encoder.layer_dims},
                      {"max_rel_error", m.report.max_rel_error()},
                      {"params", params}});
  }

  if (g.json) {
    print_json({{"passed", failures.empty()},
                {"op_tolerance", sse::kOpTolerance},
                {"model_tolerance", sse::kModelTolerance},
                {"corrupted_op", corrupt.empty() ? ordered_json() : ordered_json(corrupt)},
                {"failures", failures},
                {"ops", ops},
                {"models", models}});
  }
  if (!failures.empty()) {
    std::cerr << "gradcheck failed: " << failures.front();
    if (failures.size() > 1) std::cerr << " and " << failures.size() - 1 << " more";
    std::cerr << '\n';
    return 1;
  }
  if (!g.json) std::cout << "all gradient checks passed\n";
  return 0;
}

// --- params ----------------------------------------------------------------

int cmd_params(const Globals& g, bool published) {
  if (published) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : sse::published_param_table()) {
      const auto n = sse::param_count(r.encoder, r.mlp, false).total();
      const double gap = (static_cast<double>(n) - r.published) / r.published;
      rows.push_back({{"config", r.label}, {"count", n}, {"published", r.published}, {"relative_gap", gap}});
      if (!g.json) {
        std::cout << std::left << std::setw(16) << r.label << std::right << std::setw(12) << n
                  << "  published " << std::fixed << std::setprecision(1) << r.published / 1e6 << "M  gap "
                  << std::showpos << 100.0 * gap << '%' << std::noshowpos << std::defaultfloat
                  << '\n';
      }
    }
    if (g.json) print_json({{"rows", rows}});
    return 0;
  }
  const auto cfg = resolve(g);
  const auto c = sse::param_count(cfg.encoder, cfg.mlp, false);
  if (g.json) {
    print_json({{"encoder", c.encoder}, {"classifier", c.classifier}, {"total", c.total()},
                {"embedding_included", false}});
  } else {
    std::cout << "encoder     " << c.encoder << "\nclassifier  " << c.classifier << "\ntotal       "
              << c.total() << "  (embeddings excluded)\n";
  }
  return 0;
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const Globals& g, const std::string& output, std::size_t n, std::size_t vocab,
              std::size_t max_len) {
  const auto examples = sse::synth_generate({n, vocab, max_len, g.seed.value_or(1)});
  if (auto parent = fs::path(output).parent_path(); !parent.empty()) fs::create_directories(parent);
  sse::write_nli_jsonl(examples, output);
  if (g.json) {
    print_json({{"output", output}, {"count", examples.size()}});
  } else {
    std::cout << "wrote " << examples.size() << " examples to " << output << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortcut-stacked sentence encoders for NLI"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--set", g.sets, "Override, key.path=value (repeatable)");
  app.add_option("--seed", g.seed, "Training seed (generator seed for synth)");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (ignored in deterministic mode)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "Single-threaded, bit-reproducible training");

  auto* train = app.add_subcommand("train", "Train a model and write artifacts");

  std::string ckpt, dataset, sentences, output, format = "text", grid, csv, corrupt;
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on a dataset");
  eval->add_option("checkpoint", ckpt)->required();
  eval->add_option("dataset", dataset)->required();

  auto* encode = app.add_subcommand("encode", "Sentence vectors, one per input line");
  encode->add_option("checkpoint", ckpt)->required();
  encode->add_option("sentences", sentences)->required();
  encode->add_option("-o,--output", output, "Output file (stdout by default)");
  encode->add_option("--format", format)->check(CLI::IsMember({"text", "binary"}));

  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid and write a CSV");
  ablate->add_option("--grid", grid, "Grid JSON")->required();
  ablate->add_option("--csv", csv, "CSV path (default <out_dir>/ablation.csv)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every op and the model");
  gradcheck->add_option("--corrupt", corrupt, "Break one op's backward rule (negative control)");

  bool published = false;
  auto* params = app.add_subcommand("params", "Trainable parameter count");
  params->add_flag("--published", published, "Recount the three published model sizes");

  std::size_t synth_n = 3000, synth_vocab = 64, synth_len = 12;
  auto* synth = app.add_subcommand("synth", "Write a synthetic NLI dataset as JSONL");
  synth->add_option("-o,--output", output)->required();
  synth->add_option("-n,--examples", synth_n);
  synth->add_option("--vocab-size", synth_vocab);
  synth->add_option("--max-len", synth_len);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (g.json && e.get_exit_code() != 0) {
      std::cout << ordered_json{{"error", "UsageError"}, {"message", e.what()}}.dump(2) << '\n';
      return e.get_exit_code();
    }
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(g);
    if (*eval) return cmd_eval(g, ckpt, dataset);
    if (*encode) return cmd_encode(g, ckpt, sentences, output, format);
    if (*ablate) return cmd_ablate(g, grid, csv);
    if (*gradcheck) return cmd_gradcheck(g, corrupt);
    if (*params) return cmd_params(g, published);
    if (*synth) return cmd_synth(g, output, synth_n, synth_vocab, synth_len);
  } catch (const std::exception& e) {
    if (g.json) {
      std::cout << ordered_json{{"error", error_kind(e)}, {"message", e.what()}}.dump(2) << '\n';
    } else {
      std::cerr << "error: " << e.what() << '\n';
    }
    return 1;
  }
  return 1;
}
