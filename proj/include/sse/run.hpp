#pragma once

// Glue between a RunConfig and the library: data loading, model
// construction, training with on-disk artifacts, and the ablation grid.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sse/config.hpp"
#include "sse/training.hpp"

namespace sse {

struct LoadedData {
  TrainData data;
  std::vector<std::string> warnings;  // skipped and malformed records, per file
};

// Synthetic splits when data.synthetic is set, JSONL files otherwise. Dev
// sets come in name order. Throws ConfigError when nothing is
// configured, IoError for unreadable files.
LoadedData load_data(const RunConfig& cfg);

// Vocabulary from the training (and auxiliary) sets; embeddings from
// embedding.path when given, random otherwise. Weights are seeded from
// train.seed. A missing embedding file throws IoError here, before any
// training work.
NLIModel<float> build_model(const RunConfig& cfg, const TrainData& data,
                            LoadReport* report = nullptr);

// Writes config.json (the resolved snapshot) to out_dir, then trains.
TrainResult run_training(const RunConfig& cfg, const TrainData& data, NLIModel<float>& model,
                         std::function<void(const EpochMetrics&)> on_epoch = {});

// Ablation grid. Every listed axis replaces the base config's value; an
// absent axis keeps it. Cells are the cartesian product, times seeds.
//
//   {"mode": ["none", "full_shortcut"], "layer_dims": [[8, 16, 32]],
//    "fine_tune": [true, false], "mlp": [{"num_hidden_layers": 1, "activation": "tanh"}],
//    "seeds": [1, 2, 3], "epochs": 4}
struct AblationGrid {
  std::vector<ConnectionMode> modes;
  std::vector<std::vector<std::size_t>> layer_dims;
  std::vector<bool> fine_tune;
  std::vector<std::pair<std::size_t, Activation>> mlp;
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = 0;  // 0 keeps train.max_epochs

  static AblationGrid from_json(const nlohmann::json& j);
};

struct AblationRow {
  ConnectionMode mode{};
  std::vector<std::size_t> layer_dims;
  bool fine_tune = true;
  std::size_t mlp_layers = 0;
  Activation activation{};
  std::uint64_t seed = 0;
  std::size_t budget_epochs = 0;
  std::string status;  // ok | skipped
  std::string reason;
  std::vector<std::pair<std::string, double>> dev_acc;  // at the selected epoch
  double selection = 0.0;
};

using AblationProgress = std::function<void(const AblationRow&)>;

// Infeasible cells (for example residual with unequal dims) are returned with
// status "skipped" and the validation message; the grid carries on.
std::vector<AblationRow> run_ablation(const RunConfig& base, const AblationGrid& grid,
                                      const TrainData& data, const AblationProgress& progress = {});

// CSV with one row per cell and seed, followed by one "mean" row per
// configuration averaged over its seeds.
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Mean selection score of the ok rows with the given mode.
double mean_selection(const std::vector<AblationRow>& rows, ConnectionMode mode);

}  // namespace sse
