#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sse/diagnostics.hpp"
#include "sse/ops.hpp"
#include "sse/run.hpp"

using namespace sse;

namespace {

RunConfig toy_config(std::size_t train_n = 90, std::size_t dev_n = 30) {
  RunConfig cfg;
  cfg.encoder = {ConnectionMode::full_shortcut, {4, 6}, 8};
  cfg.mlp = {1, 16, Activation::relu, 0.0};
  cfg.train.batch_size = 16;
  cfg.train.base_lr = 0.01;
  cfg.train.max_epochs = 1;
  cfg.data.synthetic = SynthSplit{train_n, dev_n, 16, 6, 4};
  return cfg;
}

std::vector<std::string> csv_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("synthetic data loading") {
  const auto cfg = toy_config();
  const auto a = load_data(cfg);
  const auto b = load_data(cfg);
  CHECK(a.data.train.size() == 90);
  REQUIRE(a.data.dev.size() == 1);
  CHECK(a.data.dev[0].examples.size() == 30);
  CHECK(a.data.train == b.data.train);
  // Dev is drawn from its own stream, not a prefix of train.
  CHECK(a.data.dev[0].examples[0] != a.data.train[0]);
}

TEST_CASE("file-based data loading") {
  const auto dir = test::scratch_dir("run_files");
  const auto data = synth_generate({12, 10, 5, 2});
  write_nli_jsonl(std::span(data).first(9), (dir / "train.jsonl").string());
  write_nli_jsonl(std::span(data).last(3), (dir / "dev.jsonl").string());

  RunConfig cfg;
  cfg.data.train = (dir / "train.jsonl").string();
  CHECK_THROWS_AS(load_data(cfg), ConfigError);  // no dev set
  cfg.data.dev["b_dev"] = (dir / "dev.jsonl").string();
  cfg.data.dev["a_dev"] = (dir / "dev.jsonl").string();
  const auto loaded = load_data(cfg);
  CHECK(loaded.data.train.size() == 9);
  REQUIRE(loaded.data.dev.size() == 2);
  CHECK(loaded.data.dev[0].name == "a_dev");
  CHECK(loaded.data.dev[1].examples.size() == 3);

  cfg.data.aux_train = (dir / "missing.jsonl").string();
  CHECK_THROWS_AS(load_data(cfg), IoError);
  CHECK_THROWS_AS(load_data(RunConfig{}), ConfigError);
}

TEST_CASE("build_model") {
  auto cfg = toy_config();
  const auto loaded = load_data(cfg);
  auto a = build_model(cfg, loaded.data);
  auto b = build_model(cfg, loaded.data);
  CHECK(a.vocab == b.vocab);
  const auto pa = a.named_parameters(), pb = b.named_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(std::equal(pa[i].second.data().begin(), pa[i].second.data().end(),
                     pb[i].second.data().begin()));
  }
  cfg.train.seed = 2;
  auto c = build_model(cfg, loaded.data);
  CHECK(c.encoder.layers[0].forward.w_x[0] != a.encoder.layers[0].forward.w_x[0]);

  cfg.embedding.path = "/nonexistent/vectors.txt";
  CHECK_THROWS_AS(build_model(cfg, loaded.data), IoError);
}

TEST_CASE("run_training writes the resolved snapshot next to the artifacts") {
  auto cfg = toy_config();
  cfg.out_dir = test::scratch_dir("run_training").string();
  const auto loaded = load_data(cfg);
  auto model = build_model(cfg, loaded.data);
  run_training(cfg, loaded.data, model);
  for (const char* f : {"config.json", "metrics.jsonl", "best.ckpt", "last.ckpt"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / f));
  }
  std::ifstream in(std::filesystem::path(cfg.out_dir) / "config.json");
  const auto snap = run_config_from_json(nlohmann::json::parse(in));
  CHECK(to_json(snap) == to_json(cfg));
}

TEST_CASE("ablation grid parsing") {
  const auto g = AblationGrid::from_json(nlohmann::json::parse(R"({
    "mode": ["none", "residual"], "layer_dims": [[4, 4], [4, 6]], "fine_tune": [false],
    "mlp": [{"num_hidden_layers": 2, "activation": "tanh"}], "seeds": [3, 5], "epochs": 2})"));
  CHECK(g.modes.size() == 2);
  CHECK(g.layer_dims[1] == std::vector<std::size_t>{4, 6});
  CHECK(g.mlp[0].second == Activation::tanh);
  CHECK(g.seeds == std::vector<std::uint64_t>{3, 5});
  CHECK(g.epochs == 2);

  CHECK_THROWS_AS(AblationGrid::from_json(nlohmann::json::parse(R"({"modes": ["none"]})")),
                  ConfigError);
  CHECK_THROWS_AS(AblationGrid::from_json(nlohmann::json::parse(R"({"mode": []})")), ConfigError);
  CHECK_THROWS_AS(AblationGrid::from_json(nlohmann::json::parse(R"({"mode": ["sideways"]})")),
                  ConfigError);
  CHECK_THROWS_AS(AblationGrid::from_json(nlohmann::json::parse(R"({"seeds": [-1]})")),
                  ConfigError);
  CHECK_THROWS_AS(AblationGrid::from_json(nlohmann::json::parse(R"({"mlp": [{"activation": "relu"}]})")),
                  ConfigError);
}

TEST_CASE("ablation runs every cell and skips infeasible ones") {
  const auto cfg = toy_config(60, 15);
  const auto loaded = load_data(cfg);
  AblationGrid g;
  g.modes = {ConnectionMode::none, ConnectionMode::word_shortcut, ConnectionMode::full_shortcut,
             ConnectionMode::residual};
  g.seeds = {1, 2};
  std::size_t seen = 0;
  const auto rows = run_ablation(cfg, g, loaded.data, [&](const AblationRow&) { ++seen; });
  CHECK(rows.size() == 8);
  CHECK(seen == 8);
  for (const auto& r : rows) {
    CHECK(r.budget_epochs == 1);
    if (r.mode == ConnectionMode::residual) {
      CHECK(r.status == "skipped");
      CHECK(r.reason.find("equal") != std::string::npos);
    } else {
      CHECK(r.status == "ok");
      CHECK(r.dev_acc.size() == 1);
      CHECK(r.selection == r.dev_acc[0].second);
    }
  }
  CHECK(mean_selection(rows, ConnectionMode::none) ==
        doctest::Approx((rows[0].selection + rows[1].selection) / 2));

  const auto lines = csv_lines(ablation_csv(rows));
  REQUIRE(lines.size() == 1 + 8 + 4);
  CHECK(lines[0] ==
        "mode,layer_dims,fine_tune,mlp_layers,activation,seed,budget_epochs,acc_dev,selection,"
        "status,reason");
  CHECK(lines[1].rfind("none,4+6,true,1,relu,1,1,", 0) == 0);
  CHECK(lines[9].rfind("none,4+6,true,1,relu,mean,1,", 0) == 0);
  CHECK(lines[12].find(",skipped,") != std::string::npos);
}

TEST_CASE("an absent grid axis keeps the base value") {
  const auto cfg = toy_config(30, 9);
  const auto loaded = load_data(cfg);
  AblationGrid g;
  g.mlp = {{1, Activation::tanh}, {2, Activation::tanh}, {1, Activation::relu}, {2, Activation::relu}};
  const auto rows = run_ablation(cfg, g, loaded.data);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.mode == cfg.encoder.mode);
    CHECK(r.layer_dims == cfg.encoder.layer_dims);
    CHECK(r.seed == cfg.train.seed);
  }
}

TEST_CASE("gradient-check suite") {
  for (const auto& c : check_ops()) {
    INFO(c.op, " worst ", c.report.worst().name);
    CHECK(c.passed());
  }
  CHECK(check_ops().size() == op_names().size());
  const auto m = check_model(ConnectionMode::full_shortcut);
  CHECK(m.passed());
  CHECK(m.encoder.layer_dims == std::vector<std::size_t>{5, 7});
  CHECK(m.encoder.embed_dim == 4);
  // Every parameter tensor is reported by name.
  std::vector<std::string> names;
  for (const auto& p : m.report.params) names.push_back(p.name);
  CHECK(names.front() == kEmbeddingName);
  CHECK(std::find(names.begin(), names.end(), "classifier.out.W") != names.end());
  CHECK(names.size() == 1 + 2 * 2 * 3 + 3 * 2);
}

TEST_CASE("a corrupted backward rule fails exactly its own op check") {
  for (auto op : op_names()) {
    corrupt_backward(op);
    const auto checks = check_ops();
    corrupt_backward("");
    for (const auto& c : checks) {
      INFO("corrupted ", op, ", checking ", c.op);
      CHECK(c.passed() == (c.op != op));
    }
  }
  CHECK(corrupted_backward().empty());
}

TEST_CASE("parameter table rows") {
  const auto rows = published_param_table();
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    const double n = static_cast<double>(param_count(r.encoder, r.mlp, false).total());
    CHECK(std::abs(n - r.published) / r.published < 0.10);
  }
}
