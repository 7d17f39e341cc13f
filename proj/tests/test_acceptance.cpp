// Acceptance run: one PASS/FAIL line per criterion.
//
//   test_acceptance                 all criteria
//   test_acceptance --criterion 4   just one (ctest runs them separately)
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helpers.hpp"
#include "sse/checkpoint.hpp"
#include "sse/diagnostics.hpp"
#include "sse/ops.hpp"
#include "sse/run.hpp"

using namespace sse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr ConnectionMode kModes[] = {ConnectionMode::none, ConnectionMode::word_shortcut,
                                     ConnectionMode::full_shortcut, ConnectionMode::residual};

// 1. Gradient-check suite.
Outcome gradient_checks() {
  double worst_op = 0.0;
  std::string worst_op_name;
  for (const auto& c : check_ops()) {
    if (c.report.max_rel_error() >= worst_op) {
      worst_op = c.report.max_rel_error();
      worst_op_name = c.op;
    }
  }
  double worst_model = 0.0;
  std::string worst_param;
  for (auto mode : kModes) {
    const auto m = check_model(mode);
    if (m.report.max_rel_error() >= worst_model) {
      worst_model = m.report.max_rel_error();
      worst_param = std::string(to_string(mode)) + "/" + m.report.worst().name;
    }
  }
  return {worst_op < kOpTolerance && worst_model < kModelTolerance,
          "ops max " + sci(worst_op) + " (" + worst_op_name + ", tol 1e-6); model max " +
              sci(worst_model) + " (" + worst_param + ", tol 1e-4)"};
}

// Layer input width written from the connection definitions, independent of
// EncoderConfig::input_dim.
std::size_t law_width(ConnectionMode mode, std::size_t d, const std::vector<std::size_t>& dims,
                      std::size_t i) {
  if (i == 1) return d;
  std::size_t w = 0;
  switch (mode) {
    case ConnectionMode::none: w = 2 * dims[i - 2]; break;
    case ConnectionMode::word_shortcut: w = d + 2 * dims[i - 2]; break;
    case ConnectionMode::residual: w = d + 2 * dims[0]; break;
    case ConnectionMode::full_shortcut:
      w = d;
      for (std::size_t j = 1; j < i; ++j) w += 2 * dims[j - 1];
      break;
  }
  return w;
}

// 2. Dimension laws.
Outcome dimension_laws() {
  Rng rng(2024);
  std::size_t failures = 0, configs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto mode = kModes[uniform_index(rng, 4)];
    const std::size_t m = 1 + uniform_index(rng, 4);
    const std::size_t d = 1 + uniform_index(rng, 64);
    std::vector<std::size_t> dims(m);
    for (auto& h : dims) h = 1 + uniform_index(rng, 64);
    if (mode == ConnectionMode::residual) std::fill(dims.begin(), dims.end(), dims[0]);
    const EncoderConfig cfg{mode, dims, d};
    cfg.validate();
    auto params = EncoderParams<float>::init(cfg, rng);
    ++configs;
    bool ok = params.layers.size() == m;
    for (std::size_t i = 1; ok && i <= m; ++i) {
      const auto w = law_width(mode, d, dims, i);
      ok = cfg.input_dim(i) == w && params.layers[i - 1].forward.in_dim() == w &&
           params.layers[i - 1].backward.in_dim() == w;
    }
    // And the composed input actually has that width.
    if (ok) {
      Tensor<float> x({3, d});
      std::vector<Tensor<float>> prev;
      for (std::size_t i = 1; ok && i <= m; ++i) {
        ok = compose_layer_input(mode, i, x, prev).dim(1) == law_width(mode, d, dims, i);
        prev.push_back(run_bilstm_layer(params.layers[i - 1], compose_layer_input(mode, i, x, prev), 3));
      }
    }
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(configs) + " random configs, " + std::to_string(failures) +
                             " failures"};
}

// 3. Parameter counts.
Outcome parameter_counts() {
  bool ok = true;
  std::string detail;
  Rng rng(3);
  for (const auto& r : published_param_table()) {
    const auto count = param_count(r.encoder, r.mlp, false).total();
    auto enc = EncoderParams<float>::init(r.encoder, rng);
    auto cls = MLPParams<float>::init(r.mlp, 4 * r.encoder.output_dim(), rng);
    NamedTensors<float> all;
    enc.append_named(all, "");
    cls.append_named(all, "");
    std::uint64_t allocated = 0;
    for (const auto& [name, t] : all) allocated += t.numel();
    const double gap = (static_cast<double>(count) - r.published) / r.published;
    ok = ok && std::abs(gap) < 0.10 && allocated == count;
    detail += (detail.empty() ? "" : "; ") + r.label + " " + std::to_string(count) + " vs " +
              fmt(r.published / 1e6, 3) + "M (" + fmt(100 * gap, 2) + "%)" +
              (allocated == count ? "" : " allocation mismatch");
  }
  return {ok, detail};
}

// 4. Padding inertness at the model level: PAD ids appended to the id
// sequence, embeddings included in the gradient comparison.
Outcome padding_inertness() {
  const auto data = synth_generate({60, 20, 8, 4});
  Rng rng(44);
  std::size_t cases = 0, failures = 0;
  for (auto mode : kModes) {
    EncoderConfig enc{mode, {3, 5}, 4};
    if (mode == ConnectionMode::residual) enc.layer_dims = {4, 4};
    auto model = NLIModel<double>::create(Vocabulary::build(corpus_of(data)), enc,
                                          {1, 6, Activation::relu, 0.0},
                                          random_embeddings<double>(Vocabulary::build(corpus_of(data)), 4, 1),
                                          mix_seed(9, static_cast<std::uint64_t>(mode)));
    const auto params = model.trainable_parameters();
    for (int trial = 0; trial < 50; ++trial) {
      const auto& ex = data[uniform_index(rng, data.size())];
      const auto ids = model.vocab.encode(ex.premise);
      auto padded = ids;
      padded.resize(ids.size() + 1 + uniform_index(rng, 5), Vocabulary::kPad);
      auto proj = test::fixed_projection(enc.output_dim(), 500 + static_cast<std::uint64_t>(trial));

      auto run = [&](const std::vector<std::size_t>& seq) {
        model.zero_grad();
        Tape<double> tape;
        TapeScope<double> scope(tape);
        auto v = encode_sentence(model, seq, ids.size());
        tape.backward(affine(proj, v, Tensor<double>{}));
        std::vector<double> out(v.data().begin(), v.data().end());
        for (const auto& [name, t] : params) {
          const auto g = std::as_const(t).grad();
          if (g.empty()) {
            out.insert(out.end(), t.numel(), 0.0);
          } else {
            out.insert(out.end(), g.begin(), g.end());
          }
        }
        return out;
      };
      ++cases;
      if (run(ids) != run(padded)) ++failures;
    }
  }
  return {failures == 0, std::to_string(cases) + " cases over 4 modes (1-5 PAD tokens), " +
                             std::to_string(failures) + " with any difference"};
}

RunConfig toy_config() {
  RunConfig cfg;
  cfg.encoder = {ConnectionMode::full_shortcut, {8, 16, 32}, 16};
  cfg.mlp = {2, 64, Activation::relu, 0.1};
  cfg.train.batch_size = 32;
  cfg.train.base_lr = 0.002;  // 0.0002 x 10
  cfg.train.decay_every = 2;
  cfg.train.max_epochs = 20;
  cfg.train.seed = 1;
  cfg.train.threads = 1;
  cfg.train.deterministic = true;
  cfg.data.synthetic = SynthSplit{3000, 600, 64, 12, 1};
  return cfg;
}

// 5. Toy-task convergence.
Outcome toy_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = toy_config();
  const auto loaded = load_data(cfg);
  auto model = build_model(cfg, loaded.data);
  const auto result = train(model, cfg.train, loaded.data);
  const double secs = seconds_since(t0);
  return {result.best_score >= 0.95 && secs <= 600.0,
          "best dev " + fmt(result.best_score) + " at epoch " + std::to_string(result.best_epoch + 1) +
              " of 20 (need >= 0.95), " + fmt(secs, 3) + " s (limit 600)"};
}

// 6. Ablation direction on a harder toy task, through the ablation facility.
Outcome ablation_direction() {
  RunConfig cfg = toy_config();
  cfg.data.synthetic = SynthSplit{1500, 300, 64, 24, 6};
  AblationGrid grid;
  grid.modes = {ConnectionMode::none, ConnectionMode::full_shortcut};
  grid.seeds = {1, 2, 3, 4, 5};
  grid.epochs = 4;
  const auto loaded = load_data(cfg);
  const auto rows = run_ablation(cfg, grid, loaded.data);
  const auto csv_path = fs::temp_directory_path() / "sse_acceptance_ablation.csv";
  std::ofstream(csv_path, std::ios::trunc) << ablation_csv(rows);
  const double none = mean_selection(rows, ConnectionMode::none);
  const double full = mean_selection(rows, ConnectionMode::full_shortcut);
  return {full >= none, "mean dev over 5 seeds, 4 epochs, max_len 24: full_shortcut " + fmt(full) +
                            " vs none " + fmt(none) + "; CSV " + csv_path.string()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 7. Determinism of file artifacts.
Outcome determinism() {
  auto cfg = toy_config();
  cfg.data.synthetic = SynthSplit{400, 100, 32, 10, 3};
  cfg.train.max_epochs = 3;
  cfg.train.mix_rate = 0.15;
  const auto loaded = load_data(cfg);
  TrainData data = loaded.data;
  data.aux = synth_generate({200, 32, 10, 8});  // exercise the mixture draw as well

  std::vector<std::string> dirs;
  for (const char* tag : {"a", "b"}) {
    auto c = cfg;
    c.out_dir = test::scratch_dir(std::string("acceptance_det_") + tag).string();
    auto model = build_model(c, data);
    run_training(c, data, model);
    dirs.push_back(c.out_dir);
  }
  bool ok = true;
  std::string detail;
  for (const char* f : {"metrics.jsonl", "best.ckpt", "last.ckpt"}) {
    const auto a = slurp(fs::path(dirs[0]) / f), b = slurp(fs::path(dirs[1]) / f);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + f + (same ? " identical" : " DIFFERS");
  }
  return {ok, detail + " (" + std::to_string(cfg.train.max_epochs) + " epochs, 1 thread)"};
}

// 8. Checkpoint round trip and corruption handling.
Outcome checkpoint_round_trip() {
  const auto data = synth_generate({40, 24, 8, 5});
  RunConfig cfg = toy_config();
  cfg.encoder = {ConnectionMode::full_shortcut, {4, 6}, 8};
  cfg.mlp = {2, 16, Activation::tanh, 0.1};
  TrainData td{data, {}, {{"dev", data}}};
  auto model = build_model(cfg, td);
  const auto path = test::scratch_dir("acceptance_ckpt") / "model.ckpt";
  save_checkpoint(model, nullptr, path.string());
  const auto loaded = load_checkpoint(path.string());

  const auto batch = make_batch(data, model.vocab);
  bool same_logits = true;
  for (std::size_t i = 0; i < batch.size; ++i) {
    Rng r1(0), r2(0);
    const auto a = example_logits(model, batch, i, Mode::eval, r1);
    const auto b = example_logits(loaded.model, batch, i, Mode::eval, r2);
    same_logits = same_logits && std::equal(a.data().begin(), a.data().end(), b.data().begin());
  }

  const auto good = serialize_checkpoint(model, nullptr);
  auto expect = [&](std::vector<char> bytes, auto tag) {
    try {
      deserialize_checkpoint(bytes);
    } catch (const decltype(tag)&) {
      return true;
    } catch (...) {
      return false;
    }
    return false;
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  auto bad_version = good;
  bad_version[8] = 9;
  const std::vector<char> truncated(good.begin(), good.begin() + static_cast<long>(good.size() / 2));
  auto renamed = good;
  const std::string from = "classifier.out.W";
  auto it = std::search(renamed.begin(), renamed.end(), from.begin(), from.end());
  if (it != renamed.end()) it[11] = 'Q';
  const bool errors = expect(bad_magic, FormatError("")) && expect(bad_version, VersionError("")) &&
                      expect(truncated, TruncatedError("")) &&
                      expect(renamed, UnknownTensorError(""));
  return {same_logits && errors,
          std::string("logits on ") + std::to_string(batch.size) + " examples " +
              (same_logits ? "bit-exact" : "DIFFER") +
              "; bad magic / version / truncation / unknown tensor " +
              (errors ? "raise FormatError / VersionError / TruncatedError / UnknownTensorError"
                      : "NOT all rejected with their own error")};
}

// 9. Mixture sampler size and per-epoch distinctness.
Outcome mixture_sampler() {
  const auto primary = synth_generate({300, 40, 8, 1});
  auto aux = synth_generate({1000, 40, 8, 2});
  for (std::size_t i = 0; i < aux.size(); ++i) aux[i].genre = "aux" + std::to_string(i);

  const std::size_t expect = primary.size() + 150;
  std::vector<std::set<std::string>> draws;
  bool sizes_ok = true;
  for (std::size_t epoch = 0; epoch < 10; ++epoch) {
    const auto mix = sample_epoch(primary, aux, 0.15, mixture_seed(1, epoch));
    sizes_ok = sizes_ok && mix.size() == expect;
    std::set<std::string> ids;
    for (const auto& ex : mix) {
      if (ex.genre.rfind("aux", 0) == 0) ids.insert(ex.genre);
    }
    sizes_ok = sizes_ok && ids.size() == 150;  // without replacement
    draws.push_back(std::move(ids));
  }
  std::size_t identical = 0, pairs = 0;
  double overlap = 0.0;
  for (std::size_t a = 0; a < draws.size(); ++a) {
    for (std::size_t b = a + 1; b < draws.size(); ++b) {
      ++pairs;
      if (draws[a] == draws[b]) ++identical;
      std::vector<std::string> common;
      std::set_intersection(draws[a].begin(), draws[a].end(), draws[b].begin(), draws[b].end(),
                            std::back_inserter(common));
      overlap += static_cast<double>(common.size());
    }
  }
  overlap /= static_cast<double>(pairs);
  // Independent draws of 150 from 1000 share 150 * 0.15 = 22.5 on average.
  const bool overlap_ok = std::abs(overlap - 22.5) < 5.0;
  return {sizes_ok && identical == 0 && overlap_ok,
          std::to_string(expect) + " examples per epoch (" + (sizes_ok ? "all 10 epochs" : "NOT always") +
              "), " + std::to_string(identical) + " of " + std::to_string(pairs) +
              " epoch pairs identical, mean pairwise overlap " + fmt(overlap, 3) + " (expected 22.5)"};
}

// 10. m=1 degenerates to the biLSTM-max baseline in every mode.
Outcome baseline_equivalence() {
  Rng rng(10);
  std::size_t checked = 0, differing = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + uniform_index(rng, 8), h = 1 + uniform_index(rng, 8);
    const std::size_t n = 1 + uniform_index(rng, 6);
    const EncoderConfig base{ConnectionMode::none, {h}, d};
    const auto params = EncoderParams<double>::init(base, rng);
    const auto x = test::random_tensor<double>({n, d}, rng, 1.0, false);
    const auto ref = encode(params, base, x, n);
    for (auto mode : kModes) {
      const EncoderConfig cfg{mode, {h}, d};
      const auto v = encode(params, cfg, x, n);
      ++checked;
      if (!std::equal(v.data().begin(), v.data().end(), ref.data().begin())) ++differing;
    }
    // And it is exactly max over time of one biLSTM layer.
    const auto hs = run_bilstm_layer(params.layers[0], x, n);
    for (std::size_t j = 0; j < 2 * h; ++j) {
      double mx = hs.at(0, j);
      for (std::size_t t = 1; t < n; ++t) mx = std::max(mx, hs.at(t, j));
      if (mx != ref[j]) ++differing;
    }
  }
  return {differing == 0, std::to_string(checked) +
                              " mode/config pairs identical to the single biLSTM max-pool output"
                              ", " + std::to_string(differing) + " differences"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-check suite", gradient_checks},
      {"dimension laws", dimension_laws},
      {"parameter counts", parameter_counts},
      {"padding inertness", padding_inertness},
      {"toy-task convergence", toy_convergence},
      {"ablation direction", ablation_direction},
      {"determinism", determinism},
      {"checkpoint round trip", checkpoint_round_trip},
      {"mixture sampler", mixture_sampler},
      {"baseline equivalence", baseline_equivalence},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
