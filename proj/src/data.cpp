#include "sse/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sse/rng.hpp"

namespace sse {

using nlohmann::json;

namespace {

std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < s.size()) {
    while (i < s.size() && space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

std::string join(const TokenSeq& toks) {
  std::string s;
  for (const auto& t : toks) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace

TokenSeq tokenize_parse(std::string_view binary_parse) {
  TokenSeq out;
  for (auto f : fields(binary_parse)) {
    if (f != "(" && f != ")") out.emplace_back(f);
  }
  return out;
}

TokenSeq tokenize_raw(std::string_view sentence) {
  TokenSeq out;
  for (auto f : fields(sentence)) {
    std::size_t end = f.size();
    while (end > 0 && is_terminal_punct(f[end - 1])) --end;
    if (end == 0) {
      for (char c : f) out.emplace_back(1, c);
      continue;
    }
    out.emplace_back(f.substr(0, end));
    for (std::size_t i = end; i < f.size(); ++i) out.emplace_back(1, f[i]);
  }
  return out;
}

TokenSeq tokenize(std::string_view sentence, std::optional<std::string_view> binary_parse,
                  std::size_t line) {
  TokenSeq toks = binary_parse ? tokenize_parse(*binary_parse) : tokenize_raw(sentence);
  if (toks.empty()) throw ParseError("sentence has no tokens", line);
  return toks;
}

NLIDataset load_nli_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  NLIDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      const std::string gold = rec.at("gold_label").get<std::string>();
      if (gold == "-") {
        ++ds.skipped_no_consensus;
        continue;
      }
      auto parse_field = [&](const char* key) -> std::optional<std::string_view> {
        auto it = rec.find(key);
        if (it == rec.end() || !it->is_string()) return std::nullopt;
        return std::string_view(it->get_ref<const std::string&>());
      };
      NLIExample ex;
      ex.label = parse_label(gold);
      ex.premise = tokenize(rec.at("sentence1").get_ref<const std::string&>(),
                            parse_field("sentence1_binary_parse"), lineno);
      ex.hypothesis = tokenize(rec.at("sentence2").get_ref<const std::string&>(),
                               parse_field("sentence2_binary_parse"), lineno);
      if (auto g = rec.find("genre"); g != rec.end() && g->is_string()) ex.genre = g->get<std::string>();
      ds.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      ds.malformed.push_back({lineno, e.what()});
    } catch (const Error& e) {
      ds.malformed.push_back({lineno, e.what()});
    }
  }
  return ds;
}

void write_nli_jsonl(std::span<const NLIExample> examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset '" + path + "'");
  for (const auto& ex : examples) {
    json rec;
    rec["gold_label"] = std::string(to_string(ex.label));
    rec["sentence1"] = join(ex.premise);
    rec["sentence2"] = join(ex.hypothesis);
    rec["sentence1_binary_parse"] = join(ex.premise);
    rec["sentence2_binary_parse"] = join(ex.hypothesis);
    if (!ex.genre.empty()) rec["genre"] = ex.genre;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing dataset '" + path + "'");
}

Batch make_batch(std::span<const NLIExample> examples, const Vocabulary& vocab) {
  Batch b;
  b.size = examples.size();
  for (const auto& ex : examples) {
    if (ex.premise.empty() || ex.hypothesis.empty()) {
      throw ConfigError("make_batch: example with an empty sentence");
    }
    b.premise_width = std::max(b.premise_width, ex.premise.size());
    b.hypothesis_width = std::max(b.hypothesis_width, ex.hypothesis.size());
  }
  b.premise_ids.assign(b.size * b.premise_width, Vocabulary::kPad);
  b.hypothesis_ids.assign(b.size * b.hypothesis_width, Vocabulary::kPad);
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& ex = examples[i];
    for (std::size_t t = 0; t < ex.premise.size(); ++t) {
      b.premise_ids[i * b.premise_width + t] = vocab.id(ex.premise[t]);
    }
    for (std::size_t t = 0; t < ex.hypothesis.size(); ++t) {
      b.hypothesis_ids[i * b.hypothesis_width + t] = vocab.id(ex.hypothesis[t]);
    }
    b.premise_len.push_back(ex.premise.size());
    b.hypothesis_len.push_back(ex.hypothesis.size());
    b.labels.push_back(static_cast<std::size_t>(ex.label));
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const NLIExample> examples, const Vocabulary& vocab,
                                std::size_t batch_size, std::optional<std::uint64_t> seed) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  if (seed) {
    Rng rng(*seed);
    shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> batches;
  std::vector<NLIExample> chunk;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
      chunk.push_back(examples[order[i]]);
    }
    batches.push_back(make_batch(chunk, vocab));
  }
  return batches;
}

std::vector<NLIExample> synth_generate(const SynthConfig& cfg) {
  if (cfg.vocab_size < 8) throw ConfigError("synthetic vocab_size must be at least 8");
  if (cfg.max_len < 4) throw ConfigError("synthetic max_len must be at least 4");
  if (cfg.vocab_size <= cfg.max_len) {
    throw ConfigError("synthetic vocab_size must exceed max_len so contradictions can avoid "
                      "every premise token");
  }
  Rng rng(cfg.seed);
  auto word = [](std::size_t id) { return "w" + std::to_string(id); };
  std::vector<NLIExample> out;
  out.reserve(cfg.num_examples);
  for (std::size_t n = 0; n < cfg.num_examples; ++n) {
    const Label label = static_cast<Label>(n % 3);
    const std::size_t len = 3 + uniform_index(rng, cfg.max_len - 2);  // [3, max_len]
    std::vector<std::size_t> premise(len);
    std::vector<bool> in_premise(cfg.vocab_size, false);
    for (auto& t : premise) {
      t = uniform_index(rng, cfg.vocab_size);
      in_premise[t] = true;
    }
    std::vector<std::size_t> outside;
    for (std::size_t t = 0; t < cfg.vocab_size; ++t) {
      if (!in_premise[t]) outside.push_back(t);
    }
    const std::size_t k = 2 + uniform_index(rng, len - 2);  // [2, len-1]
    std::vector<std::size_t> hyp;
    switch (label) {
      case Label::entailment: {
        std::vector<std::size_t> pos(len);
        std::iota(pos.begin(), pos.end(), 0);
        shuffle(pos.begin(), pos.end(), rng);
        pos.resize(k);
        std::sort(pos.begin(), pos.end());
        for (auto p : pos) hyp.push_back(premise[p]);
        break;
      }
      case Label::contradiction:
        for (std::size_t i = 0; i < k; ++i) hyp.push_back(outside[uniform_index(rng, outside.size())]);
        break;
      case Label::neutral: {
        const std::size_t shared = (k + 1) / 2;
        for (std::size_t i = 0; i < shared; ++i) hyp.push_back(premise[uniform_index(rng, len)]);
        for (std::size_t i = shared; i < k; ++i) {
          hyp.push_back(outside[uniform_index(rng, outside.size())]);
        }
        shuffle(hyp.begin(), hyp.end(), rng);
        break;
      }
    }
    NLIExample ex;
    for (auto t : premise) ex.premise.push_back(word(t));
    for (auto t : hyp) ex.hypothesis.push_back(word(t));
    ex.label = label;
    out.push_back(std::move(ex));
  }
  shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<TokenSeq> corpus_of(std::span<const NLIExample> examples) {
  std::vector<TokenSeq> c;
  c.reserve(2 * examples.size());
  for (const auto& ex : examples) {
    c.push_back(ex.premise);
    c.push_back(ex.hypothesis);
  }
  return c;
}

}  // namespace sse
