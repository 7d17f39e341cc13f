#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sse/data.hpp"

using namespace sse;

namespace {

std::filesystem::path write_lines(const std::string& dir_name, const std::string& text) {
  auto dir = test::scratch_dir(dir_name);
  auto p = dir / "data.jsonl";
  std::ofstream(p) << text;
  return p;
}

bool is_subsequence(const TokenSeq& small, const TokenSeq& big) {
  std::size_t j = 0;
  for (const auto& t : big) {
    if (j < small.size() && small[j] == t) ++j;
  }
  return j == small.size();
}

// Fraction of hypothesis tokens that occur in the premise.
double overlap(const NLIExample& ex) {
  std::set<std::string> p(ex.premise.begin(), ex.premise.end());
  std::size_t hit = 0;
  for (const auto& t : ex.hypothesis) hit += p.count(t);
  return static_cast<double>(hit) / static_cast<double>(ex.hypothesis.size());
}

}  // namespace

TEST_CASE("tokenization") {
  CHECK(tokenize_parse("( ( A dog ) runs )") == TokenSeq{"A", "dog", "runs"});
  CHECK(tokenize_raw("A dog runs.") == TokenSeq{"A", "dog", "runs", "."});
  CHECK(tokenize_raw("Wait, what?!") == TokenSeq{"Wait", ",", "what", "?", "!"});
  CHECK(tokenize_raw("  spaced   out ") == TokenSeq{"spaced", "out"});
  CHECK(tokenize("ignored raw.", std::string_view("( x y )")) == TokenSeq{"x", "y"});
  CHECK(tokenize("A dog runs.", std::nullopt) == tokenize("A dog runs.", std::nullopt));
  try {
    tokenize("   ", std::nullopt, 7);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
}

TEST_CASE("JSONL loading") {
  SUBCASE("raw sentence record") {
    auto p = write_lines("jsonl_raw",
                         R"j({"gold_label":"entailment","sentence1":"A dog runs.","sentence2":"An animal moves."})j"
                         "\n");
    auto ds = load_nli_jsonl(p.string());
    REQUIRE(ds.examples.size() == 1);
    CHECK(ds.examples[0].label == Label::entailment);
    CHECK(ds.examples[0].premise == TokenSeq{"A", "dog", "runs", "."});
    CHECK(ds.examples[0].hypothesis == TokenSeq{"An", "animal", "moves", "."});
  }
  SUBCASE("no-consensus records are skipped and counted; bad lines reported") {
    auto p = write_lines(
        "jsonl_mixed",
        R"j({"gold_label":"-","sentence1":"a","sentence2":"b"})j" "\n"
        R"j({"gold_label":"neutral","sentence1":"a b","sentence2":"c","sentence1_binary_parse":"( ( A dog ) runs )","genre":"fiction"})j" "\n"
        "not json at all\n"
        R"j({"gold_label":"maybe","sentence1":"a","sentence2":"b"})j" "\n"
        R"j({"gold_label":"neutral","sentence1":"a"})j" "\n"
        R"j({"gold_label":"neutral","sentence1":"","sentence2":"b"})j" "\n"
        "\n"
        R"j({"gold_label":"contradiction","sentence1":"x","sentence2":"y"})j" "\n");
    auto ds = load_nli_jsonl(p.string());
    CHECK(ds.skipped_no_consensus == 1);
    REQUIRE(ds.examples.size() == 2);
    CHECK(ds.examples[0].premise == TokenSeq{"A", "dog", "runs"});
    CHECK(ds.examples[0].genre == "fiction");
    CHECK(ds.examples[1].label == Label::contradiction);
    REQUIRE(ds.malformed.size() == 4);
    CHECK(ds.malformed[0].line == 3);
    CHECK(ds.malformed[1].line == 4);
    CHECK(ds.malformed[2].line == 5);
    CHECK(ds.malformed[3].line == 6);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_nli_jsonl("/nonexistent/sse/data.jsonl"), IoError);
  }
}

TEST_CASE("write then reload preserves tokens, labels and genre") {
  auto examples = synth_generate({90, 20, 8, 4});
  examples[0].genre = "slate";
  examples[1].premise = {"A", "dog", "runs", "."};
  auto dir = test::scratch_dir("jsonl_rt");
  write_nli_jsonl(examples, (dir / "out.jsonl").string());
  auto back = load_nli_jsonl((dir / "out.jsonl").string());
  CHECK(back.malformed.empty());
  CHECK(back.examples == examples);
}

TEST_CASE("batching") {
  std::vector<NLIExample> ex{
      {{"a", "b"}, {"c"}, Label::entailment, ""},
      {{"a"}, {"b", "c", "d"}, Label::neutral, ""},
      {{"a", "b", "c", "x"}, {"a"}, Label::contradiction, ""},
      {{"b"}, {"b"}, Label::neutral, ""},
      {{"c", "zzz"}, {"a", "b"}, Label::entailment, ""},
  };
  auto vocab = Vocabulary::build(corpus_of(std::span(ex).first(4)));

  SUBCASE("sizes, unknown tokens, per-batch width") {
    auto batches = make_batches(ex, vocab, 2, std::nullopt);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size == 2);
    CHECK(batches[1].size == 2);
    CHECK(batches[2].size == 1);
    CHECK(batches[0].premise_width == 2);
    CHECK(batches[0].hypothesis_width == 3);
    CHECK(batches[1].premise_width == 4);
    CHECK(batches[1].hypothesis_width == 1);
    CHECK(batches[2].premise(0)[1] == Vocabulary::kUnk);
    CHECK(batches[0].premise(1)[1] == Vocabulary::kPad);
    CHECK(batches[0].labels == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("no PAD inside the declared length, PAD beyond it") {
    auto big = synth_generate({200, 30, 10, 9});
    auto v = Vocabulary::build(corpus_of(big));
    for (const auto& b : make_batches(big, v, 16, 3)) {
      for (std::size_t i = 0; i < b.size; ++i) {
        CHECK(b.premise_len[i] >= 1);
        CHECK(b.hypothesis_len[i] >= 1);
        for (std::size_t t = 0; t < b.premise_width; ++t) {
          CHECK((b.premise(i)[t] == Vocabulary::kPad) == (t >= b.premise_len[i]));
        }
        for (std::size_t t = 0; t < b.hypothesis_width; ++t) {
          CHECK((b.hypothesis(i)[t] == Vocabulary::kPad) == (t >= b.hypothesis_len[i]));
        }
      }
    }
  }
  SUBCASE("shuffling is a function of the seed") {
    auto big = synth_generate({100, 30, 10, 9});
    auto v = Vocabulary::build(corpus_of(big));
    auto a = make_batches(big, v, 7, 11), b = make_batches(big, v, 7, 11), c = make_batches(big, v, 7, 12);
    CHECK(a[0].premise_ids == b[0].premise_ids);
    CHECK(a[0].premise_ids != c[0].premise_ids);
  }
}

TEST_CASE("synthetic generator") {
  const SynthConfig cfg{3000, 64, 12, 1};
  auto data = synth_generate(cfg);
  CHECK(data == synth_generate(cfg));
  CHECK(data != synth_generate({3000, 64, 12, 2}));

  std::size_t counts[3] = {};
  for (const auto& ex : data) counts[static_cast<std::size_t>(ex.label)]++;
  for (auto c : counts) CHECK(c == 1000);

  std::size_t heuristic_correct = 0;
  for (const auto& ex : data) {
    CHECK(ex.premise.size() >= 3);
    CHECK(ex.premise.size() <= cfg.max_len);
    CHECK_FALSE(ex.hypothesis.empty());
    const double o = overlap(ex);
    switch (ex.label) {
      case Label::entailment:
        CHECK(is_subsequence(ex.hypothesis, ex.premise));
        break;
      case Label::contradiction:
        CHECK(o == 0.0);
        break;
      case Label::neutral:
        CHECK(o > 0.0);
        CHECK(o < 1.0);
        break;
    }
    // Bag-of-words overlap rule as an independent learnability oracle.
    const Label guess = o == 1.0 ? Label::entailment : (o == 0.0 ? Label::contradiction : Label::neutral);
    heuristic_correct += guess == ex.label;
  }
  CHECK(static_cast<double>(heuristic_correct) / data.size() > 0.8);

  CHECK_THROWS_AS(synth_generate({10, 7, 5, 1}), ConfigError);
  CHECK_THROWS_AS(synth_generate({10, 64, 3, 1}), ConfigError);
  CHECK_THROWS_AS(synth_generate({10, 10, 10, 1}), ConfigError);
}
