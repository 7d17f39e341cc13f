#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sse/classifier.hpp"
#include "sse/embedding.hpp"

namespace sse {

struct NLIExample {
  TokenSeq premise;
  TokenSeq hypothesis;
  Label label = Label::entailment;
  std::string genre;  // pass-through, may be empty

  bool operator==(const NLIExample&) const = default;
};

struct MalformedLine {
  std::size_t line = 0;
  std::string reason;
};

struct NLIDataset {
  std::vector<NLIExample> examples;
  std::size_t skipped_no_consensus = 0;  // gold_label "-"
  std::vector<MalformedLine> malformed;
};

// Tokens of a binary parse: whitespace fields other than "(" and ")".
TokenSeq tokenize_parse(std::string_view binary_parse);
// Whitespace split, with trailing . , ! ? ; : split off each word.
TokenSeq tokenize_raw(std::string_view sentence);
// Prefers the parse when present. Throws ParseError(line) if nothing is left.
TokenSeq tokenize(std::string_view sentence, std::optional<std::string_view> binary_parse,
                  std::size_t line = 0);

// SNLI / MultiNLI line-delimited JSON. Malformed lines are reported and
// skipped; only an unreadable file throws (IoError).
NLIDataset load_nli_jsonl(const std::string& path);

// Writes examples in the same format, with binary-parse fields holding the
// tokens so reloading reproduces them exactly.
void write_nli_jsonl(std::span<const NLIExample> examples, const std::string& path);

struct Batch {
  std::size_t size = 0;
  std::size_t premise_width = 0;
  std::size_t hypothesis_width = 0;
  std::vector<std::size_t> premise_ids;     // [size x premise_width], PAD-filled
  std::vector<std::size_t> premise_len;     // [size]
  std::vector<std::size_t> hypothesis_ids;  // [size x hypothesis_width]
  std::vector<std::size_t> hypothesis_len;
  std::vector<std::size_t> labels;

  std::span<const std::size_t> premise(std::size_t i) const {
    return std::span(premise_ids).subspan(i * premise_width, premise_width);
  }
  std::span<const std::size_t> hypothesis(std::size_t i) const {
    return std::span(hypothesis_ids).subspan(i * hypothesis_width, hypothesis_width);
  }
};

Batch make_batch(std::span<const NLIExample> examples, const Vocabulary& vocab);

// Shuffles with `seed` (no shuffle when seed is nullopt), then cuts
// consecutive batches; the last one may be short.
std::vector<Batch> make_batches(std::span<const NLIExample> examples, const Vocabulary& vocab,
                                std::size_t batch_size, std::optional<std::uint64_t> seed);

struct SynthConfig {
  std::size_t num_examples = 3000;
  std::size_t vocab_size = 64;
  std::size_t max_len = 12;
  std::uint64_t seed = 1;
};

// Toy NLI task over tokens w0..w{V-1}:
//   entailment     hypothesis is an ordered subsequence of the premise
//   contradiction  hypothesis tokens never occur in the premise
//   neutral        ceil(k/2) hypothesis tokens from the premise, the rest not
// Labels are balanced and the whole set is a function of the config.
std::vector<NLIExample> synth_generate(const SynthConfig& cfg);

std::vector<TokenSeq> corpus_of(std::span<const NLIExample> examples);

}  // namespace sse
