#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sse/tensor.hpp"

namespace sse {

using TokenSeq = std::vector<std::string>;

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Ids in order of first occurrence. Throws ConfigError on an empty corpus.
  static Vocabulary build(const std::vector<TokenSeq>& corpus);
  static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

  std::size_t add(const std::string& token);
  std::optional<std::size_t> find(std::string_view token) const;
  // Falls back to kUnk.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const TokenSeq& tokens) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::vector<std::string> tokens_;
};

// Word vectors, one row per vocabulary id. Row kPad stays zero.
template <typename T>
struct EmbeddingTable {
  Tensor<T> matrix;  // [|V| x d]
  bool fine_tune = true;

  std::size_t vocab_size() const { return matrix.dim(0); }
  std::size_t dim() const { return matrix.dim(1); }
  void zero_pad_row();
};

struct LoadReport {
  std::size_t found = 0;        // vocabulary tokens present in the file
  std::size_t vocab_tokens = 0;  // ids >= 2
  std::size_t lines = 0;
  double coverage() const {
    return vocab_tokens == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(vocab_tokens);
  }
};

// Every non-PAD row drawn uniformly from [-0.05, 0.05] with an RNG seeded by
// (token, seed), so a token's vector does not depend on vocabulary order.
template <typename T>
EmbeddingTable<T> random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                    bool fine_tune = true);

// GloVe text format: token followed by `dim` decimal floats per line.
// In-vocabulary rows are copied; the rest keep the random initialisation.
template <typename T>
EmbeddingTable<T> load_pretrained(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                                  std::uint64_t seed, bool fine_tune = true,
                                  LoadReport* report = nullptr);

// Writes rows 2..|V|-1 in GloVe text format with round-trip precision.
template <typename T>
void save_glove(const EmbeddingTable<T>& table, const Vocabulary& vocab, const std::string& path);

// [n x d] rows for a sentence. Recorded on the tape only when fine-tuning.
template <typename T>
Tensor<T> lookup(const EmbeddingTable<T>& table, std::span<const std::size_t> ids);

}  // namespace sse
