#include "sse/embedding.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "sse/ops.hpp"
#include "sse/rng.hpp"

namespace sse {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& corpus) {
  if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
  Vocabulary v;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) v.add(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[kPad] != kPadToken || id_to_token[kUnk] != kUnkToken) {
    throw ConfigError("vocabulary must start with the reserved <pad> and <unk> tokens");
  }
  Vocabulary v;
  for (std::size_t i = 2; i < id_to_token.size(); ++i) {
    if (v.add(id_to_token[i]) != i) {
      throw ConfigError("duplicate vocabulary token '" + id_to_token[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  index_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::vector<std::size_t> Vocabulary::encode(const TokenSeq& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

template <typename T>
void EmbeddingTable<T>::zero_pad_row() {
  const std::size_t d = dim();
  for (std::size_t j = 0; j < d; ++j) matrix.data()[Vocabulary::kPad * d + j] = T(0);
}

namespace {

template <typename T>
void init_row(std::span<T> row, std::string_view token, std::uint64_t seed) {
  Rng rng(mix_seed(stable_hash(token), seed));
  for (auto& v : row) v = static_cast<T>(uniform(rng, -0.05, 0.05));
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

template <typename T>
EmbeddingTable<T> random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                    bool fine_tune) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingTable<T> table{Tensor<T>({vocab.size(), dim}, fine_tune), fine_tune};
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    init_row<T>(table.matrix.data().subspan(id * dim, dim), vocab.token(id), seed);
  }
  return table;
}

template <typename T>
EmbeddingTable<T> load_pretrained(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                                  std::uint64_t seed, bool fine_tune, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file '" + path + "'");
  EmbeddingTable<T> table = random_embeddings<T>(vocab, dim, seed, fine_tune);
  std::vector<bool> seen(vocab.size(), false);
  LoadReport rep;
  rep.vocab_tokens = vocab.size() - 2;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_spaces(line);
    if (fields.size() != dim + 1) {
      if (lineno == 1) {
        throw ConfigError("embedding file '" + path + "' has " +
                          std::to_string(fields.size() - 1) + "-dimensional vectors, expected " +
                          std::to_string(dim));
      }
      throw ParseError("embedding file '" + path + "': expected " + std::to_string(dim + 1) +
                           " fields, got " + std::to_string(fields.size()),
                       lineno);
    }
    ++rep.lines;
    auto id = vocab.find(fields[0]);
    if (!id || *id < 2 || seen[*id]) continue;
    auto row = table.matrix.data().subspan(*id * dim, dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto f = fields[j + 1];
      double v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError("embedding file '" + path + "': bad number '" + std::string(f) + "'",
                         lineno);
      }
      row[j] = static_cast<T>(v);
    }
    seen[*id] = true;
    ++rep.found;
  }
  if (report) *report = rep;
  return table;
}

template <typename T>
void save_glove(const EmbeddingTable<T>& table, const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file '" + path + "'");
  out.precision(std::numeric_limits<T>::max_digits10);
  const std::size_t d = table.dim();
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    out << vocab.token(id);
    for (std::size_t j = 0; j < d; ++j) out << ' ' << table.matrix.data()[id * d + j];
    out << '\n';
  }
  if (!out) throw IoError("failed writing embedding file '" + path + "'");
}

template <typename T>
Tensor<T> lookup(const EmbeddingTable<T>& table, std::span<const std::size_t> ids) {
  if (!table.fine_tune) {
    NoGradScope<T> frozen;
    return gather_rows(table.matrix, ids);
  }
  return gather_rows(table.matrix, ids);
}

#define SSE_INSTANTIATE_EMBEDDING(T)                                                              \
  template struct EmbeddingTable<T>;                                                              \
  template EmbeddingTable<T> random_embeddings(const Vocabulary&, std::size_t, std::uint64_t,     \
                                               bool);                                             \
  template EmbeddingTable<T> load_pretrained(const std::string&, const Vocabulary&, std::size_t,  \
                                             std::uint64_t, bool, LoadReport*);                   \
  template void save_glove(const EmbeddingTable<T>&, const Vocabulary&, const std::string&);     \
  template Tensor<T> lookup(const EmbeddingTable<T>&, std::span<const std::size_t>);

SSE_INSTANTIATE_EMBEDDING(float)
SSE_INSTANTIATE_EMBEDDING(double)

}  // namespace sse
