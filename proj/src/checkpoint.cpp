#include "sse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "sse/config.hpp"

namespace sse {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'S', 'E', 'C', 'K', 'P', 'T', '\0'};
constexpr const char* kAdamM = "adam.m/";
constexpr const char* kAdamV = "adam.v/";

std::string label_order() {
  std::string s;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (i) s += ',';
    s += to_string(static_cast<Label>(i));
  }
  return s;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void text(const std::string& s) {
    uint<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void f32(float v) { uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v)); }
  std::vector<char> take() { return std::move(out_); }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& b) : b_(b) {}
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) {
      throw TruncatedError("checkpoint ends early: needed " + std::to_string(n) + " bytes at offset " +
                           std::to_string(pos_) + " of " + std::to_string(b_.size()));
    }
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  std::string text() {
    const auto n = uint<std::uint64_t>();
    need(n);
    std::string s(b_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  bool done() const { return pos_ == b_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<char>& b_;
  std::size_t pos_ = 0;
};

struct Entry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

}  // namespace

std::vector<char> serialize_checkpoint(const NLIModel<float>& model,
                                       const AdamState<float>* optimizer, const json& extra) {
  json cfg = {{"encoder", to_json(model.encoder_cfg)},
              {"mlp", to_json(model.mlp_cfg)},
              {"fine_tune", model.embedding.fine_tune},
              {"extra", extra}};
  std::vector<Entry> entries;
  for (const auto& [name, t] : model.named_parameters()) {
    entries.push_back({name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  }
  if (optimizer) {
    cfg["optimizer"] = {{"step", optimizer->step},
                        {"beta1", optimizer->cfg.beta1},
                        {"beta2", optimizer->cfg.beta2},
                        {"epsilon", optimizer->cfg.epsilon},
                        {"params", optimizer->names}};
    const auto named = model.named_parameters();
    std::map<std::string, Shape> shapes;
    for (const auto& [name, t] : named) shapes[name] = t.shape();
    for (std::size_t i = 0; i < optimizer->names.size(); ++i) {
      const auto& name = optimizer->names[i];
      entries.push_back({kAdamM + name, shapes.at(name), optimizer->m[i]});
      entries.push_back({kAdamV + name, shapes.at(name), optimizer->v[i]});
    }
  } else {
    cfg["optimizer"] = nullptr;
  }

  std::string vocab;
  for (std::size_t i = 0; i < model.vocab.size(); ++i) {
    if (i) vocab += '\n';
    vocab += model.vocab.token(i);
  }

  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(kCheckpointVersion);
  w.text(cfg.dump());
  w.text(label_order());
  w.text(vocab);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.uint<std::uint64_t>(d);
  }
  for (const auto& e : entries) {
    for (float v : e.values) w.f32(v);
  }
  return w.take();
}

LoadedCheckpoint deserialize_checkpoint(const std::vector<char>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file (bad magic bytes)");
  }
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.uint<std::uint8_t>();
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  json cfg;
  try {
    cfg = json::parse(r.text());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config block is not valid JSON: ") + e.what());
  }
  if (r.text() != label_order()) throw FormatError("checkpoint label order differs from this build");
  std::vector<std::string> tokens;
  {
    std::stringstream ss(r.text());
    std::string tok;
    while (std::getline(ss, tok, '\n')) tokens.push_back(tok);
  }

  LoadedCheckpoint out;
  try {
    const EncoderConfig enc = encoder_config_from_json(cfg.at("encoder"));
    const MLPConfig mlp = mlp_config_from_json(cfg.at("mlp"));
    const bool fine_tune = cfg.at("fine_tune").get<bool>();
    Vocabulary vocab = Vocabulary::from_tokens(tokens);
    EmbeddingTable<float> table{Tensor<float>({vocab.size(), enc.embed_dim}), fine_tune};
    out.model = NLIModel<float>::create(std::move(vocab), enc, mlp, std::move(table), 0);
    out.extra = cfg.value("extra", json::object());
    if (!cfg.at("optimizer").is_null()) {
      const auto& o = cfg.at("optimizer");
      AdamState<float> st;
      st.cfg = {o.at("beta1").get<double>(), o.at("beta2").get<double>(),
                o.at("epsilon").get<double>()};
      st.step = o.at("step").get<std::uint64_t>();
      st.names = o.at("params").get<std::vector<std::string>>();
      st.m.resize(st.names.size());
      st.v.resize(st.names.size());
      out.optimizer = std::move(st);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config block is incomplete: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config block is invalid: ") + e.what());
  }

  std::map<std::string, Tensor<float>> params;
  for (const auto& [name, t] : out.model.named_parameters()) params.emplace(name, t);
  std::map<std::string, std::size_t> slots;
  if (out.optimizer) {
    for (std::size_t i = 0; i < out.optimizer->names.size(); ++i) {
      if (!params.count(out.optimizer->names[i])) {
        throw UnknownTensorError("optimizer refers to unknown tensor '" + out.optimizer->names[i] + "'");
      }
      slots[out.optimizer->names[i]] = i;
    }
  }

  const auto count = r.uint<std::uint32_t>();
  std::vector<std::pair<std::string, Shape>> dir;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.uint<std::uint32_t>();
    r.need(len);
    std::string name(len, '\0');
    for (auto& c : name) c = static_cast<char>(r.uint<std::uint8_t>());
    const auto rank = r.uint<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.uint<std::uint64_t>();
    dir.emplace_back(std::move(name), std::move(shape));
  }

  std::map<std::string, bool> seen;
  for (const auto& [name, shape] : dir) {
    std::vector<float>* dst = nullptr;
    std::span<float> tensor_dst;
    Shape expected;
    if (auto it = params.find(name); it != params.end()) {
      tensor_dst = it->second.data();
      expected = it->second.shape();
    } else if (name.rfind(kAdamM, 0) == 0 || name.rfind(kAdamV, 0) == 0) {
      const std::string base = name.substr(7);
      auto s = slots.find(base);
      if (s == slots.end()) throw UnknownTensorError("unknown tensor '" + name + "' in checkpoint");
      auto& vec = name[5] == 'm' ? out.optimizer->m[s->second] : out.optimizer->v[s->second];
      vec.assign(shape_numel(params.at(base).shape()), 0.f);
      dst = &vec;
      expected = params.at(base).shape();
    } else {
      throw UnknownTensorError("unknown tensor '" + name + "' in checkpoint");
    }
    if (shape != expected) {
      throw FormatError("tensor '" + name + "' has shape " + shape_str(shape) + ", config implies " +
                        shape_str(expected));
    }
    if (seen[name]) throw FormatError("tensor '" + name + "' appears twice");
    seen[name] = true;
    const std::size_t n = shape_numel(shape);
    r.need(4 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const float v = r.f32();
      if (dst) {
        (*dst)[i] = v;
      } else {
        tensor_dst[i] = v;
      }
    }
  }
  for (const auto& [name, t] : params) {
    if (!seen.count(name)) throw FormatError("checkpoint is missing tensor '" + name + "'");
  }
  if (out.optimizer) {
    for (const auto& name : out.optimizer->names) {
      if (!seen.count(kAdamM + name) || !seen.count(kAdamV + name)) {
        throw FormatError("checkpoint is missing optimizer state for '" + name + "'");
      }
    }
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes after the last tensor");
  return out;
}

void save_checkpoint(const NLIModel<float>& model, const AdamState<float>* optimizer,
                     const std::string& path, const json& extra) {
  const auto bytes = serialize_checkpoint(model, optimizer, extra);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace sse
