#pragma once

// Binary checkpoint, all integers little-endian:
//
//   magic        8 bytes  "SSECKPT\0"
//   version      u32
//   config       u64 length + UTF-8 JSON (encoder, mlp, fine_tune, optimizer)
//   labels       u64 length + comma-separated class names in id order
//   vocabulary   u64 length + tokens joined by '\n', id order
//   count        u32
//   directory    count x { u32 name length, name, u32 rank, u64 dims[rank] }
//   payloads     float32 values of each tensor in directory order
//
// Optimizer moments are stored as extra tensors named "adam.m/<param>" and
// "adam.v/<param>".

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sse/training.hpp"

namespace sse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<char> serialize_checkpoint(const NLIModel<float>& model,
                                       const AdamState<float>* optimizer,
                                       const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  NLIModel<float> model;
  std::optional<AdamState<float>> optimizer;
  nlohmann::json extra;
};

// Throws FormatError (bad magic, bad layout), VersionError, TruncatedError or
// UnknownTensorError.
LoadedCheckpoint deserialize_checkpoint(const std::vector<char>& bytes);

// Written to a temporary file and renamed, so an interrupted save never
// leaves a half-written checkpoint under `path`.
void save_checkpoint(const NLIModel<float>& model, const AdamState<float>* optimizer,
                     const std::string& path,
                     const nlohmann::json& extra = nlohmann::json::object());
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sse
