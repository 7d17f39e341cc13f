#pragma once

// Self-contained gradient-check suite: every differentiable op on small
// random inputs, then the whole model on a tiny batch, all in float64.

#include <string>
#include <vector>

#include "sse/classifier.hpp"
#include "sse/encoder.hpp"
#include "sse/gradcheck.hpp"

namespace sse {

inline constexpr double kOpTolerance = 1e-6;
inline constexpr double kModelTolerance = 1e-4;

struct OpCheck {
  std::string op;
  GradCheckReport report;
  bool passed() const { return report.max_rel_error() < kOpTolerance; }
};

// One entry per name in op_names(), same order.
std::vector<OpCheck> check_ops();

struct ModelCheck {
  EncoderConfig encoder;
  GradCheckReport report;  // one entry per parameter tensor, by name
  bool passed() const { return report.max_rel_error() < kModelTolerance; }
};

// Two-layer encoder with dims (5,7) (residual needs equal widths and uses
// (6,6)), d=4, a 2 x 8 relu MLP, dropout off, a batch of two examples with
// three-token premises (one hypothesis padded).
ModelCheck check_model(ConnectionMode mode);

// The three published model sizes (300D residual, 600D residual, 600D shortcut), read
// as per-direction hidden sizes over three layers, d=300 and one 800-unit
// MLP hidden layer. `published` is the reported count.
struct ParamTableRow {
  std::string label;
  EncoderConfig encoder;
  MLPConfig mlp;
  double published = 0.0;
};

std::vector<ParamTableRow> published_param_table();

}  // namespace sse
