#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sse/tensor.hpp"

namespace sse {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  // The floor turns the comparison absolute for gradients that are tiny
  // compared to the finite-difference noise.
  double denom_floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_error() const;
  const GradCheckEntry& worst() const;
};

// Compares tape gradients of loss_fn against central differences for every
// element of every parameter. loss_fn must rebuild the graph on each call and
// return a one-element tensor; it is called under a tape for the analytic pass
// and without one for the numeric passes. Throws NonDeterministicError if two
// evaluations at the same point disagree.
GradCheckReport grad_check(const std::function<Tensor<double>()>& loss_fn,
                           const NamedTensors<double>& params, GradCheckOptions opts = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace sse
