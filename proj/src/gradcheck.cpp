#include "sse/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace sse {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double GradCheckReport::max_rel_error() const {
  double worst_err = 0.0;
  for (const auto& p : params) worst_err = std::max(worst_err, p.max_rel_error);
  return worst_err;
}

const GradCheckEntry& GradCheckReport::worst() const {
  return *std::max_element(params.begin(), params.end(), [](const auto& a, const auto& b) {
    return a.max_rel_error < b.max_rel_error;
  });
}

GradCheckReport grad_check(const std::function<Tensor<double>()>& loss_fn,
                           const NamedTensors<double>& params, GradCheckOptions opts) {
  auto eval = [&] {
    NoGradScope<double> off;
    return loss_fn().item();
  };

  const double base = eval();
  if (eval() != base) {
    throw NonDeterministicError("grad_check: loss function returned different values for the same "
                                "parameters; disable dropout and fix the inputs");
  }

  for (const auto& [name, p] : params) {
    Tensor<double> t = p;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    Tensor<double> loss = loss_fn();
    tape.backward(loss);
  }

  GradCheckReport report;
  for (const auto& [name, p] : params) {
    Tensor<double> t = p;
    GradCheckEntry entry{name};
    auto values = t.data();
    auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + opts.epsilon;
      const double up = eval();
      values[i] = orig - opts.epsilon;
      const double down = eval();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * opts.epsilon);
      const double err = relative_error(grad[i], numeric, opts.denom_floor);
      if (i == 0 || err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.analytic = grad[i];
        entry.numeric = numeric;
      }
    }
    report.params.push_back(entry);
  }
  if (eval() != base) {
    throw NonDeterministicError("grad_check: loss changed after parameters were restored");
  }
  return report;
}

}  // namespace sse
