#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sse/rng.hpp"
#include "sse/tensor.hpp"

namespace sse::test {

template <typename T = double>
Tensor<T> random_tensor(Shape shape, Rng& rng, double scale = 1.0, bool requires_grad = true) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(uniform(rng, -scale, scale));
  return Tensor<T>(std::move(shape), std::move(v), requires_grad);
}

// Fixed random projection so a vector-valued output can be checked through a
// scalar loss.
inline Tensor<double> fixed_projection(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor<double>({1, n}, rng, 1.0, false);
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sse::test
