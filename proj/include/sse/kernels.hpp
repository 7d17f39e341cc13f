#pragma once

// Dense linear-algebra kernels behind the tensor ops.
//
// Each kernel exists twice: a plain serial reference and an OpenMP version
// that splits the output across threads. Both accumulate every output element
// over the reduction index in ascending order, so they agree bit-for-bit; the
// serial versions are what the tests compare the parallel ones against.

#include <cstddef>
#include <span>

namespace sse::kernels {

// Row-major matrices. trans_a / trans_b select op(A) = A or A^T.
// C[m x n] = op(A)[m x k] * op(B)[k x n], added to C when accumulate is set.
struct GemmShape {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  bool trans_a = false;
  bool trans_b = false;
};

namespace serial {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
  const std::size_t lda = s.trans_a ? s.m : s.k;
  const std::size_t ldb = s.trans_b ? s.k : s.n;
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      T acc = accumulate ? c[i * s.n + j] : T(0);
      for (std::size_t p = 0; p < s.k; ++p) {
        const T av = s.trans_a ? a[p * lda + i] : a[i * lda + p];
        const T bv = s.trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * s.n + j] = acc;
    }
  }
}

// y[m] (+)= W[m x k] x[k]
template <typename T>
void gemv(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
          std::span<T> y, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    T acc = accumulate ? y[i] : T(0);
    const T* row = w.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) acc += row[p] * x[p];
    y[i] = acc;
  }
}

// y[k] += W[m x k]^T x[m]
template <typename T>
void gemv_t(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
            std::span<T> y) {
  for (std::size_t i = 0; i < m; ++i) {
    const T xi = x[i];
    const T* row = w.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) y[j] += row[j] * xi;
  }
}

// W[m x k] += a[m] b[k]^T
template <typename T>
void ger(std::size_t m, std::size_t k, std::span<const T> a, std::span<const T> b,
         std::span<T> w) {
  for (std::size_t i = 0; i < m; ++i) {
    const T ai = a[i];
    T* row = w.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) row[j] += ai * b[j];
  }
}

}  // namespace serial

namespace omp {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
  const std::size_t lda = s.trans_a ? s.m : s.k;
  const std::size_t ldb = s.trans_b ? s.k : s.n;
  const auto m = static_cast<long long>(s.m);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < s.n; ++j) {
      T acc = accumulate ? c[i * s.n + j] : T(0);
      for (std::size_t p = 0; p < s.k; ++p) {
        const T av = s.trans_a ? a[p * lda + i] : a[i * lda + p];
        const T bv = s.trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * s.n + j] = acc;
    }
  }
}

template <typename T>
void gemv(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
          std::span<T> y, bool accumulate) {
  const auto mm = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    T acc = accumulate ? y[i] : T(0);
    const T* row = w.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) acc += row[p] * x[p];
    y[i] = acc;
  }
}

// Parallel over output columns; each column still sums rows in order.
template <typename T>
void gemv_t(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
            std::span<T> y) {
  const auto kk = static_cast<long long>(k);
#pragma omp parallel for schedule(static)
  for (long long jj = 0; jj < kk; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    T acc = y[j];
    for (std::size_t i = 0; i < m; ++i) acc += w[i * k + j] * x[i];
    y[j] = acc;
  }
}

template <typename T>
void ger(std::size_t m, std::size_t k, std::span<const T> a, std::span<const T> b,
         std::span<T> w) {
  const auto mm = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const T ai = a[i];
    T* row = w.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) row[j] += ai * b[j];
  }
}

}  // namespace omp

// Dispatch. Work below the threshold (multiply-adds) stays serial since
// thread start-up dominates for the small per-step matrices of an LSTM.
void set_parallel(bool enabled);
bool parallel_enabled();
void set_parallel_threshold(std::size_t flops);
std::size_t parallel_threshold();
void set_num_threads(int n);
int max_threads();

inline bool use_parallel(std::size_t work) {
  return parallel_enabled() && work >= parallel_threshold() && max_threads() > 1;
}

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
  if (use_parallel(s.m * s.n * s.k)) {
    omp::gemm(s, a, b, c, accumulate);
  } else {
    serial::gemm(s, a, b, c, accumulate);
  }
}

template <typename T>
void gemv(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
          std::span<T> y, bool accumulate) {
  if (use_parallel(m * k)) {
    omp::gemv(m, k, w, x, y, accumulate);
  } else {
    serial::gemv(m, k, w, x, y, accumulate);
  }
}

template <typename T>
void gemv_t(std::size_t m, std::size_t k, std::span<const T> w, std::span<const T> x,
            std::span<T> y) {
  if (use_parallel(m * k)) {
    omp::gemv_t(m, k, w, x, y);
  } else {
    serial::gemv_t(m, k, w, x, y);
  }
}

template <typename T>
void ger(std::size_t m, std::size_t k, std::span<const T> a, std::span<const T> b,
         std::span<T> w) {
  if (use_parallel(m * k)) {
    omp::ger(m, k, a, b, w);
  } else {
    serial::ger(m, k, a, b, w);
  }
}

}  // namespace sse::kernels
