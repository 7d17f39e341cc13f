#include "sse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "sse/kernels.hpp"

namespace sse {

namespace {

template <typename T, typename... Ts>
Tape<T>* tracking(const Tensor<T>& first, const Ts&... rest) {
  Tape<T>* tape = active_tape<T>();
  if (!tape) return nullptr;
  const bool any = first.requires_grad() || (rest.requires_grad() || ...);
  return any ? tape : nullptr;
}

template <typename T>
Tensor<T> make_output(Shape shape, bool tracked) {
  Tensor<T> out(std::move(shape), tracked);
  if (tracked) out.storage()->leaf = false;
  return out;
}

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         " tensor, got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
  }
}

template <typename T>
std::span<const T> cspan(const Tensor<T>& t) {
  return t.data();
}

std::string& corrupted_op() {
  static std::string name;
  return name;
}

std::string_view pointwise_name(Pointwise op) {
  constexpr std::string_view names[] = {"sigmoid", "tanh", "relu", "abs"};
  return names[static_cast<int>(op)];
}

std::string_view binary_name(Binary op) {
  constexpr std::string_view names[] = {"add", "sub", "hadamard"};
  return names[static_cast<int>(op)];
}

// Every backward rule goes through here so a single op can be sabotaged for
// the gradient checker's negative control.
template <typename T, typename F>
void record(Tape<T>* tape, std::string_view op, F fn) {
  if (!corrupted_op().empty() && corrupted_op() == op) {
    tape->record([fn = std::move(fn)](Tape<T>& tp) {
      fn(tp);
      fn(tp);
    });
  } else {
    tape->record(std::move(fn));
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tape<T>* tape = tracking(a, b);
  Tensor<T> out = make_output<T>({m, n}, tape != nullptr);
  kernels::gemm<T>({m, n, k, false, false}, cspan(a), cspan(b), out.data(), false);
  if (tape) {
    record(tape, "matmul", [a, b, out, m, n, k](Tape<T>& tp) {
      auto dc = tp.upstream(out);
      if (dc.empty()) return;
      if (a.requires_grad()) {
        kernels::gemm<T>({m, k, n, false, true}, dc, cspan(b), tp.grad_of(a), true);
      }
      if (b.requires_grad()) {
        kernels::gemm<T>({k, n, m, true, false}, cspan(a), dc, tp.grad_of(b), true);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> affine(const Tensor<T>& w, const Tensor<T>& x, const Tensor<T>& b) {
  require_rank(w, 2, "affine");
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  if (x.numel() != cols) {
    throw DimensionError("affine: weight " + shape_str(w.shape()) + " cannot multiply input " +
                         shape_str(x.shape()));
  }
  const bool has_bias = b.defined();
  if (has_bias && b.numel() != rows) {
    throw DimensionError("affine: bias " + shape_str(b.shape()) + " does not match weight " +
                         shape_str(w.shape()));
  }
  Tape<T>* tape = has_bias ? tracking(w, x, b) : tracking(w, x);
  Tensor<T> out = make_output<T>({rows}, tape != nullptr);
  if (has_bias) std::copy(b.data().begin(), b.data().end(), out.data().begin());
  kernels::gemv<T>(rows, cols, cspan(w), cspan(x), out.data(), has_bias);
  if (tape) {
    record(tape, "affine", [w, x, b, out, rows, cols, has_bias](Tape<T>& tp) {
      auto dy = tp.upstream(out);
      if (dy.empty()) return;
      if (w.requires_grad()) kernels::ger<T>(rows, cols, dy, cspan(x), tp.grad_of(w));
      if (x.requires_grad()) kernels::gemv_t<T>(rows, cols, cspan(w), dy, tp.grad_of(x));
      if (has_bias && b.requires_grad()) {
        auto db = tp.grad_of(b);
        for (std::size_t i = 0; i < rows; ++i) db[i] += dy[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: empty list of tensors");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(ref));
  }
  Shape out_shape = ref;
  out_shape[axis] = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) {
      if (d != axis && s[d] != ref[d]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: " + shape_str(s) + " does not match " + shape_str(ref) +
                           " off axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    any_grad = any_grad || p.requires_grad();
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  const std::size_t out_block = out_shape[axis] * inner;

  Tape<T>* tape = any_grad ? active_tape<T>() : nullptr;
  Tensor<T> out = make_output<T>(out_shape, tape != nullptr);
  auto dst = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t block = p.dim(axis) * inner;
    auto src = p.data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src.begin() + o * block, block, dst.begin() + o * out_block + offset);
    }
    offset += block;
  }
  if (tape) {
    record(tape, "concat", [parts, out, axis, outer, inner, out_block](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      std::size_t off = 0;
      for (const auto& p : parts) {
        const std::size_t block = p.dim(axis) * inner;
        if (p.requires_grad()) {
          auto dp = tp.grad_of(p);
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < block; ++j) dp[o * block + j] += g[o * out_block + off + j];
          }
        }
        off += block;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& m) {
  require_rank(m, 2, "transpose");
  const std::size_t r = m.dim(0), c = m.dim(1);
  Tape<T>* tape = tracking(m);
  Tensor<T> out = make_output<T>({c, r}, tape != nullptr);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  }
  if (tape) {
    record(tape, "transpose", [m, out, r, c](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dm = tp.grad_of(m);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) dm[i * c + j] += g[j * r + i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> select_row(const Tensor<T>& m, std::size_t row) {
  require_rank(m, 2, "select_row");
  if (row >= m.dim(0)) {
    throw IndexError("select_row: row " + std::to_string(row) + " out of range for " +
                     shape_str(m.shape()));
  }
  const std::size_t c = m.dim(1);
  Tape<T>* tape = tracking(m);
  Tensor<T> out = make_output<T>({c}, tape != nullptr);
  std::copy_n(m.data().begin() + row * c, c, out.data().begin());
  if (tape) {
    record(tape, "select_row", [m, out, row, c](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dm = tp.grad_of(m);
      for (std::size_t j = 0; j < c; ++j) dm[row * c + j] += g[j];
    });
  }
  return out;
}

template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows, std::size_t n_rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows given");
  if (rows.size() > n_rows) {
    throw DimensionError("stack_rows: " + std::to_string(rows.size()) + " rows exceed height " +
                         std::to_string(n_rows));
  }
  const std::size_t width = rows.front().numel();
  bool any_grad = false;
  for (const auto& r : rows) {
    if (r.numel() != width) {
      throw DimensionError("stack_rows: row " + shape_str(r.shape()) + " differs from width " +
                           std::to_string(width));
    }
    any_grad = any_grad || r.requires_grad();
  }
  Tape<T>* tape = any_grad ? active_tape<T>() : nullptr;
  Tensor<T> out = make_output<T>({n_rows, width}, tape != nullptr);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(rows[i].data().begin(), width, out.data().begin() + i * width);
  }
  if (tape) {
    record(tape, "stack_rows", [rows, out, width](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].requires_grad()) continue;
        auto dr = tp.grad_of(rows[i]);
        for (std::size_t j = 0; j < width; ++j) dr[j] += g[i * width + j];
      }
    });
  }
  return out;
}

template <typename T>
RowMax<T> rowwise_max(const Tensor<T>& h, std::size_t valid_len) {
  require_rank(h, 2, "rowwise_max");
  const std::size_t rows = h.dim(0), cols = h.dim(1);
  if (valid_len == 0) throw EmptySequenceError("rowwise_max: valid length is zero");
  if (valid_len > cols) {
    throw DimensionError("rowwise_max: valid length " + std::to_string(valid_len) +
                         " exceeds sequence length " + std::to_string(cols));
  }
  Tape<T>* tape = tracking(h);
  RowMax<T> res{make_output<T>({rows}, tape != nullptr), std::vector<std::size_t>(rows, 0)};
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < valid_len; ++t) {
      if (h.at(r, t) > h.at(r, best)) best = t;
    }
    res.argmax[r] = best;
    res.values[r] = h.at(r, best);
  }
  if (tape) {
    record(tape, "rowwise_max", [h, out = res.values, argmax = res.argmax, cols](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dh = tp.grad_of(h);
      for (std::size_t r = 0; r < argmax.size(); ++r) dh[r * cols + argmax[r]] += g[r];
    });
  }
  return res;
}

template <typename T>
Tensor<T> pointwise(Pointwise op, const Tensor<T>& x) {
  Tape<T>* tape = tracking(x);
  Tensor<T> out = make_output<T>(x.shape(), tape != nullptr);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const T v = src[i];
    switch (op) {
      case Pointwise::sigmoid:
        if (v >= 0) {
          dst[i] = T(1) / (T(1) + std::exp(-v));
        } else {
          const T e = std::exp(v);
          dst[i] = e / (T(1) + e);
        }
        break;
      case Pointwise::tanh:
        dst[i] = std::tanh(v);
        break;
      case Pointwise::relu:
        dst[i] = v > 0 ? v : T(0);
        break;
      case Pointwise::abs:
        dst[i] = std::abs(v);
        break;
    }
  }
  if (tape) {
    record(tape, pointwise_name(op), [op, x, out](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dx = tp.grad_of(x);
      auto xv = x.data();
      auto y = out.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        T d = 0;
        switch (op) {
          case Pointwise::sigmoid:
            d = y[i] * (T(1) - y[i]);
            break;
          case Pointwise::tanh:
            d = T(1) - y[i] * y[i];
            break;
          case Pointwise::relu:
            d = xv[i] > 0 ? T(1) : T(0);
            break;
          case Pointwise::abs:
            d = xv[i] > 0 ? T(1) : (xv[i] < 0 ? T(-1) : T(0));
            break;
        }
        dx[i] += g[i] * d;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> binary(Binary op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("elementwise op: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
  Tape<T>* tape = tracking(a, b);
  Tensor<T> out = make_output<T>(a.shape(), tape != nullptr);
  auto av = a.data();
  auto bv = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    switch (op) {
      case Binary::add:
        dst[i] = av[i] + bv[i];
        break;
      case Binary::sub:
        dst[i] = av[i] - bv[i];
        break;
      case Binary::hadamard:
        dst[i] = av[i] * bv[i];
        break;
    }
  }
  if (tape) {
    record(tape, binary_name(op), [op, a, b, out](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      if (a.requires_grad()) {
        auto da = tp.grad_of(a);
        auto bv = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += op == Binary::hadamard ? g[i] * bv[i] : g[i];
      }
      if (b.requires_grad()) {
        auto db = tp.grad_of(b);
        auto av = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          switch (op) {
            case Binary::add:
              db[i] += g[i];
              break;
            case Binary::sub:
              db[i] -= g[i];
              break;
            case Binary::hadamard:
              db[i] += g[i] * av[i];
              break;
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label) {
  const std::size_t c = logits.numel();
  if (label >= c) {
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range for " + std::to_string(c) + " classes");
  }
  auto z = logits.data();
  const T zmax = *std::max_element(z.begin(), z.end());
  std::vector<T> prob(c);
  T denom = 0;
  for (std::size_t i = 0; i < c; ++i) {
    prob[i] = std::exp(z[i] - zmax);
    denom += prob[i];
  }
  for (auto& p : prob) p /= denom;
  Tape<T>* tape = tracking(logits);
  Tensor<T> out = make_output<T>({1}, tape != nullptr);
  out[0] = std::log(denom) - (z[label] - zmax);
  if (tape) {
    record(tape, "softmax_cross_entropy", [logits, out, prob = std::move(prob), label](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dz = tp.grad_of(logits);
      for (std::size_t i = 0; i < prob.size(); ++i) {
        dz[i] += g[0] * (prob[i] - (i == label ? T(1) : T(0)));
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::eval || rate == 0.0) return x;
  const T scale = T(1) / static_cast<T>(1.0 - rate);
  std::vector<T> mask(x.numel());
  for (auto& m : mask) m = uniform01(rng) < rate ? T(0) : scale;
  Tape<T>* tape = tracking(x);
  Tensor<T> out = make_output<T>(x.shape(), tape != nullptr);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] * mask[i];
  if (tape) {
    record(tape, "dropout", [x, out, mask = std::move(mask)](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      auto dx = tp.grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * mask[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, std::span<const std::size_t> ids) {
  require_rank(table, 2, "gather_rows");
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  for (auto id : ids) {
    if (id >= vocab) {
      throw IndexError("gather_rows: id " + std::to_string(id) + " out of range for table with " +
                       std::to_string(vocab) + " rows");
    }
  }
  Tape<T>* tape = tracking(table);
  Tensor<T> out = make_output<T>({ids.size(), width}, tape != nullptr);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(table.data().begin() + ids[i] * width, width, out.data().begin() + i * width);
  }
  if (tape) {
    record(tape, "gather_rows", [table, out, idv = std::vector<std::size_t>(ids.begin(), ids.end()),
                  width](Tape<T>& tp) {
      auto g = tp.upstream(out);
      if (g.empty()) return;
      for (std::size_t i = 0; i < idv.size(); ++i) {
        tp.add_row_grad(table, idv[i], g.subspan(i * width, width));
      }
    });
  }
  return out;
}

template <typename T>
LstmState<T> lstm_cell(const Tensor<T>& w_x, const Tensor<T>& w_h, const Tensor<T>& bias,
                       const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev) {
  require_rank(w_x, 2, "lstm_cell");
  require_rank(w_h, 2, "lstm_cell");
  const std::size_t hid = w_h.dim(1);
  const std::size_t in = w_x.dim(1);
  const std::size_t g4 = 4 * hid;
  if (w_h.dim(0) != g4 || w_x.dim(0) != g4 || bias.numel() != g4 || x.numel() != in ||
      h_prev.numel() != hid || c_prev.numel() != hid) {
    throw DimensionError("lstm_cell: W_x " + shape_str(w_x.shape()) + ", W_h " +
                         shape_str(w_h.shape()) + ", b " + shape_str(bias.shape()) + ", x " +
                         shape_str(x.shape()) + ", h " + shape_str(h_prev.shape()) + ", c " +
                         shape_str(c_prev.shape()) + " are inconsistent");
  }
  Tape<T>* tape = tracking(w_x, w_h, bias, x, h_prev, c_prev);

  // Activated gates [i | f | g | o] and tanh(c), kept for the backward rule.
  std::vector<T> gates(bias.data().begin(), bias.data().end());
  kernels::gemv<T>(g4, in, cspan(w_x), cspan(x), gates, true);
  kernels::gemv<T>(g4, hid, cspan(w_h), cspan(h_prev), gates, true);
  for (std::size_t j = 0; j < g4; ++j) {
    const T z = gates[j];
    if (j >= 2 * hid && j < 3 * hid) {
      gates[j] = std::tanh(z);
    } else if (z >= 0) {
      gates[j] = T(1) / (T(1) + std::exp(-z));
    } else {
      const T e = std::exp(z);
      gates[j] = e / (T(1) + e);
    }
  }
  LstmState<T> st{make_output<T>({hid}, tape != nullptr), make_output<T>({hid}, tape != nullptr)};
  std::vector<T> tanh_c(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    const T i = gates[j], f = gates[hid + j], g = gates[2 * hid + j], o = gates[3 * hid + j];
    const T c = f * c_prev[j] + i * g;
    st.c[j] = c;
    tanh_c[j] = std::tanh(c);
    st.h[j] = o * tanh_c[j];
  }
  if (tape) {
    record(tape, "lstm_cell", [w_x, w_h, bias, x, h_prev, c_prev, h_out = st.h, c_out = st.c,
                  gates = std::move(gates), tanh_c = std::move(tanh_c), hid, in,
                  g4](Tape<T>& tp) {
      auto dh = tp.upstream(h_out);
      auto dc = tp.upstream(c_out);
      if (dh.empty() && dc.empty()) return;
      std::vector<T> dz(g4);
      std::vector<T> dc_total(hid);
      for (std::size_t j = 0; j < hid; ++j) {
        const T i = gates[j], f = gates[hid + j], g = gates[2 * hid + j], o = gates[3 * hid + j];
        const T dhj = dh.empty() ? T(0) : dh[j];
        const T dct = (dc.empty() ? T(0) : dc[j]) + dhj * o * (T(1) - tanh_c[j] * tanh_c[j]);
        dc_total[j] = dct;
        dz[j] = dct * g * i * (T(1) - i);
        dz[hid + j] = dct * c_prev[j] * f * (T(1) - f);
        dz[2 * hid + j] = dct * i * (T(1) - g * g);
        dz[3 * hid + j] = dhj * tanh_c[j] * o * (T(1) - o);
      }
      if (w_x.requires_grad()) kernels::ger<T>(g4, in, dz, cspan(x), tp.grad_of(w_x));
      if (w_h.requires_grad()) kernels::ger<T>(g4, hid, dz, cspan(h_prev), tp.grad_of(w_h));
      if (bias.requires_grad()) {
        auto db = tp.grad_of(bias);
        for (std::size_t j = 0; j < g4; ++j) db[j] += dz[j];
      }
      if (x.requires_grad()) kernels::gemv_t<T>(g4, in, cspan(w_x), dz, tp.grad_of(x));
      if (h_prev.requires_grad()) kernels::gemv_t<T>(g4, hid, cspan(w_h), dz, tp.grad_of(h_prev));
      if (c_prev.requires_grad()) {
        auto dcp = tp.grad_of(c_prev);
        for (std::size_t j = 0; j < hid; ++j) dcp[j] += dc_total[j] * gates[hid + j];
      }
    });
  }
  return st;
}

void corrupt_backward(std::string_view op) { corrupted_op() = std::string(op); }

std::string_view corrupted_backward() { return corrupted_op(); }

std::span<const std::string_view> op_names() {
  static constexpr std::string_view names[] = {
      "matmul",  "affine", "concat",   "transpose", "select_row",
      "stack_rows", "rowwise_max", "sigmoid", "tanh", "relu",
      "abs", "add", "sub", "hadamard", "softmax_cross_entropy",
      "dropout", "gather_rows", "lstm_cell"};
  return names;
}

#define SSE_INSTANTIATE_OPS(T)                                                                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> affine(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                          \
  template Tensor<T> transpose(const Tensor<T>&);                                                 \
  template Tensor<T> select_row(const Tensor<T>&, std::size_t);                                   \
  template Tensor<T> stack_rows(const std::vector<Tensor<T>>&, std::size_t);                      \
  template RowMax<T> rowwise_max(const Tensor<T>&, std::size_t);                                  \
  template Tensor<T> pointwise(Pointwise, const Tensor<T>&);                                      \
  template Tensor<T> binary(Binary, const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);                        \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&);                               \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                 \
  template LstmState<T> lstm_cell(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                  const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

SSE_INSTANTIATE_OPS(float)
SSE_INSTANTIATE_OPS(double)

}  // namespace sse
