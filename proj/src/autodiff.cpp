/* Copyright 2026 The Relimp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "relimp/autodiff.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#if defined(__AVX2__) && defined(__GLIBC__)
#include <immintrin.h>
#define RELIMP_VECTOR_MATH 1
// glibc libmvec entry points, 4 doubles per call.
extern "C" __m256d _ZGVdN4v_exp(__m256d);
extern "C" __m256d _ZGVdN4v_expm1(__m256d);
#endif

namespace relimp::ad {

namespace {

[[noreturn]] void shape_error(OpKind kind, const Shape& a, const Shape& b, std::string_view what = {}) {
  std::string msg = std::string(op_name(kind)) + ": shape mismatch " + shape_to_string(a) +
                    " vs " + shape_to_string(b);
  if (!what.empty()) msg += " (" + std::string(what) + ")";
  throw std::invalid_argument(msg);
}

Tape& same_tape(OpKind kind, Var a, Var b) {
  if (!a.valid() || !b.valid()) {
    throw std::invalid_argument(std::string(op_name(kind)) + ": unbound variable");
  }
  if (a.tape != b.tape) {
    throw std::invalid_argument(std::string(op_name(kind)) + ": operands live on different tapes");
  }
  return *a.tape;
}

Tape& tape_of(OpKind kind, Var a) {
  if (!a.valid()) throw std::invalid_argument(std::string(op_name(kind)) + ": unbound variable");
  return *a.tape;
}

bool is_suffix(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) return false;
  return std::equal(tail.begin(), tail.end(), full.end() - static_cast<std::ptrdiff_t>(tail.size()));
}

void check_broadcast(OpKind kind, const Shape& a, const Shape& b) {
  if (!is_suffix(a, b)) shape_error(kind, a, b, "right operand must match or be a trailing suffix");
}

// Adds g (shape of a) into the grad of b, reducing over broadcast leading axes.
void reduce_into(Tensor& gb, const Tensor& g) {
  const std::size_t n = gb.size();
  double* out = gb.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); i += n) {
    for (std::size_t j = 0; j < n; ++j) out[j] += src[i + j];
  }
}

template <typename F, typename D>
Var unary(OpKind kind, Var x, F f, D deriv_from_in_out) {
  Tape& tape = tape_of(kind, x);
  const Tensor& in = tape.value(x);
  Tensor out(in.shape(), 0.0);
  if (in.shape().empty()) out = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  const int xid = x.id;
  const int self = static_cast<int>(tape.size());
  return tape.record(kind, {xid}, std::move(out), [xid, self, deriv_from_in_out](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    const Tensor& in = t.value(xid);
    const Tensor& out = t.value(self);
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv_from_in_out(in[i], out[i]);
  });
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMultiply: return "multiply";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kConcat: return "concat";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSlice: return "slice";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kLstmStep: return "lstm_step";
    case OpKind::kPower: return "power";
    case OpKind::kClamp: return "clamp";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kGroupSum: return "group_sum";
    case OpKind::kScaleRows: return "scale_rows";
  }
  return "unknown";
}

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("unbound variable");
  return tape->value(id);
}

Var Tape::push(Node node) {
  if (check_finite_ && !node.value.all_finite()) {
    throw std::domain_error(std::string(op_name(node.kind)) + ": non-finite value produced (node " +
                            std::to_string(nodes_.size()) + ")");
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::record(OpKind kind, std::vector<int> inputs, Tensor value, Pullback pullback) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  for (int id : inputs) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw std::logic_error("tape: input node does not precede its consumer");
    }
    n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.pullback = std::move(pullback);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(int id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss is not recorded on this tape");
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_to_string(lv.shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_buffer(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.pullback) continue;
    n.pullback(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) return Tensor::zeros_like(n.value);
  return n.grad;
}

void Tape::reset() { nodes_.clear(); }

namespace {

constexpr std::size_t kRows = 8;
constexpr std::size_t kCols = 16;

using Vec8 = double __attribute__((vector_size(64)));

inline Vec8 load8(const double* p) {
  Vec8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void add_store8(double* p, Vec8 v) {
  Vec8 x = load8(p) + v;
  std::memcpy(p, &x, sizeof x);
}

// c[r][j0 .. j0 + 16) += sum_p a[r][p] * b[p][j0 .. j0 + 16).
inline void block_kernel(const double* a, const double* b, double* const* c, std::size_t rows, std::size_t k,
                         std::size_t n, std::size_t j0) {
  Vec8 acc[kRows][2] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n + j0;
    const Vec8 b0 = load8(bp), b1 = load8(bp + 8);
    for (std::size_t r = 0; r < kRows; ++r) {
      const double av = a[r * k + p];
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    add_store8(c[r] + j0, acc[r][0]);
    add_store8(c[r] + j0 + 8, acc[r][1]);
  }
}

// Same arithmetic for the last n - j0 < 16 columns.
inline void block_tail(const double* a, const double* b, double* const* c, std::size_t rows, std::size_t k,
                       std::size_t n, std::size_t j0) {
  const std::size_t cols = n - j0;
  double acc[kRows][kCols] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n + j0;
    for (std::size_t r = 0; r < kRows; ++r) {
      const double av = a[r * k + p];
      for (std::size_t j = 0; j < cols; ++j) acc[r][j] += av * bp[j];
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) c[r][j0 + j] += acc[r][j];
}

}  // namespace

// Row blocks shorter than kRows are zero-padded so every row goes through
// the same instruction sequence; results are independent of row position.
void matmul_kernel(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                   bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  std::vector<double> pad;
  for (std::size_t i0 = 0; i0 < m; i0 += kRows) {
    const std::size_t rows = std::min(kRows, m - i0);
    const double* ab = a + i0 * k;
    if (rows < kRows) {
      pad.assign(kRows * k, 0.0);
      std::copy(ab, ab + rows * k, pad.begin());
      ab = pad.data();
    }
    double* crow[kRows];
    for (std::size_t r = 0; r < kRows; ++r) crow[r] = c + (i0 + std::min(r, rows - 1)) * n;
    std::size_t j0 = 0;
    for (; j0 + kCols <= n; j0 += kCols) block_kernel(ab, b, crow, rows, k, n, j0);
    if (j0 < n) block_tail(ab, b, crow, rows, k, n, j0);
  }
}

namespace {

void transpose(const double* x, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t q = 0; q < cols; ++q) out[q * rows + r] = x[r * cols + q];
}

// c (m x k) += g (m x n) * b^T, b is k x n.
void matmul_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
  std::vector<double> bt(n * k);
  transpose(b, bt.data(), k, n);
  matmul_kernel(g, bt.data(), c, m, n, k, true);
}

// c (k x n) += a^T * g, a is m x k, g is m x n.
void matmul_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> at(m * k);
  transpose(a, at.data(), m, k);
  matmul_kernel(at.data(), g, c, k, m, n, true);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(OpKind::kMatmul, a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    shape_error(OpKind::kMatmul, av.shape(), bv.shape());
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out(Shape{m, n}, 0.0);
  matmul_kernel(av.data(), bv.data(), out.data(), m, k, n, true);
  const int aid = a.id, bid = b.id;
  return tape.record(OpKind::kMatmul, {aid, bid}, std::move(out), [aid, bid, m, k, n](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(aid);
    const Tensor& bv = t.value(bid);
    if (t.requires_grad(aid)) matmul_nt(g.data(), bv.data(), t.grad_buffer(aid).data(), m, n, k);
    if (t.requires_grad(bid)) matmul_tn(av.data(), g.data(), t.grad_buffer(bid).data(), m, k, n);
  });
}

namespace {

Var add_like(OpKind kind, Var a, Var b, double sign) {
  Tape& tape = same_tape(kind, a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  check_broadcast(kind, av.shape(), bv.shape());
  Tensor out = av;
  const std::size_t nb = bv.size();
  for (std::size_t i = 0; i < out.size(); i += nb)
    for (std::size_t j = 0; j < nb; ++j) out[i + j] += sign * bv[j];
  const int aid = a.id, bid = b.id;
  return tape.record(kind, {aid, bid}, std::move(out), [aid, bid, sign](Tape& t, const Tensor& g) {
    if (t.requires_grad(aid)) {
      Tensor& ga = t.grad_buffer(aid);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_buffer(bid);
      if (sign > 0) {
        reduce_into(gb, g);
      } else {
        Tensor neg = g;
        for (auto& v : neg.values()) v = -v;
        reduce_into(gb, neg);
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_like(OpKind::kAdd, a, b, 1.0); }
Var sub(Var a, Var b) { return add_like(OpKind::kSub, a, b, -1.0); }

Var mul(Var a, Var b) {
  Tape& tape = same_tape(OpKind::kMultiply, a, b);
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  check_broadcast(OpKind::kMultiply, av.shape(), bv.shape());
  Tensor out = av;
  const std::size_t nb = bv.size();
  for (std::size_t i = 0; i < out.size(); i += nb)
    for (std::size_t j = 0; j < nb; ++j) out[i + j] *= bv[j];
  const int aid = a.id, bid = b.id;
  return tape.record(OpKind::kMultiply, {aid, bid}, std::move(out), [aid, bid, nb](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(aid);
    const Tensor& bv = t.value(bid);
    if (t.requires_grad(aid)) {
      Tensor& ga = t.grad_buffer(aid);
      for (std::size_t i = 0; i < g.size(); i += nb)
        for (std::size_t j = 0; j < nb; ++j) ga[i + j] += g[i + j] * bv[j];
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_buffer(bid);
      for (std::size_t i = 0; i < g.size(); i += nb)
        for (std::size_t j = 0; j < nb; ++j) gb[j] += g[i + j] * av[i + j];
    }
  });
}

Var scale(Var x, double factor) {
  return unary(OpKind::kScale, x, [factor](double v) { return v * factor; },
               [factor](double, double) { return factor; });
}

Var add_scalar(Var x, double offset) {
  return unary(OpKind::kAddScalar, x, [offset](double v) { return v + offset; },
               [](double, double) { return 1.0; });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape& tape = tape_of(OpKind::kConcat, parts[0]);
  const Shape& first = tape.value(parts[0]).shape();
  if (first.empty()) throw std::invalid_argument("concat: scalar operand");
  Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (p.tape != &tape) throw std::invalid_argument("concat: operands live on different tapes");
    const Shape& s = tape.value(p).shape();
    if (s.empty() || !std::equal(lead.begin(), lead.end(), s.begin(), s.end() - 1) || s.size() != first.size()) {
      shape_error(OpKind::kConcat, first, s, "leading axes must agree");
    }
    widths.push_back(s.back());
    total += s.back();
    ids.push_back(p.id);
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape, 0.0);
  const std::size_t rows = out.rows();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = tape.value(ids[k]);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }
  auto deps = ids;
  return tape.record(OpKind::kConcat, std::move(deps), std::move(out),
                     [ids, widths, total, rows](Tape& t, const Tensor& g) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (t.requires_grad(ids[k])) {
                           Tensor& gk = t.grad_buffer(ids[k]);
                           for (std::size_t r = 0; r < rows; ++r) {
                             const double* src = g.data() + r * total + offset;
                             double* dst = gk.data() + r * widths[k];
                             for (std::size_t j = 0; j < widths[k]; ++j) dst[j] += src[j];
                           }
                         }
                         offset += widths[k];
                       }
                     });
}

Var relu(Var x) {
  return unary(OpKind::kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var x) {
  return unary(OpKind::kTanh, x, [](double v) { return std::tanh(v); },
               [](double, double out) { return 1.0 - out * out; });
}

Var sigmoid(Var x) {
  return unary(OpKind::kSigmoid, x,
               [](double v) {
                 if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                 const double e = std::exp(v);
                 return e / (1.0 + e);
               },
               [](double, double out) { return out * (1.0 - out); });
}

Var log(Var x) {
  Tape& tape = tape_of(OpKind::kLog, x);
  for (double v : tape.value(x).values()) {
    if (!(v > 0.0)) throw std::domain_error("log: non-positive input " + std::to_string(v));
  }
  return unary(OpKind::kLog, x, [](double v) { return std::log(v); },
               [](double in, double) { return 1.0 / in; });
}

Var exp(Var x) {
  return unary(OpKind::kExp, x, [](double v) { return std::exp(v); },
               [](double, double out) { return out; });
}

Var softmax(Var x) {
  Tape& tape = tape_of(OpKind::kSoftmax, x);
  const Tensor& in = tape.value(x);
  if (in.rank() == 0) throw std::invalid_argument("softmax: scalar input");
  Tensor out(in.shape(), 0.0);
  const std::size_t rows = in.rows(), cols = in.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = in.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(src.begin(), src.end());
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (dst[j] = std::exp(src[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) dst[j] /= z;
  }
  const int xid = x.id;
  const int self = static_cast<int>(tape.size());
  return tape.record(OpKind::kSoftmax, {xid}, std::move(out), [xid, self, rows, cols](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[r * cols + j] * y[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += y[r * cols + j] * (g[r * cols + j] - dot);
    }
  });
}

Var log_softmax(Var x) {
  Tape& tape = tape_of(OpKind::kLogSoftmax, x);
  const Tensor& in = tape.value(x);
  if (in.rank() == 0) throw std::invalid_argument("log_softmax: scalar input");
  Tensor out(in.shape(), 0.0);
  const std::size_t rows = in.rows(), cols = in.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = in.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(src.begin(), src.end());
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(src[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) dst[j] = src[j] - lz;
  }
  const int xid = x.id;
  const int self = static_cast<int>(tape.size());
  return tape.record(OpKind::kLogSoftmax, {xid}, std::move(out), [xid, self, rows, cols](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t r = 0; r < rows; ++r) {
      double gs = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gs += g[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += g[r * cols + j] - std::exp(y[r * cols + j]) * gs;
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(OpKind::kSum, x);
  double total = 0.0;
  for (double v : tape.value(x).values()) total += v;
  const int xid = x.id;
  return tape.record(OpKind::kSum, {xid}, Tensor::scalar(total), [xid](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    Tensor& gx = t.grad_buffer(xid);
    for (auto& v : gx.values()) v += g[0];
  });
}

Var mean(Var x) {
  Tape& tape = tape_of(OpKind::kMean, x);
  const Tensor& in = tape.value(x);
  double total = 0.0;
  for (double v : in.values()) total += v;
  const double inv = 1.0 / static_cast<double>(in.size());
  const int xid = x.id;
  return tape.record(OpKind::kMean, {xid}, Tensor::scalar(total * inv), [xid, inv](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    Tensor& gx = t.grad_buffer(xid);
    for (auto& v : gx.values()) v += g[0] * inv;
  });
}

Var slice(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(OpKind::kSlice, x);
  const Tensor& in = tape.value(x);
  if (in.rank() == 0 || begin >= end || end > in.cols()) {
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") invalid for shape " + shape_to_string(in.shape()));
  }
  Shape s = in.shape();
  s.back() = end - begin;
  Tensor out(s, 0.0);
  const std::size_t rows = in.rows(), cols = in.cols(), w = end - begin;
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(in.data() + r * cols + begin, w, out.data() + r * w);
  const int xid = x.id;
  return tape.record(OpKind::kSlice, {xid}, std::move(out), [xid, rows, cols, begin, w](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < w; ++j) gx[r * cols + begin + j] += g[r * w + j];
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(OpKind::kSliceRows, x);
  const Tensor& in = tape.value(x);
  if (in.rank() != 2 || begin >= end || end > in.dim(0)) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") invalid for shape " + shape_to_string(in.shape()));
  }
  const std::size_t cols = in.cols();
  Tensor out(Shape{end - begin, cols}, 0.0);
  std::copy_n(in.data() + begin * cols, (end - begin) * cols, out.data());
  const int xid = x.id;
  return tape.record(OpKind::kSliceRows, {xid}, std::move(out), [xid, begin, cols](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    double* gx = t.grad_buffer(xid).data() + begin * cols;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var power(Var x, double exponent) {
  return unary(OpKind::kPower, x, [exponent](double v) { return std::pow(v, exponent); },
               [exponent](double in, double) { return exponent * std::pow(in, exponent - 1.0); });
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  return unary(OpKind::kClamp, x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](double in, double) { return (in >= lo && in <= hi) ? 1.0 : 0.0; });
}

Var gather_rows(Var x, std::span<const std::size_t> index) {
  Tape& tape = tape_of(OpKind::kGatherRows, x);
  const Tensor& in = tape.value(x);
  if (in.rank() != 2) throw std::invalid_argument("gather_rows: rank-2 input required, got " + shape_to_string(in.shape()));
  if (index.empty()) throw std::invalid_argument("gather_rows: empty index");
  const std::size_t cols = in.cols(), n = in.dim(0);
  Tensor out(Shape{index.size(), cols}, 0.0);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= n) throw std::out_of_range("gather_rows: row " + std::to_string(index[r]) + " of " + std::to_string(n));
    std::copy_n(in.data() + index[r] * cols, cols, out.data() + r * cols);
  }
  const int xid = x.id;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.record(OpKind::kGatherRows, {xid}, std::move(out), [xid, idx = std::move(idx), cols](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = gx.data() + idx[r] * cols;
      const double* src = g.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  });
}

Var group_sum(Var x, const std::vector<std::vector<std::size_t>>& groups) {
  Tape& tape = tape_of(OpKind::kGroupSum, x);
  const Tensor& in = tape.value(x);
  if (in.rank() != 2) throw std::invalid_argument("group_sum: rank-2 input required, got " + shape_to_string(in.shape()));
  if (groups.empty()) throw std::invalid_argument("group_sum: no groups");
  const std::size_t cols = in.cols(), n = in.dim(0);
  Tensor out(Shape{groups.size(), cols}, 0.0);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    double* dst = out.data() + gi * cols;
    for (std::size_t r : groups[gi]) {
      if (r >= n) throw std::out_of_range("group_sum: row " + std::to_string(r) + " of " + std::to_string(n));
      const double* src = in.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
    }
  }
  const int xid = x.id;
  auto shared = std::make_shared<const std::vector<std::vector<std::size_t>>>(groups);
  return tape.record(OpKind::kGroupSum, {xid}, std::move(out), [xid, shared, cols](Tape& t, const Tensor& g) {
    if (!t.requires_grad(xid)) return;
    Tensor& gx = t.grad_buffer(xid);
    for (std::size_t gi = 0; gi < shared->size(); ++gi) {
      const double* src = g.data() + gi * cols;
      for (std::size_t r : (*shared)[gi]) {
        double* dst = gx.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
      }
    }
  });
}

Var scale_rows(Var x, Var s) {
  Tape& tape = same_tape(OpKind::kScaleRows, x, s);
  const Tensor& xv = tape.value(x);
  const Tensor& sv = tape.value(s);
  if (xv.rank() != 2 || sv.size() != xv.dim(0)) shape_error(OpKind::kScaleRows, xv.shape(), sv.shape());
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out = xv;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] *= sv[r];
  const int xid = x.id, sid = s.id;
  return tape.record(OpKind::kScaleRows, {xid, sid}, std::move(out), [xid, sid, rows, cols](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(xid);
    const Tensor& sv = t.value(sid);
    if (t.requires_grad(xid)) {
      Tensor& gx = t.grad_buffer(xid);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += g[r * cols + j] * sv[r];
    }
    if (t.requires_grad(sid)) {
      Tensor& gs = t.grad_buffer(sid);
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += g[r * cols + j] * xv[r * cols + j];
        gs[r] += acc;
      }
    }
  });
}

namespace {

// In place over n contiguous values. Element k's result depends only on its
// value and on k mod 4 relative to the span start.
void sigmoid_span(double* v, std::size_t n) {
  std::size_t i = 0;
#ifdef RELIMP_VECTOR_MATH
  const __m256d one = _mm256_set1_pd(1.0);
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _ZGVdN4v_exp(_mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(v + i, _mm256_div_pd(one, _mm256_add_pd(one, e)));
  }
#endif
  for (; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
}

// tanh(x) = sign(x) * -e / (2 + e) with e = expm1(-2|x|).
inline double tanh_via_expm1(double x) {
  const double e = std::expm1(-2.0 * std::abs(x));
  return std::copysign(-e / (2.0 + e), x);
}

void tanh_span(double* v, std::size_t n) {
  std::size_t i = 0;
#ifdef RELIMP_VECTOR_MATH
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(v + i);
    const __m256d ax = _mm256_andnot_pd(sign, x);
    const __m256d e = _ZGVdN4v_expm1(_mm256_mul_pd(_mm256_set1_pd(-2.0), ax));
    const __m256d t = _mm256_div_pd(_mm256_sub_pd(_mm256_setzero_pd(), e), _mm256_add_pd(two, e));
    _mm256_storeu_pd(v + i, _mm256_or_pd(t, _mm256_and_pd(sign, x)));
  }
#endif
  for (; i < n; ++i) v[i] = tanh_via_expm1(v[i]);
}

}  // namespace

Var lstm_step(Var x, Var h, Var c, Var wx, Var wh, Var b) {
  Tape& tape = tape_of(OpKind::kLstmStep, x);
  for (Var v : {h, c, wx, wh, b}) same_tape(OpKind::kLstmStep, x, v);
  const Tensor& xv = tape.value(x);
  const Tensor& hv = tape.value(h);
  const Tensor& cv = tape.value(c);
  const Tensor& wxv = tape.value(wx);
  const Tensor& whv = tape.value(wh);
  const Tensor& bv = tape.value(b);
  if (xv.rank() != 2 || hv.rank() != 2 || wxv.rank() != 2 || whv.rank() != 2) {
    shape_error(OpKind::kLstmStep, xv.shape(), wxv.shape());
  }
  const std::size_t m = xv.dim(0), d = xv.dim(1), hd = hv.dim(1), g4 = 4 * hd;
  if (hv.dim(0) != m || cv.shape() != hv.shape()) shape_error(OpKind::kLstmStep, hv.shape(), cv.shape());
  if (wxv.dim(0) != d || wxv.dim(1) != g4) shape_error(OpKind::kLstmStep, xv.shape(), wxv.shape());
  if (whv.dim(0) != hd || whv.dim(1) != g4) shape_error(OpKind::kLstmStep, hv.shape(), whv.shape());
  if (bv.size() != g4) shape_error(OpKind::kLstmStep, whv.shape(), bv.shape());

  // gates holds activated i, f, g, o; tc holds tanh(c').
  Tensor gates(Shape{m, g4}, 0.0);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(bv.data(), g4, gates.data() + r * g4);
  matmul_kernel(xv.data(), wxv.data(), gates.data(), m, d, g4, true);
  matmul_kernel(hv.data(), whv.data(), gates.data(), m, hd, g4, true);
  Tensor out(Shape{m, 2 * hd}, 0.0);
  Tensor tc(Shape{m, hd}, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double* z = gates.data() + r * g4;
    sigmoid_span(z, 2 * hd);
    tanh_span(z + 2 * hd, hd);
    sigmoid_span(z + 3 * hd, hd);
    double* t = tc.data() + r * hd;
    for (std::size_t j = 0; j < hd; ++j) {
      const double cn = z[hd + j] * cv[r * hd + j] + z[j] * z[2 * hd + j];
      t[j] = cn;
      out[r * 2 * hd + hd + j] = cn;
    }
    tanh_span(t, hd);
    for (std::size_t j = 0; j < hd; ++j) out[r * 2 * hd + j] = z[3 * hd + j] * t[j];
  }
  const int ids[6] = {x.id, h.id, c.id, wx.id, wh.id, b.id};
  return tape.record(
      OpKind::kLstmStep, {ids[0], ids[1], ids[2], ids[3], ids[4], ids[5]}, std::move(out),
      [ids, m, d, hd, g4, gates = std::move(gates), tc = std::move(tc)](Tape& t, const Tensor& g) {
        const Tensor& cv = t.value(ids[2]);
        std::vector<double> dz(m * g4);
        for (std::size_t r = 0; r < m; ++r) {
          const double* z = gates.data() + r * g4;
          double* dzr = dz.data() + r * g4;
          for (std::size_t j = 0; j < hd; ++j) {
            const double dh = g[r * 2 * hd + j];
            const double tj = tc[r * hd + j];
            const double i = z[j], f = z[hd + j], gg = z[2 * hd + j], o = z[3 * hd + j];
            const double dc = g[r * 2 * hd + hd + j] + dh * o * (1.0 - tj * tj);
            dzr[j] = dc * gg * i * (1.0 - i);
            dzr[hd + j] = dc * cv[r * hd + j] * f * (1.0 - f);
            dzr[2 * hd + j] = dc * i * (1.0 - gg * gg);
            dzr[3 * hd + j] = dh * tj * o * (1.0 - o);
          }
        }
        if (t.requires_grad(ids[2])) {
          Tensor& gc = t.grad_buffer(ids[2]);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < hd; ++j) {
              const double dh = g[r * 2 * hd + j];
              const double tj = tc[r * hd + j];
              const double o = gates[r * g4 + 3 * hd + j], f = gates[r * g4 + hd + j];
              gc[r * hd + j] += (g[r * 2 * hd + hd + j] + dh * o * (1.0 - tj * tj)) * f;
            }
          }
        }
        if (t.requires_grad(ids[0])) matmul_nt(dz.data(), t.value(ids[3]).data(), t.grad_buffer(ids[0]).data(), m, g4, d);
        if (t.requires_grad(ids[1])) matmul_nt(dz.data(), t.value(ids[4]).data(), t.grad_buffer(ids[1]).data(), m, g4, hd);
        if (t.requires_grad(ids[3])) matmul_tn(t.value(ids[0]).data(), dz.data(), t.grad_buffer(ids[3]).data(), m, d, g4);
        if (t.requires_grad(ids[4])) matmul_tn(t.value(ids[1]).data(), dz.data(), t.grad_buffer(ids[4]).data(), m, hd, g4);
        if (t.requires_grad(ids[5])) {
          double* gb = t.grad_buffer(ids[5]).data();
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t j = 0; j < g4; ++j) gb[j] += dz[r * g4 + j];
        }
      });
}

}  // namespace relimp::ad
