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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "relimp/tensor.hpp"

namespace relimp::ad {

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMultiply,
  kScale,
  kAddScalar,
  kConcat,
  kRelu,
  kTanh,
  kSigmoid,
  kLog,
  kExp,
  kSoftmax,
  kLogSoftmax,
  kSum,
  kMean,
  kSlice,
  kSliceRows,
  kPower,
  kClamp,
  kGatherRows,
  kGroupSum,
  kScaleRows,
  kLstmStep,
};

std::string_view op_name(OpKind kind);

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Append-only record of a forward computation. Node inputs always precede the
// node itself, so reverse insertion order is a valid topological order for the
// backward sweep.
class Tape {
 public:
  // Receives the output gradient; accumulates into the input gradients it owns.
  using Pullback = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(Tensor value);
  Var constant(Tensor value);

  Var record(OpKind kind, std::vector<int> inputs, Tensor value, Pullback pullback);

  const Tensor& value(int id) const { return nodes_.at(id).value; }
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  OpKind kind(int id) const { return nodes_.at(id).kind; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of a node during backward; zero-initialized on first use.
  Tensor& grad_buffer(int id);

  // Fills gradients of every node reachable from `loss`. Loss must be scalar.
  void backward(Var loss);

  // Gradient of the last backward() w.r.t. `v`; zeros if `v` was not reached.
  Tensor grad(Var v) const;

  // Debug evaluation mode: every recorded value is checked for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  void reset();

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Pullback pullback;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool check_finite_ = false;
};

// Elementwise binary ops accept equal shapes, or a right operand whose shape is
// a suffix of the left operand's shape (broadcast over leading axes).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var log(Var x);
Var exp(Var x);
Var softmax(Var x);
Var log_softmax(Var x);
Var sum(Var x);
Var mean(Var x);
// Last-axis columns [begin, end).
Var slice(Var x, std::size_t begin, std::size_t end);
// Rows [begin, end) of a matrix.
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var power(Var x, double exponent);
Var clamp(Var x, double lo, double hi);

// Row gather on a rank-2 tensor; repeated indices accumulate in the pullback.
Var gather_rows(Var x, std::span<const std::size_t> index);
// out[g] = sum of x rows listed in groups[g], summed in list order; empty
// groups produce zero rows.
Var group_sum(Var x, const std::vector<std::vector<std::size_t>>& groups);
// Multiplies row r of x (M x F) by s[r] where s is M x 1.
Var scale_rows(Var x, Var s);

// Fused four-gate LSTM step (gate order i, f, g, o). x is B x D, h and c are
// B x H, wx is D x 4H, wh is H x 4H, b has 4H entries. Returns [h', c'] as
// B x 2H.
Var lstm_step(Var x, Var h, Var c, Var wx, Var wh, Var b);

void matmul_kernel(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate);

}  // namespace relimp::ad
