/*
 * Copyright 2026 The DDIAN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "ddian/matrix.hpp"

// Define-by-run reverse-mode automatic differentiation over dense matrices.
//
// A Tensor is a shared handle to a value and its gradient accumulator. A Graph
// is an append-only tape: each operation computes its output eagerly and
// records how to push the output gradient back to its inputs. backward()
// walks the tape in exact reverse insertion order. Build a fresh Graph for
// every training step; parameters are Tensors that outlive the graphs.

namespace ddian::ad {

class Tensor {
 public:
  Tensor() = default;

  // Leaf that never receives gradient (inputs, masks, detached values).
  static Tensor constant(Matrix value);
  // Leaf that accumulates gradient (trainable parameters).
  static Tensor parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  std::uint64_t id() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;

  const Matrix& value() const;
  // Direct access for optimizers and finite-difference probes.
  Matrix& mutable_value();
  const Matrix& grad() const;
  Matrix& mutable_grad();
  void zero_grad();

  // Scalar value of a 1x1 tensor.
  double item() const;

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.node_ == b.node_; }

 private:
  struct Node;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend class Graph;
};

enum class OpKind {
  kMatmul,
  kAddRowBroadcast,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kScale,
  kAddScalar,
  kSquare,
  kRelu,
  kLogSoftmaxRows,
  kGradReverse,
  kSumAll,
  kMeanAll,
  kRowSum,
  kGatherRows,
  kConcatRows,
};

std::string_view op_name(OpKind kind);

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Tensor matmul(const Tensor& a, const Tensor& b);
  // Adds the 1 x n row b to every row of a.
  Tensor add_row_broadcast(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor add_scalar(const Tensor& a, double s);
  Tensor square(const Tensor& a);
  // max(0, x); subgradient 0 at x == 0.
  Tensor relu(const Tensor& a);
  Tensor log_softmax_rows(const Tensor& a);
  // Identity forward; backward multiplies the gradient by -lambda.
  Tensor grad_reverse(const Tensor& a, double lambda);
  Tensor sum_all(const Tensor& a);
  Tensor mean_all(const Tensor& a);
  // m x n -> m x 1
  Tensor row_sum(const Tensor& a);
  // out.row(i) = a.row(index[i]); rows may repeat.
  Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
  Tensor concat_rows(std::span<const Tensor> parts);

  // Seeds d(root)/d(root) = 1 and propagates. Gradients of leaves accumulate
  // across calls; gradients of recorded outputs are recomputed from zero.
  void backward(const Tensor& root);

  // Zeroes the gradient of every tensor referenced by the tape.
  void zero_grad_all();

  std::size_t size() const { return tape_.size(); }
  OpKind kind_at(std::size_t i) const { return tape_.at(i).kind; }

  // Smallest |x| seen at any relu input (infinity if no relu recorded).
  double min_relu_margin() const { return min_relu_margin_; }

 private:
  struct Record {
    OpKind kind;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void(const Matrix& grad_out)> backward;
  };

  Tensor record(OpKind kind, std::vector<Tensor> inputs, Matrix value,
                std::function<void(const Matrix&)> backward);

  std::vector<Record> tape_;
  double min_relu_margin_ = std::numeric_limits<double>::infinity();
};

void zero_grad(std::span<const Tensor> tensors);

}  // namespace ddian::ad
