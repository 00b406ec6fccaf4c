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

#include "ddian/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <unordered_set>

#include "ddian/error.hpp"
#include "ddian/simd/kernels.hpp"

namespace ddian::ad {

struct Tensor::Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::uint64_t id = 0;
};

namespace {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shapes differ: " + shape_string(a.value()) +
                         " vs " + shape_string(b.value()));
}

void require_defined(std::string_view op, const Tensor& t) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->grad = Matrix(value.rows(), value.cols());
  node->value = std::move(value);
  node->id = next_id();
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  Tensor t = constant(std::move(value));
  t.node_->requires_grad = true;
  return t;
}

std::uint64_t Tensor::id() const { return node_ ? node_->id : 0; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }
const Matrix& Tensor::grad() const { return node_->grad; }
Matrix& Tensor::mutable_grad() { return node_->grad; }
void Tensor::zero_grad() { node_->grad.fill(0.0); }

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw ContractError("item() on non-scalar tensor of shape " + shape_string(value()));
  return value()[0];
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAddRowBroadcast: return "add_row_broadcast";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kSquare: return "square";
    case OpKind::kRelu: return "relu";
    case OpKind::kLogSoftmaxRows: return "log_softmax_rows";
    case OpKind::kGradReverse: return "grad_reverse";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kMeanAll: return "mean_all";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kConcatRows: return "concat_rows";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Graph

Tensor Graph::record(OpKind kind, std::vector<Tensor> inputs, Matrix value,
                     std::function<void(const Matrix&)> backward) {
  Tensor out = Tensor::constant(std::move(value));
  out.node_->requires_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  tape_.push_back(Record{kind, std::move(inputs), out, std::move(backward)});
  return out;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ: " + shape_string(a.value()) + " * " +
                         shape_string(b.value()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix out(m, n);
  const auto& kt = simd::kernels();
  kt.gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  return record(OpKind::kMatmul, {a, b}, std::move(out), [a, b, m, k, n](const Matrix& g) {
    const auto& kt = simd::kernels();
    Tensor ta = a, tb = b;
    if (ta.requires_grad())
      simd::gemm_nt(kt, g.data(), tb.value().data(), ta.mutable_grad().data(), m, n, k);
    if (tb.requires_grad())
      kt.gemm_tn(ta.value().data(), g.data(), tb.mutable_grad().data(), m, k, n);
  });
}

Tensor Graph::add_row_broadcast(const Tensor& a, const Tensor& b) {
  require_defined("add_row_broadcast", a);
  require_defined("add_row_broadcast", b);
  if (b.rows() != 1 || b.cols() != a.cols())
    throw DimensionError("add_row_broadcast: cannot broadcast " + shape_string(b.value()) +
                         " over " + shape_string(a.value()));
  const auto& kt = simd::kernels();
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    kt.add(out.row(r).data(), b.value().data(), out.row(r).data(), out.cols());
  return record(OpKind::kAddRowBroadcast, {a, b}, std::move(out), [a, b](const Matrix& g) {
    const auto& kt = simd::kernels();
    Tensor ta = a, tb = b;
    if (ta.requires_grad()) kt.axpy(1.0, g.data(), ta.mutable_grad().data(), g.size());
    if (tb.requires_grad())
      for (std::size_t r = 0; r < g.rows(); ++r)
        kt.axpy(1.0, g.row(r).data(), tb.mutable_grad().data(), g.cols());
  });
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto& kt = simd::kernels();
  Matrix out(a.rows(), a.cols());
  kt.add(a.value().data(), b.value().data(), out.data(), out.size());
  return record(OpKind::kAdd, {a, b}, std::move(out), [a, b](const Matrix& g) {
    const auto& kt = simd::kernels();
    Tensor ta = a, tb = b;
    if (ta.requires_grad()) kt.axpy(1.0, g.data(), ta.mutable_grad().data(), g.size());
    if (tb.requires_grad()) kt.axpy(1.0, g.data(), tb.mutable_grad().data(), g.size());
  });
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  const auto& kt = simd::kernels();
  Matrix out(a.rows(), a.cols());
  kt.sub(a.value().data(), b.value().data(), out.data(), out.size());
  return record(OpKind::kSub, {a, b}, std::move(out), [a, b](const Matrix& g) {
    const auto& kt = simd::kernels();
    Tensor ta = a, tb = b;
    if (ta.requires_grad()) kt.axpy(1.0, g.data(), ta.mutable_grad().data(), g.size());
    if (tb.requires_grad()) kt.axpy(-1.0, g.data(), tb.mutable_grad().data(), g.size());
  });
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const auto& kt = simd::kernels();
  Matrix out(a.rows(), a.cols());
  kt.mul(a.value().data(), b.value().data(), out.data(), out.size());
  return record(OpKind::kMul, {a, b}, std::move(out), [a, b](const Matrix& g) {
    const auto& kt = simd::kernels();
    Tensor ta = a, tb = b;
    Matrix tmp(g.rows(), g.cols());
    if (ta.requires_grad()) {
      kt.mul(g.data(), tb.value().data(), tmp.data(), g.size());
      kt.axpy(1.0, tmp.data(), ta.mutable_grad().data(), g.size());
    }
    if (tb.requires_grad()) {
      kt.mul(g.data(), ta.value().data(), tmp.data(), g.size());
      kt.axpy(1.0, tmp.data(), tb.mutable_grad().data(), g.size());
    }
  });
}

Tensor Graph::div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] / b.value()[i];
  return record(OpKind::kDiv, {a, b}, std::move(out), [a, b](const Matrix& g) {
    Tensor ta = a, tb = b;
    const Matrix& av = ta.value();
    const Matrix& bv = tb.value();
    if (ta.requires_grad()) {
      Matrix& ga = ta.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
    }
    if (tb.requires_grad()) {
      Matrix& gb = tb.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

Tensor Graph::scale(const Tensor& a, double s) {
  require_defined("scale", a);
  Matrix out(a.rows(), a.cols());
  simd::kernels().scale(s, a.value().data(), out.data(), out.size());
  return record(OpKind::kScale, {a}, std::move(out), [a, s](const Matrix& g) {
    Tensor ta = a;
    if (ta.requires_grad()) simd::kernels().axpy(s, g.data(), ta.mutable_grad().data(), g.size());
  });
}

Tensor Graph::add_scalar(const Tensor& a, double s) {
  require_defined("add_scalar", a);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  return record(OpKind::kAddScalar, {a}, std::move(out), [a](const Matrix& g) {
    Tensor ta = a;
    if (ta.requires_grad()) simd::kernels().axpy(1.0, g.data(), ta.mutable_grad().data(), g.size());
  });
}

Tensor Graph::square(const Tensor& a) {
  require_defined("square", a);
  Matrix out(a.rows(), a.cols());
  simd::kernels().mul(a.value().data(), a.value().data(), out.data(), out.size());
  return record(OpKind::kSquare, {a}, std::move(out), [a](const Matrix& g) {
    Tensor ta = a;
    if (!ta.requires_grad()) return;
    const auto& kt = simd::kernels();
    Matrix tmp(g.rows(), g.cols());
    kt.mul(g.data(), ta.value().data(), tmp.data(), g.size());
    kt.axpy(2.0, tmp.data(), ta.mutable_grad().data(), g.size());
  });
}

Tensor Graph::relu(const Tensor& a) {
  require_defined("relu", a);
  Matrix out(a.rows(), a.cols());
  simd::kernels().relu_forward(a.value().data(), out.data(), out.size());
  for (double x : a.value().span()) min_relu_margin_ = std::min(min_relu_margin_, std::abs(x));
  return record(OpKind::kRelu, {a}, std::move(out), [a](const Matrix& g) {
    Tensor ta = a;
    if (ta.requires_grad())
      simd::kernels().relu_backward(ta.value().data(), g.data(), ta.mutable_grad().data(),
                                    g.size());
  });
}

Tensor Graph::log_softmax_rows(const Tensor& a) {
  require_defined("log_softmax_rows", a);
  if (a.cols() == 0) throw DimensionError("log_softmax_rows: zero columns");
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto in = a.value().row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double x : in) sum += std::exp(x - mx);
    const double log_sum = std::log(sum);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = (in[c] - mx) - log_sum;
  }
  Tensor saved = Tensor::constant(out);
  return record(OpKind::kLogSoftmaxRows, {a}, std::move(out), [a, saved](const Matrix& g) {
    Tensor ta = a;
    if (!ta.requires_grad()) return;
    Matrix& ga = ta.mutable_grad();
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      double gsum = 0.0;
      for (double x : gr) gsum += x;
      auto lp = saved.value().row(r);
      auto gar = ga.row(r);
      for (std::size_t c = 0; c < gr.size(); ++c) gar[c] += gr[c] - std::exp(lp[c]) * gsum;
    }
  });
}

Tensor Graph::grad_reverse(const Tensor& a, double lambda) {
  require_defined("grad_reverse", a);
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("grad_reverse: lambda must be finite and >= 0, got " +
                         std::to_string(lambda));
  return record(OpKind::kGradReverse, {a}, a.value(), [a, lambda](const Matrix& g) {
    Tensor ta = a;
    if (ta.requires_grad())
      simd::kernels().axpy(-lambda, g.data(), ta.mutable_grad().data(), g.size());
  });
}

Tensor Graph::sum_all(const Tensor& a) {
  require_defined("sum_all", a);
  double s = 0.0;
  for (double x : a.value().span()) s += x;
  return record(OpKind::kSumAll, {a}, Matrix(1, 1, s), [a](const Matrix& g) {
    Tensor ta = a;
    if (!ta.requires_grad()) return;
    for (double& x : ta.mutable_grad().span()) x += g[0];
  });
}

Tensor Graph::mean_all(const Tensor& a) {
  require_defined("mean_all", a);
  if (a.value().size() == 0) throw DimensionError("mean_all: empty tensor");
  double s = 0.0;
  for (double x : a.value().span()) s += x;
  const double n = static_cast<double>(a.value().size());
  return record(OpKind::kMeanAll, {a}, Matrix(1, 1, s / n), [a, n](const Matrix& g) {
    Tensor ta = a;
    if (!ta.requires_grad()) return;
    const double share = g[0] / n;
    for (double& x : ta.mutable_grad().span()) x += share;
  });
}

Tensor Graph::row_sum(const Tensor& a) {
  require_defined("row_sum", a);
  Matrix out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double x : a.value().row(r)) s += x;
    out[r] = s;
  }
  return record(OpKind::kRowSum, {a}, std::move(out), [a](const Matrix& g) {
    Tensor ta = a;
    if (!ta.requires_grad()) return;
    Matrix& ga = ta.mutable_grad();
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double& x : ga.row(r)) x += g[r];
  });
}

Tensor Graph::gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_defined("gather_rows", a);
  Matrix out(index.size(), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.rows())
      throw ContractError("gather_rows: index " + std::to_string(index[i]) +
                          " out of range for " + shape_string(a.value()));
    std::copy_n(a.value().row(index[i]).data(), a.cols(), out.row(i).data());
  }
  std::vector<std::size_t> saved(index.begin(), index.end());
  return record(OpKind::kGatherRows, {a}, std::move(out),
                [a, saved = std::move(saved)](const Matrix& g) {
                  Tensor ta = a;
                  if (!ta.requires_grad()) return;
                  const auto& kt = simd::kernels();
                  Matrix& ga = ta.mutable_grad();
                  for (std::size_t i = 0; i < saved.size(); ++i)
                    kt.axpy(1.0, g.row(i).data(), ga.row(saved[i]).data(), g.cols());
                });
}

Tensor Graph::concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_defined("concat_rows", p);
    if (p.cols() != cols)
      throw DimensionError("concat_rows: column mismatch: " + shape_string(parts.front().value()) +
                           " vs " + shape_string(p.value()));
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
    offset += p.value().size();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return record(OpKind::kConcatRows, inputs, std::move(out), [inputs](const Matrix& g) {
    const auto& kt = simd::kernels();
    std::size_t offset = 0;
    for (Tensor t : inputs) {
      const std::size_t n = t.value().size();
      if (t.requires_grad()) kt.axpy(1.0, g.data() + offset, t.mutable_grad().data(), n);
      offset += n;
    }
  });
}

void Graph::backward(const Tensor& root) {
  require_defined("backward", root);
  if (root.rows() != 1 || root.cols() != 1)
    throw ContractError("backward: root must be a 1x1 tensor, got " + shape_string(root.value()));
  // Leaf gradients of this pass are built from zero and added to the
  // accumulated value at the end, so repeated passes accumulate exactly.
  std::unordered_set<std::uint64_t> outputs;
  for (auto& rec : tape_) {
    rec.output.zero_grad();
    outputs.insert(rec.output.id());
  }
  std::vector<std::pair<Tensor, Matrix>> leaves;
  std::unordered_set<std::uint64_t> seen;
  auto stash = [&](Tensor t) {
    if (!t.requires_grad() || outputs.contains(t.id()) || !seen.insert(t.id()).second) return;
    leaves.emplace_back(t, t.grad());
    t.zero_grad();
  };
  for (auto& rec : tape_)
    for (auto& in : rec.inputs) stash(in);
  stash(root);

  Tensor r = root;
  r.mutable_grad()[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it)
    if (it->output.requires_grad()) it->backward(it->output.grad());

  for (auto& [t, before] : leaves) {
    Matrix& g = t.mutable_grad();
    simd::kernels().add(before.data(), g.data(), g.data(), g.size());
  }
}

void Graph::zero_grad_all() {
  for (auto& rec : tape_) {
    rec.output.zero_grad();
    for (auto& in : rec.inputs) in.zero_grad();
  }
}

void zero_grad(std::span<const Tensor> tensors) {
  for (Tensor t : tensors) t.zero_grad();
}

}  // namespace ddian::ad
