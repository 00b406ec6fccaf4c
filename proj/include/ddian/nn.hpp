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
#include <span>
#include <vector>

#include "ddian/autodiff.hpp"

namespace ddian::nn {

struct LinearLayer {
  ad::Tensor weight;  // in x out
  ad::Tensor bias;    // 1 x out

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
};

// Affine layers with relu between them and no activation after the last one.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<LinearLayer> layers);

  ad::Tensor forward(ad::Graph& g, const ad::Tensor& x) const;

  const std::vector<LinearLayer>& layers() const { return layers_; }
  std::size_t in_features() const;
  std::size_t out_features() const;
  // [in, hidden..., out]
  std::vector<std::size_t> dims() const;
  // weight0, bias0, weight1, bias1, ...
  std::vector<ad::Tensor> parameters() const;

 private:
  std::vector<LinearLayer> layers_;
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Mlp init_params(std::span<const std::size_t> dims, std::uint64_t seed);

// Trainable tensors in registration order, each with a learning-rate multiplier.
class ParamSet {
 public:
  struct Entry {
    ad::Tensor tensor;
    double lr_multiplier = 1.0;
  };

  // Throws ContractError if the same tensor is registered twice.
  void add(const ad::Tensor& t, double lr_multiplier = 1.0);
  void add(const Mlp& net, double lr_multiplier = 1.0);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  void zero_grad() const;

 private:
  std::vector<Entry> entries_;
};

// v <- mu * v - lr * g ; p <- p + v, per parameter with lr scaled by its multiplier.
class SgdMomentum {
 public:
  SgdMomentum(ParamSet params, double learning_rate, double momentum = 0.9);

  // Gradients are left untouched; callers zero them.
  void step();

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }
  double momentum() const { return momentum_; }
  const ParamSet& params() const { return params_; }
  const Matrix& velocity(std::size_t i) const { return velocity_.at(i); }

 private:
  ParamSet params_;
  double learning_rate_;
  double momentum_;
  std::vector<Matrix> velocity_;
};

// Annealing schedules over training progress p in [0, 1].
struct Schedules {
  double eta0 = 0.01;

  // eta0 / (1 + 10 p)^0.75
  double lr_at(double p) const;
  // 2 / (1 + exp(-10 p)) - 1
  double grl_lambda_at(double p) const;
};

}  // namespace ddian::nn
