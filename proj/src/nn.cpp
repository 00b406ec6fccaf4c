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

#include "ddian/nn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "ddian/error.hpp"
#include "ddian/rng.hpp"
#include "ddian/simd/kernels.hpp"

namespace ddian::nn {

Mlp::Mlp(std::vector<LinearLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("Mlp needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.out_features())
      throw DimensionError("layer " + std::to_string(i) + ": bias " +
                           shape_string(l.bias.value()) + " does not match weight " +
                           shape_string(l.weight.value()));
    if (i > 0 && layers_[i - 1].out_features() != l.in_features())
      throw DimensionError("layer " + std::to_string(i) + ": input width " +
                           std::to_string(l.in_features()) + " does not chain with previous output " +
                           std::to_string(layers_[i - 1].out_features()));
  }
}

ad::Tensor Mlp::forward(ad::Graph& g, const ad::Tensor& x) const {
  if (x.cols() != in_features())
    throw DimensionError("Mlp::forward: input " + shape_string(x.value()) + " but network expects " +
                         std::to_string(in_features()) + " columns");
  ad::Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = g.add_row_broadcast(g.matmul(h, layers_[i].weight), layers_[i].bias);
    if (i + 1 < layers_.size()) h = g.relu(h);
  }
  return h;
}

std::size_t Mlp::in_features() const { return layers_.empty() ? 0 : layers_.front().in_features(); }
std::size_t Mlp::out_features() const { return layers_.empty() ? 0 : layers_.back().out_features(); }

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> d;
  if (layers_.empty()) return d;
  d.push_back(in_features());
  for (const auto& l : layers_) d.push_back(l.out_features());
  return d;
}

std::vector<ad::Tensor> Mlp::parameters() const {
  std::vector<ad::Tensor> out;
  out.reserve(layers_.size() * 2);
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

Mlp init_params(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("init_params: need at least 2 layer sizes");
  if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; }))
    throw ConfigError("init_params: layer sizes must be >= 1");
  Rng rng(seed);
  std::vector<LinearLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i], fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (double& v : w.span()) v = dist(rng);
    layers.push_back({ad::Tensor::parameter(std::move(w)), ad::Tensor::parameter(Matrix(1, fan_out))});
  }
  return Mlp(std::move(layers));
}

void ParamSet::add(const ad::Tensor& t, double lr_multiplier) {
  if (!t.requires_grad()) throw ContractError("ParamSet::add: tensor is not a parameter");
  for (const auto& e : entries_)
    if (e.tensor == t) throw ContractError("ParamSet::add: tensor registered twice");
  entries_.push_back({t, lr_multiplier});
}

void ParamSet::add(const Mlp& net, double lr_multiplier) {
  for (const auto& p : net.parameters()) add(p, lr_multiplier);
}

void ParamSet::zero_grad() const {
  for (auto e : entries_) e.tensor.zero_grad();
}

SgdMomentum::SgdMomentum(ParamSet params, double learning_rate, double momentum)
    : params_(std::move(params)), learning_rate_(learning_rate), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const auto& e : params_.entries())
    velocity_.emplace_back(e.tensor.rows(), e.tensor.cols());
}

void SgdMomentum::step() {
  const auto& kt = simd::kernels();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Tensor p = params_.entries()[i].tensor;
    const double lr = learning_rate_ * params_.entries()[i].lr_multiplier;
    kt.momentum_update(momentum_, lr, p.grad().data(), velocity_[i].data(),
                       p.mutable_value().data(), velocity_[i].size());
  }
}

namespace {

double clamp_progress(double p) {
  if (p >= 0.0 && p <= 1.0) return p;
  const double clamped = std::isnan(p) ? 0.0 : std::clamp(p, 0.0, 1.0);
  std::cerr << "warning: training progress " << p << " outside [0,1], clamped to " << clamped
            << "\n";
  return clamped;
}

}  // namespace

double Schedules::lr_at(double p) const {
  p = clamp_progress(p);
  return eta0 / std::pow(1.0 + 10.0 * p, 0.75);
}

double Schedules::grl_lambda_at(double p) const {
  p = clamp_progress(p);
  return 2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0;
}

}  // namespace ddian::nn
