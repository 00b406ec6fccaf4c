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
#include <filesystem>
#include <span>
#include <vector>

#include "ddian/autodiff.hpp"
#include "ddian/losses.hpp"
#include "ddian/nn.hpp"

namespace ddian::model {

// Layer widths of the assembled network.
struct ModelDims {
  std::size_t input_dim = 2;
  std::vector<std::size_t> feature_hidden{32};
  std::size_t feature_dim = 16;
  std::size_t num_classes = 3;
  std::size_t num_domains = 3;
  std::vector<std::size_t> global_hidden{16};
  std::vector<std::size_t> local_hidden{8};

  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// How the class-wise discriminator inputs are weighted.
enum class LocalGate {
  kSoft,  // predicted class probabilities
  kHard,  // one-hot true labels
};

struct ForwardOptions {
  bool global = true;
  bool local = true;
  LocalGate gate = LocalGate::kSoft;
  std::span<const int> labels{};  // required for LocalGate::kHard
};

struct ForwardOutputs {
  ad::Tensor features;                          // m x feature_dim
  ad::Tensor class_logits;                      // m x K
  Matrix class_probs;                           // m x K, detached
  Matrix local_gate;                            // m x K weights fed to the local heads
  ad::Tensor global_domain_logits;              // m x N, undefined if the branch is off
  std::vector<ad::Tensor> local_domain_logits;  // K x (m x N), empty if the branch is off
};

// Feature extractor, classifier, global discriminator, one discriminator per
// class, and trainable class centers. Copies are not allowed because the
// parameters are shared handles; use clone() for an independent model.
class DdianModel {
 public:
  DdianModel(ModelDims dims, loss::HyperParams hp, nn::Mlp feature, nn::Mlp classifier,
             nn::Mlp global_disc, std::vector<nn::Mlp> local_heads, ad::Tensor centers);

  static DdianModel create(const ModelDims& dims, const loss::HyperParams& hp, std::uint64_t seed);

  DdianModel(DdianModel&&) = default;
  DdianModel& operator=(DdianModel&&) = default;
  DdianModel(const DdianModel&) = delete;
  DdianModel& operator=(const DdianModel&) = delete;

  DdianModel clone() const;

  const ModelDims& dims() const { return dims_; }
  const loss::HyperParams& hyper() const { return hp_; }
  const nn::Mlp& feature_extractor() const { return feature_; }
  const nn::Mlp& classifier() const { return classifier_; }
  const nn::Mlp& global_discriminator() const { return global_disc_; }
  const std::vector<nn::Mlp>& local_heads() const { return local_heads_; }
  const ad::Tensor& centers() const { return centers_; }

  // Registration order: feature, classifier, global disc, heads 0..K-1, centers.
  std::vector<ad::Tensor> parameters() const;
  // Same order; every part except the feature extractor trains at 10x the base rate.
  nn::ParamSet param_set() const;

  static constexpr double kHeadLrMultiplier = 10.0;

 private:
  ModelDims dims_;
  loss::HyperParams hp_;
  nn::Mlp feature_;
  nn::Mlp classifier_;
  nn::Mlp global_disc_;
  std::vector<nn::Mlp> local_heads_;
  ad::Tensor centers_;
};

ForwardOutputs forward_all(ad::Graph& g, const DdianModel& model, const ad::Tensor& x,
                           double lambda, const ForwardOptions& opts = {});

// Argmax of the class logits per row, ties to the lowest index.
std::vector<int> predict(const DdianModel& model, const Matrix& x);
int argmax(std::span<const double> row);

// Binary model file: "DDIA", u32 version, dims, hyperparameters, then every
// parameter as little-endian f64 in registration order.
inline constexpr std::uint32_t kFormatVersion = 1;
std::vector<std::uint8_t> serialize(const DdianModel& model);
DdianModel deserialize(std::span<const std::uint8_t> bytes);
void save(const DdianModel& model, const std::filesystem::path& path);
DdianModel load(const std::filesystem::path& path);

}  // namespace ddian::model
