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

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ddian/autodiff.hpp"
#include "ddian/nn.hpp"

namespace ddian::loss {

struct HyperParams {
  double alpha = 1.0;  // discriminative loss weight
  double beta = 0.5;   // local (class-conditional) alignment weight
  double gamma = 0.5;  // global (marginal) alignment weight
  double phi = 1e-3;   // denominator offset of the discriminative loss
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double eta0 = 0.01;
  std::size_t epochs = 60;

  // Throws ConfigError on negative weights, phi <= 0 or batch_size == 0.
  void validate() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Raw component values after evaluation, plus the weights that combined them.
struct LossBreakdown {
  double l_cls = 0.0;
  double l_dm = 0.0;
  double l_dc = 0.0;
  double l_dis = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double phi = 0.0;
};

// Mean over rows of -log softmax(logits)[i, labels[i]].
ad::Tensor classification_loss(ad::Graph& g, const ad::Tensor& logits, std::span<const int> labels);

// Mean over rows of weights[i] * -log softmax(logits)[i, labels[i]]. Weights are constants.
ad::Tensor weighted_cross_entropy(ad::Graph& g, const ad::Tensor& logits,
                                  std::span<const int> labels, std::span<const double> weights);

// Cross-entropy of disc(grad_reverse(features, lambda)) against domain labels.
ad::Tensor global_domain_loss(ad::Graph& g, const ad::Tensor& features, const nn::Mlp& disc,
                              std::span<const int> domains, double lambda);

// Sum over classes k of mean_i [ p_ik * CE(head_k(grad_reverse(p_ik * f_i, lambda)), d_i) ].
// class_probs is K columns on the simplex and is treated as a constant.
ad::Tensor local_domain_loss(ad::Graph& g, const ad::Tensor& features, const Matrix& class_probs,
                             std::span<const nn::Mlp> heads, std::span<const int> domains,
                             double lambda);

// head_k(grad_reverse(gate[:, k] * features, lambda)) for every class k.
std::vector<ad::Tensor> local_head_logits(ad::Graph& g, const ad::Tensor& features,
                                          const Matrix& gate, std::span<const nn::Mlp> heads,
                                          double lambda);

// Same sum given the per-head logits already computed from the gated features.
ad::Tensor local_domain_loss_from_logits(ad::Graph& g, std::span<const ad::Tensor> head_logits,
                                         const Matrix& class_probs, std::span<const int> domains);

// 1/2 sum_i ||f_i - c_{y_i}||^2
ad::Tensor center_loss(ad::Graph& g, const ad::Tensor& features, const ad::Tensor& centers,
                       std::span<const int> labels);

// 1/2 sum_i ||f_i - c_{y_i}||^2 / (sum_{j != y_i} ||f_i - c_j||^2 + phi)
ad::Tensor discriminative_loss(ad::Graph& g, const ad::Tensor& features, const ad::Tensor& centers,
                               std::span<const int> labels, double phi);

// Undefined tensors mark disabled components; cls is required.
struct LossTerms {
  ad::Tensor cls;
  ad::Tensor dm;
  ad::Tensor dc;
  ad::Tensor dis;
};

// L = L_cls + beta * L_dc + gamma * L_dm + alpha * L_dis
std::pair<ad::Tensor, LossBreakdown> total_objective(ad::Graph& g, const LossTerms& terms,
                                                     const HyperParams& hp);

// Row-wise softmax of plain values (no graph).
Matrix softmax_rows(const Matrix& logits);
Matrix one_hot(std::span<const int> labels, std::size_t num_classes);

// Throws ContractError if any row is off the probability simplex by more than tol.
void check_simplex(const Matrix& probs, double tol = 1e-4);

}  // namespace ddian::loss
