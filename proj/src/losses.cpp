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

#include "ddian/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ddian/error.hpp"

namespace ddian::loss {

namespace {

void check_labels(std::string_view what, std::span<const int> labels, std::size_t rows,
                  std::size_t bound) {
  if (labels.size() != rows)
    throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= bound)
      throw DataError(std::string(what) + ": row " + std::to_string(i) + " has label " +
                      std::to_string(labels[i]) + " outside [0, " + std::to_string(bound) + ")");
}

// rows x cols matrix whose row i is filled with column[i].
ad::Tensor broadcast_column(std::span<const double> column, std::size_t cols) {
  Matrix m(column.size(), cols);
  for (std::size_t r = 0; r < column.size(); ++r) std::fill(m.row(r).begin(), m.row(r).end(), column[r]);
  return ad::Tensor::constant(std::move(m));
}

std::vector<double> probs_column(const Matrix& probs, std::size_t k) {
  std::vector<double> col(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) col[r] = probs(r, k);
  return col;
}

// Squared distance of every feature row to centers[center_index[i]], as m x 1.
ad::Tensor squared_distance(ad::Graph& g, const ad::Tensor& features, const ad::Tensor& centers,
                            std::span<const std::size_t> center_index) {
  return g.row_sum(g.square(g.sub(features, g.gather_rows(centers, center_index))));
}

std::vector<std::size_t> as_index(std::span<const int> labels) {
  return {labels.begin(), labels.end()};
}

void check_centers(const ad::Tensor& features, const ad::Tensor& centers) {
  if (features.cols() != centers.cols())
    throw DimensionError("feature width " + std::to_string(features.cols()) +
                         " does not match center width " + std::to_string(centers.cols()));
}

}  // namespace

void HyperParams::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw ConfigError("hyper: alpha, beta and gamma must be >= 0");
  if (!(phi > 0.0)) throw ConfigError("hyper: phi must be > 0");
  if (batch_size == 0) throw ConfigError("hyper: batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("hyper: momentum must be in [0, 1)");
  if (!(eta0 > 0.0)) throw ConfigError("hyper: eta0 must be > 0");
}

ad::Tensor weighted_cross_entropy(ad::Graph& g, const ad::Tensor& logits,
                                  std::span<const int> labels, std::span<const double> weights) {
  const std::size_t m = logits.rows();
  if (m == 0) throw DimensionError("cross-entropy: empty batch");
  check_labels("cross-entropy", labels, m, logits.cols());
  if (weights.size() != m)
    throw DimensionError("cross-entropy: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(m) + " rows");
  Matrix mask(m, logits.cols());
  for (std::size_t i = 0; i < m; ++i) mask(i, static_cast<std::size_t>(labels[i])) = weights[i];
  ad::Tensor picked = g.mul(g.log_softmax_rows(logits), ad::Tensor::constant(std::move(mask)));
  return g.scale(g.sum_all(picked), -1.0 / static_cast<double>(m));
}

ad::Tensor classification_loss(ad::Graph& g, const ad::Tensor& logits, std::span<const int> labels) {
  std::vector<double> ones(logits.rows(), 1.0);
  return weighted_cross_entropy(g, logits, labels, ones);
}

ad::Tensor global_domain_loss(ad::Graph& g, const ad::Tensor& features, const nn::Mlp& disc,
                              std::span<const int> domains, double lambda) {
  ad::Tensor logits = disc.forward(g, g.grad_reverse(features, lambda));
  return classification_loss(g, logits, domains);
}

ad::Tensor local_domain_loss_from_logits(ad::Graph& g, std::span<const ad::Tensor> head_logits,
                                         const Matrix& class_probs, std::span<const int> domains) {
  check_simplex(class_probs);
  if (head_logits.size() != class_probs.cols())
    throw DimensionError("local alignment: " + std::to_string(head_logits.size()) +
                         " heads for " + std::to_string(class_probs.cols()) + " classes");
  ad::Tensor total;
  for (std::size_t k = 0; k < head_logits.size(); ++k) {
    const auto weights = probs_column(class_probs, k);
    ad::Tensor term = weighted_cross_entropy(g, head_logits[k], domains, weights);
    total = total.defined() ? g.add(total, term) : term;
  }
  return total;
}

std::vector<ad::Tensor> local_head_logits(ad::Graph& g, const ad::Tensor& features,
                                          const Matrix& gate, std::span<const nn::Mlp> heads,
                                          double lambda) {
  if (gate.rows() != features.rows())
    throw DimensionError("local alignment: " + std::to_string(gate.rows()) +
                         " gate rows for " + std::to_string(features.rows()) + " features");
  if (heads.size() != gate.cols())
    throw DimensionError("local alignment: " + std::to_string(heads.size()) + " heads for " +
                         std::to_string(gate.cols()) + " classes");
  std::vector<ad::Tensor> logits;
  logits.reserve(heads.size());
  for (std::size_t k = 0; k < heads.size(); ++k) {
    ad::Tensor weights = broadcast_column(probs_column(gate, k), features.cols());
    logits.push_back(heads[k].forward(g, g.grad_reverse(g.mul(features, weights), lambda)));
  }
  return logits;
}

ad::Tensor local_domain_loss(ad::Graph& g, const ad::Tensor& features, const Matrix& class_probs,
                             std::span<const nn::Mlp> heads, std::span<const int> domains,
                             double lambda) {
  check_simplex(class_probs);
  auto logits = local_head_logits(g, features, class_probs, heads, lambda);
  return local_domain_loss_from_logits(g, logits, class_probs, domains);
}

ad::Tensor center_loss(ad::Graph& g, const ad::Tensor& features, const ad::Tensor& centers,
                       std::span<const int> labels) {
  check_centers(features, centers);
  check_labels("center loss", labels, features.rows(), centers.rows());
  const auto idx = as_index(labels);
  return g.scale(g.sum_all(squared_distance(g, features, centers, idx)), 0.5);
}

ad::Tensor discriminative_loss(ad::Graph& g, const ad::Tensor& features, const ad::Tensor& centers,
                               std::span<const int> labels, double phi) {
  const std::size_t num_classes = centers.rows();
  if (num_classes < 2) throw ConfigError("discriminative loss needs at least 2 classes");
  if (!(phi > 0.0)) throw ConfigError("discriminative loss: phi must be > 0");
  check_centers(features, centers);
  check_labels("discriminative loss", labels, features.rows(), num_classes);

  const std::size_t m = features.rows();
  ad::Tensor own = squared_distance(g, features, centers, as_index(labels));
  ad::Tensor rivals;
  for (std::size_t j = 0; j < num_classes; ++j) {
    std::vector<std::size_t> idx(m, j);
    Matrix mask(m, 1);
    for (std::size_t i = 0; i < m; ++i) mask[i] = static_cast<std::size_t>(labels[i]) == j ? 0.0 : 1.0;
    ad::Tensor term = g.mul(squared_distance(g, features, centers, idx),
                            ad::Tensor::constant(std::move(mask)));
    rivals = rivals.defined() ? g.add(rivals, term) : term;
  }
  ad::Tensor ratio = g.div(own, g.add_scalar(rivals, phi));
  return g.scale(g.sum_all(ratio), 0.5);
}

std::pair<ad::Tensor, LossBreakdown> total_objective(ad::Graph& g, const LossTerms& terms,
                                                     const HyperParams& hp) {
  if (!terms.cls.defined()) throw ContractError("total_objective: classification term missing");
  LossBreakdown b;
  b.phi = hp.phi;
  b.l_cls = terms.cls.item();
  ad::Tensor total = terms.cls;
  auto accumulate = [&](const ad::Tensor& term, double weight, double& value, double& used) {
    if (!term.defined()) return;
    value = term.item();
    used = weight;
    total = g.add(total, g.scale(term, weight));
  };
  accumulate(terms.dc, hp.beta, b.l_dc, b.beta);
  accumulate(terms.dm, hp.gamma, b.l_dm, b.gamma);
  accumulate(terms.dis, hp.alpha, b.l_dis, b.alpha);
  b.total = total.item();
  return {total, b};
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) sum += (o[c] = std::exp(in[c] - mx));
    for (double& v : o) v /= sum;
  }
  return out;
}

Matrix one_hot(std::span<const int> labels, std::size_t num_classes) {
  check_labels("one_hot", labels, labels.size(), num_classes);
  Matrix out(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) out(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return out;
}

void check_simplex(const Matrix& probs, double tol) {
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (double p : probs.row(r)) {
      if (!(p >= -tol)) throw ContractError("class probabilities: row " + std::to_string(r) +
                                            " has a negative entry");
      sum += p;
    }
    if (!(std::abs(sum - 1.0) <= tol))
      throw ContractError("class probabilities: row " + std::to_string(r) + " sums to " +
                          std::to_string(sum));
  }
}

}  // namespace ddian::loss
