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

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>

#include "ddian/rng.hpp"
#include "ddian/trainer.hpp"

namespace ddian::train {

namespace {

enum Term : std::size_t { kCls, kGlobal, kLocal, kCenter, kDiscriminative, kNumTerms };
using TermWeights = std::array<double, kNumTerms>;

constexpr std::array<const char*, kNumTerms> kTermNames = {
    "classification", "global_domain", "local_domain", "center", "discriminative"};

struct Instance {
  model::DdianModel net;
  Matrix x;
  std::vector<int> labels;
  std::vector<int> domains;
  Matrix class_probs;  // frozen at the base point, as the local loss treats them
  double lambda = 0.7;
  loss::HyperParams hp;
};

std::array<ad::Tensor, kNumTerms> build_terms(ad::Graph& g, const Instance& in, double lambda) {
  const auto& net = in.net;
  ad::Tensor features = net.feature_extractor().forward(g, ad::Tensor::constant(in.x));
  std::array<ad::Tensor, kNumTerms> t;
  t[kCls] = loss::classification_loss(g, net.classifier().forward(g, features), in.labels);
  t[kGlobal] = loss::global_domain_loss(g, features, net.global_discriminator(), in.domains, lambda);
  t[kLocal] = loss::local_domain_loss(g, features, in.class_probs, net.local_heads(), in.domains, lambda);
  t[kCenter] = loss::center_loss(g, features, net.centers(), in.labels);
  t[kDiscriminative] = loss::discriminative_loss(g, features, net.centers(), in.labels, in.hp.phi);
  return t;
}

std::array<double, kNumTerms> term_values(const Instance& in) {
  ad::Graph g;
  auto t = build_terms(g, in, in.lambda);
  std::array<double, kNumTerms> v{};
  for (std::size_t i = 0; i < kNumTerms; ++i) v[i] = t[i].item();
  return v;
}

// Draws a random instance; returns nullopt when a relu input sits within 1e-3 of its kink.
std::optional<Instance> draw(std::uint64_t seed) {
  model::ModelDims dims;
  dims.input_dim = 3;
  dims.feature_hidden = {5};
  dims.feature_dim = 4;
  dims.num_classes = 3;
  dims.num_domains = 3;
  dims.global_hidden = {4};
  dims.local_hidden = {3};
  loss::HyperParams hp;
  auto net = model::DdianModel::create(dims, hp, derive_seed(seed, 1));

  Rng rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  // Non-zero biases and spread-out centers exercise every gradient path.
  for (auto p : net.parameters())
    if (p.rows() == 1 || p == net.centers())
      for (double& v : p.mutable_value().span()) v = 0.5 * normal(rng);

  const std::size_t m = 4;
  Matrix x(m, dims.input_dim);
  for (double& v : x.span()) v = normal(rng);
  std::vector<int> labels{0, 1, 2, 1};
  std::vector<int> domains{2, 0, 1, 0};

  ad::Graph g;
  ad::Tensor logits = net.classifier().forward(g, net.feature_extractor().forward(g, ad::Tensor::constant(x)));
  Matrix probs = loss::softmax_rows(logits.value());
  Instance in{std::move(net), std::move(x), labels, domains, std::move(probs), 0.7, hp};

  ad::Graph probe;
  build_terms(probe, in, in.lambda);
  if (probe.min_relu_margin() < 1e-3) return std::nullopt;
  return in;
}

GradCheckEntry check(const std::string& name, Instance& in, const TermWeights& w) {
  // Analytic: one backward through the weighted sum.
  auto params = in.net.parameters();
  ad::zero_grad(params);
  {
    ad::Graph g;
    auto t = build_terms(g, in, in.lambda);
    ad::Tensor total;
    for (std::size_t i = 0; i < kNumTerms; ++i) {
      if (w[i] == 0.0) continue;
      ad::Tensor term = g.scale(t[i], w[i]);
      total = total.defined() ? g.add(total, term) : term;
    }
    g.backward(total);
  }
  std::vector<Matrix> analytic;
  for (const auto& p : params) analytic.push_back(p.grad());
  ad::zero_grad(params);

  // Numeric: the reversal layer flips the sign seen by the feature extractor,
  // so its parameters are compared against -lambda times the alignment terms.
  const auto feature_params = in.net.feature_extractor().parameters();
  GradCheckEntry entry{name, 0.0, 0, true};
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ad::Tensor p = params[pi];
    const bool upstream = std::find(feature_params.begin(), feature_params.end(), p) != feature_params.end();
    TermWeights eff = w;
    if (upstream) {
      eff[kGlobal] *= -in.lambda;
      eff[kLocal] *= -in.lambda;
    }
    for (std::size_t j = 0; j < p.value().size(); ++j) {
      const double saved = p.value()[j];
      p.mutable_value()[j] = saved + kGradCheckStep;
      const auto plus = term_values(in);
      p.mutable_value()[j] = saved - kGradCheckStep;
      const auto minus = term_values(in);
      p.mutable_value()[j] = saved;
      double numeric = 0.0;
      for (std::size_t i = 0; i < kNumTerms; ++i)
        numeric += eff[i] * (plus[i] - minus[i]) / (2.0 * kGradCheckStep);
      const double err = relative_error(analytic[pi][j], numeric);
      entry.max_rel_error = std::max(entry.max_rel_error, err);
      ++entry.checked;
    }
  }
  entry.passed = entry.max_rel_error < kGradCheckTolerance;
  return entry;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / scale;
}

bool GradCheckReport::passed() const {
  return composite.passed &&
         std::all_of(losses.begin(), losses.end(), [](const GradCheckEntry& e) { return e.passed; });
}

GradCheckReport gradient_check(std::uint64_t seed) {
  std::optional<Instance> in;
  for (std::uint64_t attempt = 0; !in; ++attempt) in = draw(derive_seed(seed, attempt));

  GradCheckReport report;
  report.seed = seed;
  for (std::size_t t = 0; t < kNumTerms; ++t) {
    TermWeights w{};
    w[t] = 1.0;
    report.losses.push_back(check(kTermNames[t], *in, w));
  }
  TermWeights composite{};
  composite[kCls] = 1.0;
  composite[kLocal] = in->hp.beta;
  composite[kGlobal] = in->hp.gamma;
  composite[kDiscriminative] = in->hp.alpha;
  report.composite = check("total_objective", *in, composite);
  return report;
}

}  // namespace ddian::train
