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
#include <optional>
#include <string>
#include <vector>

#include "ddian/data.hpp"
#include "ddian/losses.hpp"
#include "ddian/model.hpp"

namespace ddian::train {

// Which objective components are active. A disabled component has its weight
// forced to zero and its forward branch skipped.
struct AblationFlags {
  bool global = true;          // gamma * L_dm
  bool local = true;           // beta * L_dc
  bool discriminative = true;  // alpha * L_dis

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  loss::HyperParams hp;
  AblationFlags flags;
  model::LocalGate gate = model::LocalGate::kSoft;
  std::vector<std::size_t> feature_hidden{32};
  std::size_t feature_dim = 16;
  std::vector<std::size_t> global_hidden{16};
  std::vector<std::size_t> local_hidden{8};
  std::uint64_t seed = 0;
  std::size_t eval_every = 5;
  double validation_fraction = 0.1;

  // hp with the weights of disabled components set to zero.
  loss::HyperParams effective_hyper() const;
  model::ModelDims model_dims(std::size_t input_dim, std::size_t num_classes,
                              std::size_t num_domains) const;
  void validate() const;
};

// Seeds of the independent random streams one run consumes.
struct RunSeeds {
  std::uint64_t model;
  std::uint64_t validation;
  std::uint64_t batches;
};
RunSeeds run_seeds(std::uint64_t seed);

struct ValidationPoint {
  std::size_t epoch;  // 1-based
  double accuracy;
};

struct RunResult {
  std::vector<loss::LossBreakdown> series;  // one per epoch, batch means
  std::vector<ValidationPoint> validation;
  double source_val_acc = 0.0;
  std::optional<double> target_acc;
  TrainConfig config;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
};

struct TrainOutcome {
  model::DdianModel model;
  RunResult result;
};

// Runs the joint adversarial training loop on the source domains only.
TrainOutcome train(const TrainConfig& config, const data::SourceDomains& sources);

// Fraction of rows whose prediction equals the label. Throws on an empty set.
double evaluate(const model::DdianModel& model, const Matrix& x, std::span<const int> labels);
double evaluate(const model::DdianModel& model, const data::DomainDataset& ds);
double evaluate(const model::DdianModel& model, const data::HeldOutDomain& target);

// ---- ablation ----

enum class Variant { kSourceOnly, kGlobalOnly, kLocalOnly, kDiscriminativeOnly, kFull };
inline constexpr Variant kAllVariants[] = {Variant::kSourceOnly, Variant::kGlobalOnly,
                                           Variant::kLocalOnly, Variant::kDiscriminativeOnly,
                                           Variant::kFull};
std::string variant_name(Variant v);
AblationFlags variant_flags(Variant v);

struct AblationRun {
  Variant variant;
  std::uint64_t seed;
  double target_acc;
  double source_val_acc;
  double final_total_loss;
  std::size_t target_reads_during_training;
};

struct VariantSummary {
  Variant variant;
  double mean_target_acc;
  double std_target_acc;  // sample std, 0 for a single seed
  std::size_t runs;
};

struct AblationTable {
  std::vector<AblationRun> runs;
  std::vector<VariantSummary> summary;  // in kAllVariants order
};

// Runs every variant for seeds base.seed, base.seed + 1, ... on the same split.
// threads == 0 uses the hardware concurrency; results do not depend on it.
AblationTable ablation_suite(const TrainConfig& base, const data::DomainDataset& ds, int target_id,
                             std::size_t n_seeds, std::size_t threads = 0);

// ---- gradient check ----

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> losses;  // classification, global, local, center, discriminative
  GradCheckEntry composite;            // weighted total objective
  std::uint64_t seed = 0;
  bool passed() const;
};

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

// Central finite differences against backprop for each loss on a tiny random
// model and batch (m = 4, d = 4, K = 3, N = 3).
GradCheckReport gradient_check(std::uint64_t seed);

// Error measure used by the check: |a - n| / max(|a|, |n|, 1e-4).
double relative_error(double analytic, double numeric);

}  // namespace ddian::train
