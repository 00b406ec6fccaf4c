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

#include "ddian/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ddian/error.hpp"
#include "ddian/rng.hpp"

namespace ddian::train {

loss::HyperParams TrainConfig::effective_hyper() const {
  loss::HyperParams h = hp;
  if (!flags.global) h.gamma = 0.0;
  if (!flags.local) h.beta = 0.0;
  if (!flags.discriminative) h.alpha = 0.0;
  return h;
}

model::ModelDims TrainConfig::model_dims(std::size_t input_dim, std::size_t num_classes,
                                         std::size_t num_domains) const {
  model::ModelDims d;
  d.input_dim = input_dim;
  d.feature_hidden = feature_hidden;
  d.feature_dim = feature_dim;
  d.num_classes = num_classes;
  d.num_domains = num_domains;
  d.global_hidden = global_hidden;
  d.local_hidden = local_hidden;
  return d;
}

void TrainConfig::validate() const {
  hp.validate();
  if (hp.epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (eval_every == 0) throw ConfigError("train: eval_every must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("train: validation_fraction must be in [0, 1)");
}

RunSeeds run_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3)};
}

namespace {

void accumulate(loss::LossBreakdown& acc, const loss::LossBreakdown& b) {
  acc.l_cls += b.l_cls;
  acc.l_dm += b.l_dm;
  acc.l_dc += b.l_dc;
  acc.l_dis += b.l_dis;
  acc.total += b.total;
  acc.alpha = b.alpha;
  acc.beta = b.beta;
  acc.gamma = b.gamma;
  acc.phi = b.phi;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.span().begin(), m.span().end(), [](double v) { return std::isfinite(v); });
}

void divide(loss::LossBreakdown& acc, std::size_t n) {
  const double d = static_cast<double>(n);
  acc.l_cls /= d;
  acc.l_dm /= d;
  acc.l_dc /= d;
  acc.l_dis /= d;
  acc.total /= d;
}

}  // namespace

TrainOutcome train(const TrainConfig& config, const data::SourceDomains& sources) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const data::DomainDataset& ds = sources.data;
  ds.require_every_class_in_every_domain();

  const RunSeeds seeds = run_seeds(config.seed);
  const loss::HyperParams hp = config.effective_hyper();
  auto split = data::split_validation(ds, config.validation_fraction, seeds.validation);

  model::DdianModel net = model::DdianModel::create(
      config.model_dims(ds.feature_dim(), ds.num_classes(), ds.num_domains()), config.hp,
      seeds.model);
  nn::ParamSet params = net.param_set();
  nn::SgdMomentum opt(params, hp.eta0, hp.momentum);
  const nn::Schedules schedules{hp.eta0};

  const std::size_t n_train = split.train.size();
  const std::size_t steps_per_epoch = (n_train + hp.batch_size - 1) / hp.batch_size;
  const std::size_t total_steps = steps_per_epoch * hp.epochs;
  std::size_t completed = 0;

  RunResult result;
  result.config = config;
  result.seed = config.seed;
  result.series.reserve(hp.epochs);

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    loss::LossBreakdown epoch_mean;
    const auto epoch_batches = data::batches(split.train, hp.batch_size, seeds.batches, epoch);
    for (const auto& batch : epoch_batches) {
      const double progress = static_cast<double>(completed) / static_cast<double>(total_steps);
      opt.set_learning_rate(schedules.lr_at(progress));
      const double lambda = schedules.grl_lambda_at(progress);

      ad::Graph g;
      model::ForwardOptions opts;
      opts.global = config.flags.global;
      opts.local = config.flags.local;
      opts.gate = config.gate;
      opts.labels = batch.labels;
      auto out = model::forward_all(g, net, ad::Tensor::constant(batch.x), lambda, opts);
      if (!all_finite(out.class_logits.value()))
        throw Error("training diverged: non-finite class logits at epoch " +
                    std::to_string(epoch + 1) + ", step " + std::to_string(completed + 1));

      loss::LossTerms terms;
      terms.cls = loss::classification_loss(g, out.class_logits, batch.labels);
      if (config.flags.global)
        terms.dm = loss::classification_loss(g, out.global_domain_logits, batch.domains);
      if (config.flags.local)
        terms.dc = loss::local_domain_loss_from_logits(g, out.local_domain_logits, out.local_gate,
                                                       batch.domains);
      if (config.flags.discriminative)
        terms.dis = loss::discriminative_loss(g, out.features, net.centers(), batch.labels, hp.phi);
      auto [total, breakdown] = loss::total_objective(g, terms, hp);

      g.backward(total);
      opt.step();
      params.zero_grad();
      accumulate(epoch_mean, breakdown);
      ++completed;
    }
    divide(epoch_mean, epoch_batches.size());
    result.series.push_back(epoch_mean);

    const bool last = epoch + 1 == hp.epochs;
    if (!split.validation.labels.empty() && ((epoch + 1) % config.eval_every == 0 || last))
      result.validation.push_back(
          {epoch + 1, evaluate(net, split.validation.x, split.validation.labels)});
  }
  if (!result.validation.empty()) result.source_val_acc = result.validation.back().accuracy;

  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(net), std::move(result)};
}

double evaluate(const model::DdianModel& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) throw DataError("evaluate: empty evaluation set");
  if (labels.size() != x.rows()) throw DimensionError("evaluate: label count does not match rows");
  if (x.cols() != model.dims().input_dim)
    throw DimensionError("evaluate: data has " + std::to_string(x.cols()) +
                         " features but the model expects " + std::to_string(model.dims().input_dim));
  const auto pred = model::predict(model, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double evaluate(const model::DdianModel& model, const data::DomainDataset& ds) {
  const auto labels = ds.labels();
  return evaluate(model, ds.features(), labels);
}

double evaluate(const model::DdianModel& model, const data::HeldOutDomain& target) {
  return evaluate(model, target.read());
}

// ---------------------------------------------------------------------------
// Ablation

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kSourceOnly: return "source_only";
    case Variant::kGlobalOnly: return "global_only";
    case Variant::kLocalOnly: return "local_only";
    case Variant::kDiscriminativeOnly: return "discriminative_only";
    case Variant::kFull: return "full";
  }
  return "unknown";
}

AblationFlags variant_flags(Variant v) {
  switch (v) {
    case Variant::kSourceOnly: return {false, false, false};
    case Variant::kGlobalOnly: return {true, false, false};
    case Variant::kLocalOnly: return {false, true, false};
    case Variant::kDiscriminativeOnly: return {false, false, true};
    case Variant::kFull: return {true, true, true};
  }
  return {};
}

AblationTable ablation_suite(const TrainConfig& base, const data::DomainDataset& ds, int target_id,
                             std::size_t n_seeds, std::size_t threads) {
  if (n_seeds == 0) throw ConfigError("ablation: need at least one seed");
  base.validate();
  const data::LodoSplit split = data::leave_one_out(ds, target_id);
  split.sources.data.require_every_class_in_every_domain();

  struct Job {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant v : kAllVariants)
    for (std::size_t s = 0; s < n_seeds; ++s) jobs.push_back({v, base.seed + s});

  AblationTable table;
  table.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        TrainConfig cfg = base;
        cfg.flags = variant_flags(jobs[i].variant);
        cfg.seed = jobs[i].seed;
        // Each run gets its own view of the target so the read counter is per run.
        const data::HeldOutDomain target = split.target.fork();
        auto outcome = train(cfg, split.sources);
        const std::size_t leaked = target.reads();
        table.runs[i] = {jobs[i].variant,
                         jobs[i].seed,
                         evaluate(outcome.model, target),
                         outcome.result.source_val_acc,
                         outcome.result.series.back().total,
                         leaked};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  std::size_t n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (Variant v : kAllVariants) {
    std::vector<double> acc;
    for (const auto& r : table.runs)
      if (r.variant == v) acc.push_back(r.target_acc);
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    const double sd = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
    table.summary.push_back({v, mean, sd, acc.size()});
  }
  return table;
}

}  // namespace ddian::train
