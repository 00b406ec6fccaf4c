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

// ddian: generate synthetic domains, train, evaluate, run the ablation suite
// and check gradients. Exit codes: 0 success, 1 runtime or I/O failure,
// 2 configuration or validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#include <CLI11.hpp>

#include "ddian/data.hpp"
#include "ddian/error.hpp"
#include "ddian/model.hpp"
#include "ddian/run_config.hpp"
#include "ddian/simd/kernels.hpp"
#include "ddian/trainer.hpp"

namespace fs = std::filesystem;
using namespace ddian;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

// Removes the files it tracks unless commit() is called.
class OutputGuard {
 public:
  void track(fs::path p) { paths_.push_back(std::move(p)); }
  void commit() { paths_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto& p : paths_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> paths_;
};

void write_text(const fs::path& path, const std::string& text, OutputGuard& guard) {
  guard.track(path);
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_path) {
  const auto spec = config::parse_synthetic_spec(config::read_json_file(spec_path));
  const auto ds = data::generate(spec);
  OutputGuard guard;
  guard.track(out_path);
  data::save_csv(ds, out_path);
  guard.commit();
  std::cout << "wrote " << ds.size() << " samples to " << out_path << "\n";
  for (std::size_t d = 0; d < ds.num_domains(); ++d) {
    std::cout << "domain " << d << " (" << spec.angles_deg[d] << " deg):";
    for (std::size_t k = 0; k < ds.num_classes(); ++k)
      std::cout << " class" << k << "=" << ds.count(static_cast<int>(d), static_cast<int>(k));
    std::cout << "\n";
  }
  return 0;
}

std::string losses_csv(const train::RunResult& r) {
  std::string out = "epoch,l_cls,l_dm,l_dc,l_dis,total\n";
  for (std::size_t e = 0; e < r.series.size(); ++e) {
    const auto& b = r.series[e];
    out += std::to_string(e + 1) + "," + g17(b.l_cls) + "," + g17(b.l_dm) + "," + g17(b.l_dc) +
           "," + g17(b.l_dis) + "," + g17(b.total) + "\n";
  }
  return out;
}

int cmd_train(const std::string& config_path) {
  const auto cfg = config::load_run_config(config_path);
  const auto ds = config::load_dataset(cfg.data);
  const auto split = data::leave_one_out(ds, cfg.data.target);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  OutputGuard guard;
  write_text(dir / "config.json", config::dump(config::to_json(cfg)), guard);

  auto outcome = train::train(cfg.train, split.sources);
  if (split.target.reads() != 0)
    throw Error("target domain was read during training (" + std::to_string(split.target.reads()) +
                " reads)");
  outcome.result.target_acc = train::evaluate(outcome.model, split.target);

  guard.track(dir / "model.bin");
  model::save(outcome.model, dir / "model.bin");
  write_text(dir / "result.json", config::dump(config::to_json(outcome.result)), guard);
  write_text(dir / "losses.csv", losses_csv(outcome.result), guard);
  guard.commit();

  const auto& last = outcome.result.series.back();
  std::cout << "trained " << cfg.train.hp.epochs << " epochs in "
            << fixed(outcome.result.wall_clock_seconds, 2) << " s\n"
            << "final loss " << fixed(last.total, 6) << "\n"
            << "source validation accuracy " << fixed(outcome.result.source_val_acc, 4) << "\n"
            << "target (domain " << cfg.data.target << ") accuracy "
            << fixed(*outcome.result.target_acc, 4) << "\n"
            << "outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, int target) {
  const auto net = model::load(model_path);
  const auto ds = data::load_csv(data_path);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds[i].domain == target) idx.push_back(i);
  if (idx.empty()) throw DataError("no samples with domain " + std::to_string(target));
  const auto batch = data::gather(ds, idx);
  std::cout << fixed(train::evaluate(net, batch.x, batch.labels), 4) << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, std::size_t seeds, std::size_t threads) {
  const auto cfg = config::load_run_config(config_path);
  const auto ds = config::load_dataset(cfg.data);
  const auto table = train::ablation_suite(cfg.train, ds, cfg.data.target, seeds, threads);
  for (const auto& r : table.runs)
    if (r.target_reads_during_training != 0)
      throw Error("target domain was read during training of " + train::variant_name(r.variant));

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  OutputGuard guard;
  write_text(dir / "config.json", config::dump(config::to_json(cfg)), guard);
  std::string csv = "variant,seed,target_acc,source_val_acc,final_total_loss\n";
  for (const auto& r : table.runs)
    csv += train::variant_name(r.variant) + "," + std::to_string(r.seed) + "," + g17(r.target_acc) +
           "," + g17(r.source_val_acc) + "," + g17(r.final_total_loss) + "\n";
  write_text(dir / "ablation.csv", csv, guard);
  guard.commit();

  std::cout << "variant               mean_target_acc  std      runs\n";
  for (const auto& s : table.summary) {
    std::string name = train::variant_name(s.variant);
    name.resize(22, ' ');
    std::cout << name << fixed(s.mean_target_acc, 4) << "           " << fixed(s.std_target_acc, 4)
              << "   " << s.runs << "\n";
  }
  std::cout << "wrote " << (dir / "ablation.csv").string() << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const auto report = train::gradient_check(seed);
  auto line = [](const train::GradCheckEntry& e) {
    std::string name = e.name;
    name.resize(18, ' ');
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", e.max_rel_error);
    std::cout << (e.passed ? "PASS " : "FAIL ") << name << " max_rel_err=" << buf
              << " entries=" << e.checked << "\n";
  };
  for (const auto& e : report.losses) line(e);
  line(report.composite);
  return report.passed() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-generalization training with adversarial alignment and center-based "
               "discriminative features"};
  app.require_subcommand(1);

  std::string spec_path, out_path, config_path, model_path, data_path, simd;
  int target = 0;
  std::size_t seeds = 5, threads = 0;
  std::uint64_t seed = 0;

  app.add_option("--simd", simd, "Kernel backend: scalar or avx2 (default: best available)");

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic multi-domain dataset");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  gen->add_option("--out", out_path, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train on the source domains of a run config");
  tr->add_option("--config", config_path, "Run config JSON")->required();

  auto* ev = app.add_subcommand("eval", "Accuracy of a saved model on one domain of a CSV");
  ev->add_option("--model", model_path, "Model file")->required();
  ev->add_option("--data", data_path, "Dataset CSV")->required();
  ev->add_option("--target", target, "Domain id to evaluate")->required();

  auto* ab = app.add_subcommand("ablate", "Run every component ablation over several seeds");
  ab->add_option("--config", config_path, "Run config JSON")->required();
  ab->add_option("--seeds", seeds, "Seeds per variant")->check(CLI::PositiveNumber);
  ab->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gc->add_option("--seed", seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (!simd.empty()) {
      auto b = simd::parse_backend(simd);
      if (!b) throw ConfigError("--simd: expected 'scalar' or 'avx2'");
      simd::set_backend(*b);
    }
    if (*gen) return cmd_gen_data(spec_path, out_path);
    if (*tr) return cmd_train(config_path);
    if (*ev) return cmd_eval(model_path, data_path, target);
    if (*ab) return cmd_ablate(config_path, seeds, threads);
    if (*gc) return cmd_gradcheck(seed);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
