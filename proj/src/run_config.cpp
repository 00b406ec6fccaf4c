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

#include "ddian/run_config.hpp"

#include <cstdint>
#include <fstream>
#include <set>

#include "ddian/error.hpp"

namespace ddian::config {

namespace {

// Walks one JSON object, consuming known keys and rejecting the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw ConfigError(where(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void widths(const std::string& key, std::vector<std::size_t>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of widths");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() <= 0)
        throw ConfigError(where(key) + ": widths must be positive integers");
      out.push_back(e.get<std::size_t>());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string family_name(data::Family f) {
  return f == data::Family::kRotatedMoons ? "moons" : "blobs";
}

}  // namespace

data::SyntheticSpec parse_synthetic_spec(const json& j) {
  data::SyntheticSpec spec;
  {
    Section s(j, "synthetic");
    std::string family = "blobs";
    s.get("family", family);
    if (family == "blobs")
      spec.family = data::Family::kRotatedBlobs;
    else if (family == "moons")
      spec.family = data::Family::kRotatedMoons;
    else
      throw ConfigError("synthetic.family: expected 'blobs' or 'moons', got '" + family + "'");
    s.get("num_classes", spec.num_classes);
    if (s.has("angles_deg")) {
      const json& a = s.at("angles_deg");
      if (!a.is_array()) throw ConfigError("synthetic.angles_deg: expected an array");
      spec.angles_deg.clear();
      for (const auto& e : a) {
        if (!e.is_number()) throw ConfigError("synthetic.angles_deg: expected numbers");
        spec.angles_deg.push_back(e.get<double>());
      }
    }
    s.get("samples_per_class", spec.samples_per_class);
    s.get("sigma", spec.sigma);
    s.get("seed", spec.seed);
  }
  spec.validate();
  return spec;
}

json to_json(const data::SyntheticSpec& spec) {
  return json{{"family", family_name(spec.family)},
              {"num_classes", spec.num_classes},
              {"angles_deg", spec.angles_deg},
              {"samples_per_class", spec.samples_per_class},
              {"sigma", spec.sigma},
              {"seed", spec.seed}};
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  auto& tc = cfg.train;
  bool synthetic_seed_given = false;
  {
    Section root(j, "config");
    if (root.has("train")) {
      Section s(root.at("train"), "train");
      s.get("seed", tc.seed);
      s.get("eval_every", tc.eval_every);
      s.get("validation_fraction", tc.validation_fraction);
      s.get("use_global", tc.flags.global);
      s.get("use_local", tc.flags.local);
      s.get("use_discriminative", tc.flags.discriminative);
      std::string gate = "soft";
      s.get("local_gate", gate);
      if (gate == "soft")
        tc.gate = model::LocalGate::kSoft;
      else if (gate == "hard")
        tc.gate = model::LocalGate::kHard;
      else
        throw ConfigError("train.local_gate: expected 'soft' or 'hard', got '" + gate + "'");
    }
    if (root.has("hyper")) {
      Section s(root.at("hyper"), "hyper");
      s.get("alpha", tc.hp.alpha);
      s.get("beta", tc.hp.beta);
      s.get("gamma", tc.hp.gamma);
      s.get("phi", tc.hp.phi);
      s.get("batch_size", tc.hp.batch_size);
      s.get("momentum", tc.hp.momentum);
      s.get("eta0", tc.hp.eta0);
      s.get("epochs", tc.hp.epochs);
    }
    if (root.has("model")) {
      Section s(root.at("model"), "model");
      s.widths("feature_hidden", tc.feature_hidden);
      s.get("feature_dim", tc.feature_dim);
      s.widths("global_hidden", tc.global_hidden);
      s.widths("local_hidden", tc.local_hidden);
      if (tc.feature_dim == 0) throw ConfigError("model.feature_dim must be >= 1");
    }
    if (root.has("output")) {
      Section s(root.at("output"), "output");
      s.get("directory", cfg.output_dir);
    }
    if (!root.has("data")) throw ConfigError("config: missing 'data' section");
    Section s(root.at("data"), "data");
    s.get("target", cfg.data.target);
    if (s.has("synthetic")) {
      const json& syn = s.at("synthetic");
      synthetic_seed_given = syn.is_object() && syn.contains("seed");
      cfg.data.synthetic = parse_synthetic_spec(syn);
    }
    if (s.has("csv")) {
      std::string path;
      s.get("csv", path);
      cfg.data.csv = path;
    }
  }
  if (cfg.data.synthetic.has_value() == cfg.data.csv.has_value())
    throw ConfigError("data: specify exactly one of 'synthetic' or 'csv'");
  if (cfg.data.synthetic && !synthetic_seed_given) cfg.data.synthetic->seed = tc.seed;
  tc.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const auto& tc = cfg.train;
  json data{{"target", cfg.data.target}};
  if (cfg.data.synthetic) data["synthetic"] = to_json(*cfg.data.synthetic);
  if (cfg.data.csv) data["csv"] = *cfg.data.csv;
  return json{
      {"data", data},
      {"model",
       {{"feature_hidden", tc.feature_hidden},
        {"feature_dim", tc.feature_dim},
        {"global_hidden", tc.global_hidden},
        {"local_hidden", tc.local_hidden}}},
      {"hyper",
       {{"alpha", tc.hp.alpha},
        {"beta", tc.hp.beta},
        {"gamma", tc.hp.gamma},
        {"phi", tc.hp.phi},
        {"batch_size", tc.hp.batch_size},
        {"momentum", tc.hp.momentum},
        {"eta0", tc.hp.eta0},
        {"epochs", tc.hp.epochs}}},
      {"train",
       {{"seed", tc.seed},
        {"eval_every", tc.eval_every},
        {"validation_fraction", tc.validation_fraction},
        {"use_global", tc.flags.global},
        {"use_local", tc.flags.local},
        {"use_discriminative", tc.flags.discriminative},
        {"local_gate", tc.gate == model::LocalGate::kHard ? "hard" : "soft"}}},
      {"output", {{"directory", cfg.output_dir}}},
  };
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

data::DomainDataset load_dataset(const DataSource& src) {
  if (src.synthetic) return data::generate(*src.synthetic);
  if (src.csv) return data::load_csv(*src.csv);
  throw ConfigError("data: no source configured");
}

json to_json(const loss::LossBreakdown& b) {
  return json{{"l_cls", b.l_cls}, {"l_dm", b.l_dm}, {"l_dc", b.l_dc}, {"l_dis", b.l_dis},
              {"total", b.total}, {"alpha", b.alpha}, {"beta", b.beta}, {"gamma", b.gamma},
              {"phi", b.phi}};
}

json to_json(const train::RunResult& r) {
  json series = json::array();
  for (const auto& b : r.series) series.push_back(to_json(b));
  json validation = json::array();
  for (const auto& v : r.validation) validation.push_back({{"epoch", v.epoch}, {"accuracy", v.accuracy}});
  RunConfig echo;
  echo.train = r.config;
  json cfg = to_json(echo);
  cfg.erase("data");
  cfg.erase("output");
  return json{{"seed", r.seed},
              {"config", cfg},
              {"epochs", series},
              {"validation", validation},
              {"source_val_acc", r.source_val_acc},
              {"target_acc", r.target_acc ? json(*r.target_acc) : json(nullptr)}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace ddian::config
