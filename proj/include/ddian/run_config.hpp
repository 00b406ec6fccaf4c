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

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ddian/data.hpp"
#include "ddian/trainer.hpp"

// JSON run configuration and result documents. Parsing is strict: unknown keys
// and wrongly typed values raise ConfigError. Serialization always writes every
// field with defaults resolved, so a written config reproduces its run exactly.

namespace ddian::config {

using nlohmann::json;

struct DataSource {
  std::optional<data::SyntheticSpec> synthetic;  // exactly one of synthetic / csv
  std::optional<std::string> csv;
  int target = 3;
};

struct RunConfig {
  DataSource data;
  train::TrainConfig train;
  std::string output_dir = "run";
};

data::SyntheticSpec parse_synthetic_spec(const json& j);
json to_json(const data::SyntheticSpec& spec);

// A synthetic section without "seed" takes the run seed.
RunConfig parse_run_config(const json& j);
json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

data::DomainDataset load_dataset(const DataSource& src);

json to_json(const loss::LossBreakdown& b);
// Omits wall-clock time so identical runs produce identical documents.
json to_json(const train::RunResult& r);

// Exactly one shared writer so every JSON file has the same layout.
std::string dump(const json& j);

}  // namespace ddian::config
