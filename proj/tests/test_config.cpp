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

#include <gtest/gtest.h>

#include "ddian/error.hpp"
#include "ddian/run_config.hpp"

using namespace ddian;
using config::json;

namespace {

json minimal() { return json::parse(R"({"data": {"synthetic": {}}})"); }

void expect_config_error(const json& j, const std::string& needle) {
  try {
    config::parse_run_config(j);
    ADD_FAILURE() << "accepted: " << j.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(RunConfig, DefaultsResolved) {
  const auto cfg = config::parse_run_config(minimal());
  EXPECT_EQ(cfg.data.target, 3);
  ASSERT_TRUE(cfg.data.synthetic.has_value());
  EXPECT_EQ(cfg.data.synthetic->angles_deg, (std::vector<double>{0, 25, 50, 75}));
  EXPECT_EQ(cfg.train.hp, loss::HyperParams{});
  EXPECT_EQ(cfg.train.hp.epochs, 60u);
  EXPECT_EQ(cfg.train.eval_every, 5u);
  EXPECT_EQ(cfg.output_dir, "run");
}

TEST(RunConfig, EchoReproducesItself) {
  auto j = minimal();
  j["train"] = {{"seed", 12}, {"use_local", false}, {"local_gate", "hard"}};
  j["hyper"] = {{"alpha", 0.25}, {"epochs", 7}};
  j["model"] = {{"feature_hidden", {8, 4}}};
  const auto echoed = config::to_json(config::parse_run_config(j));
  EXPECT_EQ(config::to_json(config::parse_run_config(echoed)), echoed);
  EXPECT_EQ(echoed["data"]["synthetic"]["seed"], 12);
  EXPECT_EQ(echoed["hyper"]["alpha"], 0.25);
  EXPECT_EQ(echoed["train"]["use_local"], false);
}

TEST(RunConfig, SyntheticSeedOverridesRunSeed) {
  auto j = minimal();
  j["data"]["synthetic"]["seed"] = 5;
  j["train"] = {{"seed", 12}};
  EXPECT_EQ(config::parse_run_config(j).data.synthetic->seed, 5u);
}

TEST(RunConfig, StrictParsing) {
  auto j = minimal();
  j["hyper"] = {{"alpah", 1.0}};
  expect_config_error(j, "unknown key 'alpah'");
  j = minimal();
  j["extra"] = 1;
  expect_config_error(j, "unknown key 'extra'");
  j = minimal();
  j["hyper"] = {{"batch_size", "big"}};
  expect_config_error(j, "hyper.batch_size");
  j = minimal();
  j["hyper"] = {{"batch_size", -4}};
  expect_config_error(j, "hyper.batch_size");
  j = minimal();
  j["hyper"] = {{"gamma", -1.0}};
  expect_config_error(j, "gamma");
  j = minimal();
  j["data"]["csv"] = "x.csv";
  expect_config_error(j, "exactly one");
  j = minimal();
  j["data"]["synthetic"]["family"] = "spirals";
  expect_config_error(j, "family");
  j = minimal();
  j["model"] = {{"feature_hidden", {0}}};
  expect_config_error(j, "widths");
  j = minimal();
  j["train"] = {{"local_gate", "medium"}};
  expect_config_error(j, "local_gate");
  expect_config_error(json::parse("{}"), "data");
}

TEST(RunConfig, SyntheticSpecParsing) {
  const auto spec = config::parse_synthetic_spec(
      json::parse(R"({"family": "moons", "num_classes": 2, "angles_deg": [0, 90], "sigma": 0.1})"));
  EXPECT_EQ(spec.family, data::Family::kRotatedMoons);
  EXPECT_EQ(spec.angles_deg.size(), 2u);
  EXPECT_EQ(config::parse_synthetic_spec(config::to_json(spec)).sigma, 0.1);
  EXPECT_THROW(config::parse_synthetic_spec(json::parse(R"({"num_classes": 2, "bogus": 1})")), ConfigError);
}

TEST(RunResultJson, OmitsWallClock) {
  train::RunResult r;
  r.series.resize(2);
  r.validation = {{2, 0.5}};
  r.wall_clock_seconds = 12.5;
  r.target_acc = 0.75;
  const auto j = config::to_json(r);
  EXPECT_FALSE(j.dump().find("wall") != std::string::npos);
  EXPECT_EQ(j["target_acc"], 0.75);
  EXPECT_EQ(j["epochs"].size(), 2u);
  EXPECT_EQ(config::dump(j).back(), '\n');
}
