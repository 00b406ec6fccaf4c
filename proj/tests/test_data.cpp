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
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ddian/data.hpp"
#include "ddian/error.hpp"

using namespace ddian;
using namespace ddian::data;

namespace {

SyntheticSpec two_domains(double first_angle) {
  SyntheticSpec s;
  s.angles_deg = {first_angle, 10.0};
  s.samples_per_class = 40;
  s.seed = 99;
  return s;
}

std::vector<Sample> domain_samples(const DomainDataset& ds, int d) {
  std::vector<Sample> out;
  for (const auto& s : ds.samples())
    if (s.domain == d) out.push_back(s);
  return out;
}

}  // namespace

TEST(Generate, FullTurnIsIdentity) {
  const auto a = domain_samples(generate(two_domains(0.0)), 0);
  const auto b = domain_samples(generate(two_domains(360.0)), 0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].x, b[i].x);
}

TEST(Generate, NoiselessSamplesSitOnMeans) {
  SyntheticSpec s;
  s.sigma = 0.0;
  s.samples_per_class = 5;
  const auto ds = generate(s);
  for (const auto& smp : ds.samples()) {
    const double a = 2 * std::numbers::pi * smp.label / 3.0 + s.angles_deg[smp.domain] * std::numbers::pi / 180.0;
    EXPECT_NEAR(smp.x[0], std::cos(a), 1e-12);
    EXPECT_NEAR(smp.x[1], std::sin(a), 1e-12);
  }
}

TEST(Generate, ClassMeansWithinThreeSigma) {
  SyntheticSpec s;
  s.samples_per_class = 400;
  s.seed = 5;
  const auto ds = generate(s);
  const double n = static_cast<double>(s.samples_per_class);
  for (std::size_t d = 0; d < 4; ++d)
    for (int k = 0; k < 3; ++k) {
      double mx = 0, my = 0;
      for (const auto& smp : ds.samples())
        if (smp.domain == static_cast<int>(d) && smp.label == k) {
          mx += smp.x[0] / n;
          my += smp.x[1] / n;
        }
      const double a = 2 * std::numbers::pi * k / 3.0 + s.angles_deg[d] * std::numbers::pi / 180.0;
      EXPECT_LT(std::abs(mx - std::cos(a)), 3 * s.sigma / std::sqrt(n));
      EXPECT_LT(std::abs(my - std::sin(a)), 3 * s.sigma / std::sqrt(n));
    }
}

TEST(Generate, ClassBalance) {
  for (auto fam : {Family::kRotatedBlobs, Family::kRotatedMoons}) {
    SyntheticSpec s;
    s.family = fam;
    s.num_classes = fam == Family::kRotatedMoons ? 2 : 4;
    s.samples_per_class = 17;
    const auto ds = generate(s);
    EXPECT_EQ(ds.size(), 4u * s.num_classes * 17u);
    for (int d = 0; d < 4; ++d)
      for (int k = 0; k < static_cast<int>(s.num_classes); ++k) EXPECT_EQ(ds.count(d, k), 17u);
  }
}

TEST(Generate, RotationEquivariance) {
  for (double theta : {25.0, 75.0, 200.0}) {
    const auto rotated = domain_samples(generate(two_domains(theta)), 0);
    const auto base = domain_samples(generate(two_domains(0.0)), 0);
    const double t = theta * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double x = base[i].x[0] * std::cos(t) - base[i].x[1] * std::sin(t);
      const double y = base[i].x[0] * std::sin(t) + base[i].x[1] * std::cos(t);
      EXPECT_NEAR(rotated[i].x[0], x, 1e-12);
      EXPECT_NEAR(rotated[i].x[1], y, 1e-12);
    }
  }
}

TEST(Generate, Deterministic) {
  EXPECT_EQ(generate(two_domains(5.0)), generate(two_domains(5.0)));
  auto other = two_domains(5.0);
  other.seed = 100;
  EXPECT_NE(generate(two_domains(5.0)), generate(other));
}

TEST(Generate, SpecValidation) {
  SyntheticSpec s;
  s.family = Family::kRotatedMoons;
  try {
    generate(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "moons requires K=2");
  }
  SyntheticSpec dup;
  dup.angles_deg = {0, 0};
  EXPECT_THROW(generate(dup), ConfigError);
  SyntheticSpec one;
  one.angles_deg = {0};
  EXPECT_THROW(generate(one), ConfigError);
}

TEST(LeaveOneOut, Bookkeeping) {
  SyntheticSpec s;
  s.samples_per_class = 10;
  const auto ds = generate(s);
  auto split = leave_one_out(ds, 3);
  const auto& src = split.sources.data;
  EXPECT_EQ(src.num_domains(), 3u);
  EXPECT_EQ(split.sources.original_ids, (std::vector<int>{0, 1, 2}));
  std::set<int> ids;
  for (const auto& smp : src.samples()) ids.insert(smp.domain);
  EXPECT_EQ(ids, (std::set<int>{0, 1, 2}));
  EXPECT_EQ(split.target.reads(), 0u);
  const auto& tgt = split.target.read();
  EXPECT_EQ(split.target.reads(), 1u);
  EXPECT_EQ(src.size() + tgt.size(), ds.size());

  // disjoint: no target point among sources
  std::set<std::vector<double>> src_points;
  for (const auto& smp : src.samples()) src_points.insert(smp.x);
  for (const auto& smp : tgt.samples()) EXPECT_FALSE(src_points.contains(smp.x));

  auto mid = leave_one_out(ds, 1);
  EXPECT_EQ(mid.sources.original_ids, (std::vector<int>{0, 2, 3}));
  EXPECT_EQ(mid.target.original_id(), 1);
}

TEST(LeaveOneOut, Errors) {
  SyntheticSpec s;
  s.samples_per_class = 3;
  const auto ds = generate(s);
  EXPECT_THROW(leave_one_out(ds, 4), ProtocolError);
  EXPECT_THROW(leave_one_out(ds, -1), ProtocolError);
  s.angles_deg = {0, 30};
  EXPECT_THROW(leave_one_out(generate(s), 0), ProtocolError);
}

TEST(DomainDataset, MissingClassIsProtocolError) {
  std::vector<Sample> v{{{0, 0}, 0, 0}, {{0, 1}, 1, 0}, {{1, 0}, 0, 1}};
  DomainDataset ds(2, 2, 2, v);
  EXPECT_THROW(ds.require_every_class_in_every_domain(), ProtocolError);
  EXPECT_THROW(DomainDataset(2, 2, 3, v), DataError);  // domain 2 empty
  v.push_back({{0, 0}, 2, 1});
  EXPECT_THROW(DomainDataset(2, 2, 2, v), DataError);
}

TEST(Batches, CoverageAndDeterminism) {
  SyntheticSpec s;
  s.samples_per_class = 11;
  const auto ds = generate(s);
  const auto b1 = batches(ds, 32, 7, 0);
  std::vector<std::size_t> all;
  for (const auto& b : b1) {
    all.insert(all.end(), b.indices.begin(), b.indices.end());
    EXPECT_EQ(b.x.rows(), b.labels.size());
    for (std::size_t i = 0; i < b.indices.size(); ++i) {
      EXPECT_EQ(b.labels[i], ds[b.indices[i]].label);
      EXPECT_EQ(b.domains[i], ds[b.indices[i]].domain);
      EXPECT_EQ(b.x(i, 0), ds[b.indices[i]].x[0]);
    }
  }
  EXPECT_EQ(b1.back().indices.size(), ds.size() % 32);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(all.size(), ds.size());

  const auto b2 = batches(ds, 32, 7, 0);
  for (std::size_t i = 0; i < b1.size(); ++i) EXPECT_EQ(b1[i].indices, b2[i].indices);

  std::set<std::vector<std::size_t>> perms;
  for (std::uint64_t e = 0; e < 5; ++e) perms.insert(batches(ds, ds.size(), 7, e)[0].indices);
  EXPECT_EQ(perms.size(), 5u);
  EXPECT_THROW(batches(ds, 0, 7, 0), ConfigError);
}

TEST(SplitValidation, StratifiedAndDisjoint) {
  SyntheticSpec s;
  s.samples_per_class = 20;
  const auto ds = generate(s);
  const auto split = split_validation(ds, 0.1, 3);
  EXPECT_EQ(split.validation.labels.size(), 4u * 3u * 2u);
  EXPECT_EQ(split.train.size() + split.validation.labels.size(), ds.size());
  for (int d = 0; d < 4; ++d)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(split.train.count(d, k), 18u);
  std::set<std::size_t> val(split.validation.indices.begin(), split.validation.indices.end());
  EXPECT_EQ(val.size(), split.validation.indices.size());
}

TEST(Csv, RoundTrip) {
  SyntheticSpec s;
  s.samples_per_class = 7;
  const auto ds = generate(s);
  std::stringstream buf;
  write_csv(ds, buf);
  EXPECT_EQ(read_csv(buf), ds);
}

TEST(Csv, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in, "t.csv");
  };
  auto expect_error = [&](const std::string& text, const std::string& needle) {
    try {
      parse(text);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error("", "no samples");
  expect_error("domain,label,f0\n", "no samples");
  expect_error("x,y,z\n0,0,1\n", "t.csv:1");
  expect_error("# ddian-dataset num_classes=2 num_domains=1\ndomain,label,f0\n0,0,1\n0,2,1\n", "t.csv:4");
  expect_error("domain,label,f0,f1\n0,0,1,2\n0,1,1\n", "t.csv:3");
  expect_error("domain,label,f0\n0,0,abc\n", "t.csv:2");
  expect_error("domain,label,f0\n-1,0,1\n", "t.csv:2");
  expect_error("domain,label,f0\n0,0,nan\n", "t.csv:2");
  const auto ok = parse("domain,label,f0\n0,0,1.5\n1,1,-2\n");
  EXPECT_EQ(ok.num_classes(), 2u);
  EXPECT_EQ(ok.num_domains(), 2u);
}
