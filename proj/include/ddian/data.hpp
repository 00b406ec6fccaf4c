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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ddian/matrix.hpp"

namespace ddian::data {

struct Sample {
  std::vector<double> x;
  int label = 0;
  int domain = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Labeled samples from several domains. Construction validates every sample
// (finite features of the right width, ids in range) and that no domain is empty.
class DomainDataset {
 public:
  DomainDataset(std::size_t feature_dim, std::size_t num_classes, std::size_t num_domains,
                std::vector<Sample> samples);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_domains() const { return num_domains_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  std::size_t count(int domain, int label) const;
  // Throws ProtocolError naming the first (domain, class) pair with no samples.
  void require_every_class_in_every_domain() const;

  Matrix features(std::span<const std::size_t> index) const;
  Matrix features() const;
  std::vector<int> labels() const;

  friend bool operator==(const DomainDataset&, const DomainDataset&) = default;

 private:
  std::size_t feature_dim_;
  std::size_t num_classes_;
  std::size_t num_domains_;
  std::vector<Sample> samples_;
};

// Rows `index` of ds, keeping its class and domain counts.
DomainDataset subset(const DomainDataset& ds, std::span<const std::size_t> index);

// ---- synthetic domains ----

enum class Family { kRotatedBlobs, kRotatedMoons };

struct SyntheticSpec {
  Family family = Family::kRotatedBlobs;
  std::size_t num_classes = 3;
  std::vector<double> angles_deg{0.0, 25.0, 50.0, 75.0};
  std::size_t samples_per_class = 150;
  double sigma = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

// Blobs: class means equally spaced on the unit circle plus isotropic Gaussian
// noise. Moons: two interleaved half-circles (K = 2). Each domain is the base
// configuration rotated by its angle. Domain i draws noise from stream i of the
// seed, so equal seeds reproduce a domain regardless of its angle.
DomainDataset generate(const SyntheticSpec& spec);

// ---- leave-one-domain-out ----

// Training side of a split. Domain ids are dense in [0, N); original_ids maps back.
struct SourceDomains {
  DomainDataset data;
  std::vector<int> original_ids;
};

// Held-out side of a split. Every read goes through read() and is counted, so
// training code can prove it never touched the target.
class HeldOutDomain {
 public:
  HeldOutDomain(DomainDataset data, int original_id);

  const DomainDataset& read() const;
  // Same samples behind a fresh counter, for runs that must be audited separately.
  HeldOutDomain fork() const { return HeldOutDomain(data_, original_id_); }
  std::size_t reads() const { return reads_->load(); }
  int original_id() const { return original_id_; }

 private:
  DomainDataset data_;
  int original_id_;
  std::shared_ptr<std::atomic<std::size_t>> reads_;
};

struct LodoSplit {
  SourceDomains sources;
  HeldOutDomain target;
};

// Throws ProtocolError for an unknown target or fewer than two remaining domains.
LodoSplit leave_one_out(const DomainDataset& ds, int target);

// ---- batching ----

struct Batch {
  Matrix x;
  std::vector<int> labels;
  std::vector<int> domains;
  std::vector<std::size_t> indices;
};

// One epoch of mini-batches over a permutation keyed by (seed, epoch).
// The final short batch is kept.
std::vector<Batch> batches(const DomainDataset& ds, std::size_t batch_size, std::uint64_t seed,
                           std::uint64_t epoch);
Batch gather(const DomainDataset& ds, std::span<const std::size_t> index);

// Stratified hold-out: round(fraction * n) samples of every (domain, class)
// cell, never the whole cell.
struct ValidationSplit {
  DomainDataset train;
  Batch validation;
};
ValidationSplit split_validation(const DomainDataset& ds, double fraction, std::uint64_t seed);

// ---- CSV ----
//
// Optional first line "# ddian-dataset num_classes=K num_domains=N", then the
// header "domain,label,f0,...,f{d-1}" and one sample per row. Without the
// metadata line, K and N are one past the largest ids seen.

DomainDataset read_csv(std::istream& in, const std::string& source_name = "<stream>");
void write_csv(const DomainDataset& ds, std::ostream& out);
DomainDataset load_csv(const std::filesystem::path& path);
void save_csv(const DomainDataset& ds, const std::filesystem::path& path);

}  // namespace ddian::data
