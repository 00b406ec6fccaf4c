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

#include "ddian/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ddian/error.hpp"
#include "ddian/rng.hpp"

namespace ddian::data {

// ---------------------------------------------------------------------------
// DomainDataset

DomainDataset::DomainDataset(std::size_t feature_dim, std::size_t num_classes,
                             std::size_t num_domains, std::vector<Sample> samples)
    : feature_dim_(feature_dim),
      num_classes_(num_classes),
      num_domains_(num_domains),
      samples_(std::move(samples)) {
  if (feature_dim_ == 0) throw DataError("dataset: feature dimension must be >= 1");
  if (num_classes_ == 0 || num_domains_ == 0) throw DataError("dataset: no classes or no domains");
  std::vector<std::size_t> per_domain(num_domains_, 0);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    const std::string where = "dataset sample " + std::to_string(i);
    if (s.x.size() != feature_dim_)
      throw DataError(where + ": has " + std::to_string(s.x.size()) + " features, expected " +
                      std::to_string(feature_dim_));
    if (!std::all_of(s.x.begin(), s.x.end(), [](double v) { return std::isfinite(v); }))
      throw DataError(where + ": non-finite feature");
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes_)
      throw DataError(where + ": label " + std::to_string(s.label) + " outside [0, " +
                      std::to_string(num_classes_) + ")");
    if (s.domain < 0 || static_cast<std::size_t>(s.domain) >= num_domains_)
      throw DataError(where + ": domain " + std::to_string(s.domain) + " outside [0, " +
                      std::to_string(num_domains_) + ")");
    ++per_domain[static_cast<std::size_t>(s.domain)];
  }
  for (std::size_t d = 0; d < num_domains_; ++d)
    if (per_domain[d] == 0) throw DataError("dataset: domain " + std::to_string(d) + " is empty");
}

std::size_t DomainDataset::count(int domain, int label) const {
  return static_cast<std::size_t>(std::count_if(samples_.begin(), samples_.end(), [&](const Sample& s) {
    return s.domain == domain && s.label == label;
  }));
}

void DomainDataset::require_every_class_in_every_domain() const {
  std::vector<std::size_t> cells(num_domains_ * num_classes_, 0);
  for (const auto& s : samples_)
    ++cells[static_cast<std::size_t>(s.domain) * num_classes_ + static_cast<std::size_t>(s.label)];
  for (std::size_t d = 0; d < num_domains_; ++d)
    for (std::size_t k = 0; k < num_classes_; ++k)
      if (cells[d * num_classes_ + k] == 0)
        throw ProtocolError("class " + std::to_string(k) + " is missing from source domain " +
                            std::to_string(d));
}

Matrix DomainDataset::features(std::span<const std::size_t> index) const {
  Matrix m(index.size(), feature_dim_);
  for (std::size_t r = 0; r < index.size(); ++r)
    std::copy(samples_.at(index[r]).x.begin(), samples_.at(index[r]).x.end(), m.row(r).begin());
  return m;
}

Matrix DomainDataset::features() const {
  std::vector<std::size_t> all(samples_.size());
  std::iota(all.begin(), all.end(), 0);
  return features(all);
}

std::vector<int> DomainDataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.label);
  return out;
}

DomainDataset subset(const DomainDataset& ds, std::span<const std::size_t> index) {
  std::vector<Sample> out;
  out.reserve(index.size());
  for (auto i : index) out.push_back(ds.samples().at(i));
  return DomainDataset(ds.feature_dim(), ds.num_classes(), ds.num_domains(), std::move(out));
}

// ---------------------------------------------------------------------------
// Synthetic generation

void SyntheticSpec::validate() const {
  if (angles_deg.size() < 2) throw ConfigError("synthetic data needs at least 2 domains");
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    if (!std::isfinite(angles_deg[i])) throw ConfigError("domain angles must be finite");
    for (std::size_t j = 0; j < i; ++j)
      if (angles_deg[i] == angles_deg[j]) throw ConfigError("domain angles must be distinct");
  }
  if (num_classes < 2) throw ConfigError("synthetic data needs K >= 2");
  if (family == Family::kRotatedMoons && num_classes != 2) throw ConfigError("moons requires K=2");
  if (samples_per_class == 0) throw ConfigError("samples_per_class must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
}

namespace {

std::pair<double, double> rotate(double x, double y, double cos_t, double sin_t) {
  return {x * cos_t - y * sin_t, x * sin_t + y * cos_t};
}

// Base (unrotated) point for class k.
std::pair<double, double> base_point(const SyntheticSpec& spec, int k, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  double x = 0.0, y = 0.0;
  if (spec.family == Family::kRotatedBlobs) {
    const double a = 2.0 * std::numbers::pi * k / static_cast<double>(spec.num_classes);
    x = std::cos(a);
    y = std::sin(a);
  } else {
    std::uniform_real_distribution<double> arc(0.0, std::numbers::pi);
    const double t = arc(rng);
    if (k == 0) {
      x = std::cos(t) - 0.5;
      y = std::sin(t) - 0.25;
    } else {
      x = 0.5 - std::cos(t);
      y = 0.25 - std::sin(t);
    }
  }
  if (spec.sigma > 0.0) {
    const double nx = noise(rng);
    const double ny = noise(rng);
    x += spec.sigma * nx;
    y += spec.sigma * ny;
  }
  return {x, y};
}

}  // namespace

DomainDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Sample> samples;
  samples.reserve(spec.angles_deg.size() * spec.num_classes * spec.samples_per_class);
  for (std::size_t d = 0; d < spec.angles_deg.size(); ++d) {
    const double theta = std::fmod(spec.angles_deg[d], 360.0) * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    Rng rng(derive_seed(spec.seed, d));
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
      for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
        auto [bx, by] = base_point(spec, static_cast<int>(k), rng);
        auto [x, y] = rotate(bx, by, cos_t, sin_t);
        samples.push_back({{x, y}, static_cast<int>(k), static_cast<int>(d)});
      }
    }
  }
  return DomainDataset(2, spec.num_classes, spec.angles_deg.size(), std::move(samples));
}

// ---------------------------------------------------------------------------
// Leave-one-domain-out

HeldOutDomain::HeldOutDomain(DomainDataset data, int original_id)
    : data_(std::move(data)),
      original_id_(original_id),
      reads_(std::make_shared<std::atomic<std::size_t>>(0)) {}

const DomainDataset& HeldOutDomain::read() const {
  reads_->fetch_add(1);
  return data_;
}

LodoSplit leave_one_out(const DomainDataset& ds, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= ds.num_domains())
    throw ProtocolError("unknown target domain " + std::to_string(target) + " (dataset has " +
                        std::to_string(ds.num_domains()) + " domains)");
  if (ds.num_domains() < 3)
    throw ProtocolError("leave-one-domain-out needs at least 2 source domains");

  std::vector<int> dense(ds.num_domains(), -1);
  std::vector<int> original_ids;
  for (int d = 0; d < static_cast<int>(ds.num_domains()); ++d) {
    if (d == target) continue;
    dense[static_cast<std::size_t>(d)] = static_cast<int>(original_ids.size());
    original_ids.push_back(d);
  }
  std::vector<Sample> source, held;
  for (const auto& s : ds.samples()) {
    if (s.domain == target) {
      Sample t = s;
      t.domain = 0;
      held.push_back(std::move(t));
    } else {
      Sample t = s;
      t.domain = dense[static_cast<std::size_t>(s.domain)];
      source.push_back(std::move(t));
    }
  }
  DomainDataset src(ds.feature_dim(), ds.num_classes(), original_ids.size(), std::move(source));
  DomainDataset tgt(ds.feature_dim(), ds.num_classes(), 1, std::move(held));
  return {SourceDomains{std::move(src), std::move(original_ids)}, HeldOutDomain(std::move(tgt), target)};
}

// ---------------------------------------------------------------------------
// Batching

Batch gather(const DomainDataset& ds, std::span<const std::size_t> index) {
  Batch b;
  b.x = ds.features(index);
  b.indices.assign(index.begin(), index.end());
  b.labels.reserve(index.size());
  b.domains.reserve(index.size());
  for (auto i : index) {
    b.labels.push_back(ds[i].label);
    b.domains.push_back(ds[i].domain);
  }
  return b;
}

std::vector<Batch> batches(const DomainDataset& ds, std::size_t batch_size, std::uint64_t seed,
                           std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> out;
  out.reserve((order.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(gather(ds, std::span(order).subspan(start, end - start)));
  }
  return out;
}

ValidationSplit split_validation(const DomainDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must be in [0, 1)");
  const std::size_t k = ds.num_classes();
  std::vector<std::vector<std::size_t>> cells(ds.num_domains() * k);
  for (std::size_t i = 0; i < ds.size(); ++i)
    cells[static_cast<std::size_t>(ds[i].domain) * k + static_cast<std::size_t>(ds[i].label)].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& cell : cells) {
    if (cell.empty()) continue;
    std::shuffle(cell.begin(), cell.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cell.size())));
    n_val = std::min(n_val, cell.size() - 1);
    val_idx.insert(val_idx.end(), cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.insert(train_idx.end(), cell.begin() + static_cast<std::ptrdiff_t>(n_val), cell.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {subset(ds, train_idx), gather(ds, val_idx)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kMetaPrefix = "# ddian-dataset";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + what);
}

long parse_id(std::string_view field, const std::string& source, std::size_t line,
              std::string_view what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(source, line, "non-integer " + std::string(what) + " '" + std::string(field) + "'");
  if (v < 0) fail(source, line, "negative " + std::string(what) + " " + std::to_string(v));
  return v;
}

double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    fail(source, line, "non-numeric feature '" + std::string(field) + "'");
  return v;
}

std::size_t meta_value(std::string_view meta, std::string_view key, const std::string& source) {
  const std::string needle = std::string(key) + "=";
  const auto pos = meta.find(needle);
  if (pos == std::string_view::npos) return 0;
  auto rest = meta.substr(pos + needle.size());
  rest = rest.substr(0, rest.find(' '));
  return static_cast<std::size_t>(parse_id(rest, source, 1, key));
}

}  // namespace

DomainDataset read_csv(std::istream& in, const std::string& source_name) {
  std::string raw;
  std::size_t line_no = 0;
  std::size_t declared_classes = 0, declared_domains = 0;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, raw)) return false;
    ++line_no;
    return true;
  };

  if (!next_line()) fail(source_name, 1, "no samples");
  if (trim(raw).starts_with(kMetaPrefix)) {
    declared_classes = meta_value(raw, "num_classes", source_name);
    declared_domains = meta_value(raw, "num_domains", source_name);
    if (!next_line()) fail(source_name, line_no + 1, "no samples");
  }
  if (trim(raw).empty()) fail(source_name, line_no, "no samples");

  const auto header = split_commas(trim(raw));
  if (header.size() < 3 || trim(header[0]) != "domain" || trim(header[1]) != "label")
    fail(source_name, line_no, "missing header 'domain,label,f0,...'");
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j)
    if (trim(header[j + 2]) != "f" + std::to_string(j))
      fail(source_name, line_no, "header column " + std::to_string(j + 2) + " should be f" +
                                     std::to_string(j));

  std::vector<Sample> samples;
  long max_label = -1, max_domain = -1;
  while (next_line()) {
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != dim + 2)
      fail(source_name, line_no, "expected " + std::to_string(dim + 2) + " fields, got " +
                                     std::to_string(fields.size()));
    Sample s;
    const long domain = parse_id(trim(fields[0]), source_name, line_no, "domain");
    const long label = parse_id(trim(fields[1]), source_name, line_no, "label");
    if (declared_classes && static_cast<std::size_t>(label) >= declared_classes)
      fail(source_name, line_no, "label " + std::to_string(label) + " >= declared num_classes " +
                                     std::to_string(declared_classes));
    if (declared_domains && static_cast<std::size_t>(domain) >= declared_domains)
      fail(source_name, line_no, "domain " + std::to_string(domain) + " >= declared num_domains " +
                                     std::to_string(declared_domains));
    if (label > 1'000'000 || domain > 1'000'000) fail(source_name, line_no, "id too large");
    s.domain = static_cast<int>(domain);
    s.label = static_cast<int>(label);
    s.x.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) s.x.push_back(parse_double(trim(fields[j + 2]), source_name, line_no));
    max_label = std::max(max_label, label);
    max_domain = std::max(max_domain, domain);
    samples.push_back(std::move(s));
  }
  if (samples.empty()) fail(source_name, line_no, "no samples");

  const std::size_t k = declared_classes ? declared_classes : static_cast<std::size_t>(max_label + 1);
  const std::size_t n = declared_domains ? declared_domains : static_cast<std::size_t>(max_domain + 1);
  try {
    return DomainDataset(dim, k, n, std::move(samples));
  } catch (const DataError& e) {
    throw ParseError(source_name + ": " + e.what());
  }
}

void write_csv(const DomainDataset& ds, std::ostream& out) {
  out << kMetaPrefix << " num_classes=" << ds.num_classes() << " num_domains=" << ds.num_domains()
      << "\n";
  out << "domain,label";
  for (std::size_t j = 0; j < ds.feature_dim(); ++j) out << ",f" << j;
  out << "\n";
  char buf[64];
  for (const auto& s : ds.samples()) {
    out << s.domain << ',' << s.label;
    for (double v : s.x) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

DomainDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_csv(in, path.string());
}

void save_csv(const DomainDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(ds, out);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ddian::data
