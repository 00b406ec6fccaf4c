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

#include "ddian/model.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ddian/error.hpp"
#include "ddian/rng.hpp"

namespace ddian::model {

namespace {

constexpr char kMagic[4] = {'D', 'D', 'I', 'A'};
constexpr std::size_t kMaxWidth = 1u << 16;
constexpr std::size_t kMaxDepth = 64;

enum Stream : std::uint64_t { kFeature = 1, kClassifier, kGlobal, kCenters, kHeadBase = 100 };

std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden,
                               std::size_t out) {
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

std::vector<std::size_t> feature_dims(const ModelDims& d) {
  return chain(d.input_dim, d.feature_hidden, d.feature_dim);
}
std::vector<std::size_t> classifier_dims(const ModelDims& d) {
  return {d.feature_dim, d.num_classes};
}
std::vector<std::size_t> global_dims(const ModelDims& d) {
  return chain(d.feature_dim, d.global_hidden, d.num_domains);
}
std::vector<std::size_t> local_dims(const ModelDims& d) {
  return chain(d.feature_dim, d.local_hidden, d.num_domains);
}

void expect_dims(std::string_view what, const nn::Mlp& net, const std::vector<std::size_t>& want) {
  if (net.dims() != want)
    throw DimensionError(std::string(what) + " layer widths do not match the declared dimensions");
}

nn::Mlp clone_mlp(const nn::Mlp& net) {
  std::vector<nn::LinearLayer> layers;
  for (const auto& l : net.layers())
    layers.push_back({ad::Tensor::parameter(l.weight.value()), ad::Tensor::parameter(l.bias.value())});
  return nn::Mlp(std::move(layers));
}

// ---- little-endian encoding ----

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void widths(const std::vector<std::size_t>& w) {
    u32(static_cast<std::uint32_t>(w.size()));
    for (auto x : w) u32(static_cast<std::uint32_t>(x));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n)
      throw LoadError("model file truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t width(std::string_view what) {
    const std::uint32_t w = u32();
    if (w == 0 || w > kMaxWidth)
      throw LoadError("model file: implausible " + std::string(what) + " " + std::to_string(w));
    return w;
  }
  std::vector<std::size_t> widths(std::string_view what) {
    const std::uint32_t n = u32();
    if (n > kMaxDepth) throw LoadError("model file: implausible " + std::string(what) + " depth");
    std::vector<std::size_t> w;
    for (std::uint32_t i = 0; i < n; ++i) w.push_back(width(what));
    return w;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

nn::Mlp read_mlp(Reader& r, const std::vector<std::size_t>& dims) {
  std::vector<nn::LinearLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Matrix w(dims[i], dims[i + 1]);
    for (double& v : w.span()) v = r.f64();
    Matrix b(1, dims[i + 1]);
    for (double& v : b.span()) v = r.f64();
    layers.push_back({ad::Tensor::parameter(std::move(w)), ad::Tensor::parameter(std::move(b))});
  }
  return nn::Mlp(std::move(layers));
}

std::size_t mlp_param_count(const std::vector<std::size_t>& dims) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) n += dims[i] * dims[i + 1] + dims[i + 1];
  return n;
}

}  // namespace

void ModelDims::validate() const {
  auto positive = [](std::size_t v) { return v >= 1 && v <= kMaxWidth; };
  if (!positive(input_dim) || !positive(feature_dim))
    throw ConfigError("model: input_dim and feature_dim must be in [1, 65536]");
  if (num_classes < 2 || num_classes > kMaxWidth) throw ConfigError("model: need at least 2 classes");
  if (num_domains < 2 || num_domains > kMaxWidth)
    throw ConfigError("model: need at least 2 source domains");
  for (const auto* w : {&feature_hidden, &global_hidden, &local_hidden}) {
    if (w->size() > kMaxDepth) throw ConfigError("model: too many hidden layers");
    if (!std::all_of(w->begin(), w->end(), positive))
      throw ConfigError("model: hidden widths must be in [1, 65536]");
  }
}

DdianModel::DdianModel(ModelDims dims, loss::HyperParams hp, nn::Mlp feature, nn::Mlp classifier,
                       nn::Mlp global_disc, std::vector<nn::Mlp> local_heads, ad::Tensor centers)
    : dims_(std::move(dims)),
      hp_(hp),
      feature_(std::move(feature)),
      classifier_(std::move(classifier)),
      global_disc_(std::move(global_disc)),
      local_heads_(std::move(local_heads)),
      centers_(std::move(centers)) {
  dims_.validate();
  expect_dims("feature extractor", feature_, feature_dims(dims_));
  expect_dims("classifier", classifier_, classifier_dims(dims_));
  expect_dims("global discriminator", global_disc_, global_dims(dims_));
  if (local_heads_.size() != dims_.num_classes)
    throw DimensionError("expected one local discriminator per class");
  for (const auto& h : local_heads_) expect_dims("local discriminator", h, local_dims(dims_));
  if (centers_.rows() != dims_.num_classes || centers_.cols() != dims_.feature_dim)
    throw DimensionError("centers must be " + shape_string(dims_.num_classes, dims_.feature_dim) +
                         ", got " + shape_string(centers_.value()));
}

DdianModel DdianModel::create(const ModelDims& dims, const loss::HyperParams& hp,
                              std::uint64_t seed) {
  dims.validate();
  std::vector<nn::Mlp> heads;
  for (std::size_t k = 0; k < dims.num_classes; ++k)
    heads.push_back(nn::init_params(local_dims(dims), derive_seed(seed, kHeadBase + k)));

  Rng rng(derive_seed(seed, kCenters));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(dims.num_classes, dims.feature_dim);
  for (double& v : centers.span()) v = 0.1 * normal(rng);

  return DdianModel(dims, hp, nn::init_params(feature_dims(dims), derive_seed(seed, kFeature)),
                    nn::init_params(classifier_dims(dims), derive_seed(seed, kClassifier)),
                    nn::init_params(global_dims(dims), derive_seed(seed, kGlobal)),
                    std::move(heads), ad::Tensor::parameter(std::move(centers)));
}

DdianModel DdianModel::clone() const {
  std::vector<nn::Mlp> heads;
  for (const auto& h : local_heads_) heads.push_back(clone_mlp(h));
  return DdianModel(dims_, hp_, clone_mlp(feature_), clone_mlp(classifier_),
                    clone_mlp(global_disc_), std::move(heads),
                    ad::Tensor::parameter(centers_.value()));
}

std::vector<ad::Tensor> DdianModel::parameters() const {
  std::vector<ad::Tensor> out;
  auto append = [&](const nn::Mlp& m) {
    auto p = m.parameters();
    out.insert(out.end(), p.begin(), p.end());
  };
  append(feature_);
  append(classifier_);
  append(global_disc_);
  for (const auto& h : local_heads_) append(h);
  out.push_back(centers_);
  return out;
}

nn::ParamSet DdianModel::param_set() const {
  nn::ParamSet set;
  set.add(feature_, 1.0);
  set.add(classifier_, kHeadLrMultiplier);
  set.add(global_disc_, kHeadLrMultiplier);
  for (const auto& h : local_heads_) set.add(h, kHeadLrMultiplier);
  set.add(centers_, kHeadLrMultiplier);
  return set;
}

ForwardOutputs forward_all(ad::Graph& g, const DdianModel& model, const ad::Tensor& x,
                           double lambda, const ForwardOptions& opts) {
  ForwardOutputs out;
  out.features = model.feature_extractor().forward(g, x);
  out.class_logits = model.classifier().forward(g, out.features);
  out.class_probs = loss::softmax_rows(out.class_logits.value());
  if (opts.global)
    out.global_domain_logits =
        model.global_discriminator().forward(g, g.grad_reverse(out.features, lambda));
  if (opts.local) {
    if (opts.gate == LocalGate::kHard) {
      if (opts.labels.size() != x.rows())
        throw ContractError("forward_all: hard local gating needs one label per row");
      out.local_gate = loss::one_hot(opts.labels, model.dims().num_classes);
    } else {
      out.local_gate = out.class_probs;
    }
    out.local_domain_logits =
        loss::local_head_logits(g, out.features, out.local_gate, model.local_heads(), lambda);
  }
  return out;
}

int argmax(std::span<const double> row) {
  return static_cast<int>(std::distance(row.begin(), std::max_element(row.begin(), row.end())));
}

std::vector<int> predict(const DdianModel& model, const Matrix& x) {
  ad::Graph g;
  ad::Tensor logits =
      model.classifier().forward(g, model.feature_extractor().forward(g, ad::Tensor::constant(x)));
  std::vector<int> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = argmax(logits.value().row(r));
  return out;
}

std::vector<std::uint8_t> serialize(const DdianModel& model) {
  const auto& d = model.dims();
  const auto& hp = model.hyper();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(d.input_dim));
  w.widths(d.feature_hidden);
  w.u32(static_cast<std::uint32_t>(d.feature_dim));
  w.u32(static_cast<std::uint32_t>(d.num_classes));
  w.u32(static_cast<std::uint32_t>(d.num_domains));
  w.widths(d.global_hidden);
  w.widths(d.local_hidden);
  for (double v : {hp.alpha, hp.beta, hp.gamma, hp.phi, hp.momentum, hp.eta0}) w.f64(v);
  w.u64(hp.batch_size);
  w.u64(hp.epochs);
  std::uint64_t count = 0;
  const auto params = model.parameters();
  for (const auto& p : params) count += p.value().size();
  w.u64(count);
  for (const auto& p : params)
    for (double v : p.value().span()) w.f64(v);
  return w.take();
}

DdianModel deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw LoadError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw LoadError("unsupported model format version " + std::to_string(version) + " (expected " +
                    std::to_string(kFormatVersion) + ")");
  ModelDims d;
  d.input_dim = r.width("input_dim");
  d.feature_hidden = r.widths("feature hidden width");
  d.feature_dim = r.width("feature_dim");
  d.num_classes = r.width("num_classes");
  d.num_domains = r.width("num_domains");
  d.global_hidden = r.widths("global hidden width");
  d.local_hidden = r.widths("local hidden width");
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("model file: inconsistent dimensions: ") + e.what());
  }
  loss::HyperParams hp;
  hp.alpha = r.f64();
  hp.beta = r.f64();
  hp.gamma = r.f64();
  hp.phi = r.f64();
  hp.momentum = r.f64();
  hp.eta0 = r.f64();
  hp.batch_size = r.u64();
  hp.epochs = r.u64();

  const std::uint64_t count = r.u64();
  const std::size_t expected = mlp_param_count(feature_dims(d)) +
                               mlp_param_count(classifier_dims(d)) +
                               mlp_param_count(global_dims(d)) +
                               d.num_classes * mlp_param_count(local_dims(d)) +
                               d.num_classes * d.feature_dim;
  if (count != expected)
    throw LoadError("model file: " + std::to_string(count) + " parameters but dimensions imply " +
                    std::to_string(expected));
  if (r.remaining() != expected * 8)
    throw LoadError(r.remaining() < expected * 8 ? "model file truncated in parameter payload"
                                                 : "model file has trailing bytes");

  nn::Mlp feature = read_mlp(r, feature_dims(d));
  nn::Mlp classifier = read_mlp(r, classifier_dims(d));
  nn::Mlp global = read_mlp(r, global_dims(d));
  std::vector<nn::Mlp> heads;
  for (std::size_t k = 0; k < d.num_classes; ++k) heads.push_back(read_mlp(r, local_dims(d)));
  Matrix centers(d.num_classes, d.feature_dim);
  for (double& v : centers.span()) v = r.f64();
  return DdianModel(d, hp, std::move(feature), std::move(classifier), std::move(global),
                    std::move(heads), ad::Tensor::parameter(std::move(centers)));
}

void save(const DdianModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move model file into place at " + path.string());
  }
}

DdianModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace ddian::model
