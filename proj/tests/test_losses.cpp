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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ddian/error.hpp"
#include "ddian/losses.hpp"
#include "test_util.hpp"

using namespace ddian;
using ad::Graph;
using ad::Tensor;
using ddian::testing::max_rel_error;
using ddian::testing::numeric_grad;
using ddian::testing::random_matrix;

namespace {

nn::Mlp linear(Matrix w, Matrix b) {
  return nn::Mlp({nn::LinearLayer{Tensor::parameter(std::move(w)), Tensor::parameter(std::move(b))}});
}

// -log softmax(z)[y], written directly.
double ce(const std::vector<double>& z, int y) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double s = 0;
  for (double v : z) s += std::exp(v - mx);
  return -(z[y] - mx - std::log(s));
}

}  // namespace

TEST(ClassificationLoss, Values) {
  Graph g;
  const int y0[] = {0};
  EXPECT_NEAR(loss::classification_loss(g, Tensor::constant({{0, 0}}), y0).item(), std::log(2.0), 1e-9);
  EXPECT_NEAR(loss::classification_loss(g, Tensor::constant({{1000, 0}}), y0).item(), 0.0, 1e-12);
  const int y2[] = {0, 1};
  const double two = loss::classification_loss(g, Tensor::constant({{1, 2}, {0.5, -1}}), y2).item();
  EXPECT_NEAR(two, 0.5 * (ce({1, 2}, 0) + ce({0.5, -1}, 1)), 1e-12);
}

TEST(ClassificationLoss, LabelOutOfRangeNamesRow) {
  Graph g;
  const int y[] = {0, 5};
  try {
    loss::classification_loss(g, Tensor::constant({{0, 0}, {0, 0}}), y);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(GlobalDomainLoss, UniformDiscriminatorIsLn3) {
  Graph g;
  auto disc = linear(Matrix(2, 3), Matrix(1, 3));
  const int d[] = {0, 2};
  auto l = loss::global_domain_loss(g, Tensor::constant({{1, 2}, {3, 4}}), disc, d, 0.5);
  EXPECT_NEAR(l.item(), std::log(3.0), 1e-9);
}

TEST(GlobalDomainLoss, PerfectDiscriminatorIsZero) {
  Graph g;
  auto disc = linear(Matrix(2, 3), Matrix({{1000, 0, 0}}));
  const int d[] = {0};
  EXPECT_NEAR(loss::global_domain_loss(g, Tensor::constant({{1, 1}}), disc, d, 1.0).item(), 0.0, 1e-12);
  const int bad[] = {3};
  EXPECT_THROW(loss::global_domain_loss(g, Tensor::constant({{1, 1}}), disc, bad, 1.0), DataError);
  EXPECT_THROW(loss::global_domain_loss(g, Tensor::constant({{1, 1}}), disc, d, -1.0), ParameterError);
}

TEST(GlobalDomainLoss, FeatureGradientIsReversed) {
  std::mt19937_64 rng(2);
  auto disc = linear(random_matrix(3, 3, rng), random_matrix(1, 3, rng));
  const Matrix fv = random_matrix(4, 3, rng);
  const int d[] = {0, 1, 2, 1};
  auto grad_at = [&](double lambda) {
    Graph g;
    auto f = Tensor::parameter(fv);
    g.backward(loss::global_domain_loss(g, f, disc, d, lambda));
    return f.grad();
  };
  const Matrix plain = grad_at(1.0), scaled = grad_at(0.4);
  // Without reversal the gradient would be -plain; with lambda it is -lambda * that.
  for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_NEAR(scaled[i], 0.4 * plain[i], 1e-15);
  Graph g;
  auto f = Tensor::parameter(fv);
  auto logits = disc.forward(g, f);
  g.backward(loss::classification_loss(g, logits, d));
  for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_NEAR(plain[i], -f.grad()[i], 1e-15);
}

TEST(LocalDomainLoss, SingleClassEqualsGlobal) {
  std::mt19937_64 rng(3);
  std::vector<nn::Mlp> heads{linear(random_matrix(2, 3, rng), random_matrix(1, 3, rng))};
  const Matrix fv = random_matrix(3, 2, rng);
  const int d[] = {2, 0, 1};
  Graph g;
  const double local =
      loss::local_domain_loss(g, Tensor::constant(fv), Matrix(3, 1, 1.0), heads, d, 0.3).item();
  const double global = loss::global_domain_loss(g, Tensor::constant(fv), heads[0], d, 0.3).item();
  EXPECT_NEAR(local, global, 1e-15);
}

TEST(LocalDomainLoss, OneHotSelectsOneHead) {
  std::mt19937_64 rng(4);
  std::vector<nn::Mlp> heads;
  for (int k = 0; k < 3; ++k) heads.push_back(linear(random_matrix(2, 2, rng), random_matrix(1, 2, rng)));
  const Matrix fv{{0.3, -1.2}};
  const Matrix probs{{0, 0, 1}};
  const int d[] = {1};
  Graph g;
  auto f = Tensor::parameter(fv);
  g.backward(loss::local_domain_loss(g, f, probs, heads, d, 1.0));
  const double expect = loss::global_domain_loss(g, Tensor::constant(fv), heads[2], d, 1.0).item();
  Graph h;
  const double got = loss::local_domain_loss(h, Tensor::constant(fv), probs, heads, d, 1.0).item();
  EXPECT_NEAR(got, expect, 1e-15);
  for (int k = 0; k < 2; ++k)
    for (const auto& p : heads[k].parameters())
      for (double v : p.grad().span()) EXPECT_EQ(v, 0.0);
  double touched = 0;
  for (const auto& p : heads[2].parameters())
    for (double v : p.grad().span()) touched += std::abs(v);
  EXPECT_GT(touched, 0.0);
}

TEST(LocalDomainLoss, BruteForceM2K2) {
  const Matrix w0{{0.5, -0.2}, {0.1, 0.3}}, b0{{0.05, -0.1}};
  const Matrix w1{{-0.4, 0.6}, {0.2, 0.2}}, b1{{0.0, 0.2}};
  std::vector<nn::Mlp> heads{linear(w0, b0), linear(w1, b1)};
  const Matrix f{{1.0, 2.0}, {-0.5, 0.7}};
  const Matrix p{{0.8, 0.2}, {0.35, 0.65}};
  const int d[] = {1, 0};

  double expect = 0;
  const Matrix* ws[] = {&w0, &w1};
  const Matrix* bs[] = {&b0, &b1};
  for (int k = 0; k < 2; ++k) {
    double mean = 0;
    for (int i = 0; i < 2; ++i) {
      std::vector<double> z(2);
      for (int o = 0; o < 2; ++o) {
        z[o] = (*bs[k])(0, o);
        for (int c = 0; c < 2; ++c) z[o] += p(i, k) * f(i, c) * (*ws[k])(c, o);
      }
      mean += p(i, k) * ce(z, d[i]) / 2.0;
    }
    expect += mean;
  }
  Graph g;
  EXPECT_NEAR(loss::local_domain_loss(g, Tensor::constant(f), p, heads, d, 1.0).item(), expect, 1e-12);
}

TEST(LocalDomainLoss, RejectsNonSimplexRows) {
  std::vector<nn::Mlp> heads{linear(Matrix(2, 2), Matrix(1, 2)), linear(Matrix(2, 2), Matrix(1, 2))};
  const int d[] = {0};
  Graph g;
  EXPECT_THROW(loss::local_domain_loss(g, Tensor::constant({{1, 1}}), Matrix({{0.6, 0.6}}), heads, d, 1.0),
               ContractError);
  EXPECT_THROW(loss::local_domain_loss(g, Tensor::constant({{1, 1}}), Matrix({{1.2, -0.2}}), heads, d, 1.0),
               ContractError);
  EXPECT_NO_THROW(loss::check_simplex(Matrix({{0.5, 0.50005}})));
}

TEST(CenterLoss, ValuesAndCenterGradient) {
  Graph g;
  const int y[] = {0};
  EXPECT_NEAR(loss::center_loss(g, Tensor::constant({{2, 0}}), Tensor::constant({{0, 0}, {5, 5}}), y).item(),
              2.0, 1e-9);
  const int y2[] = {1, 0};
  EXPECT_EQ(loss::center_loss(g, Tensor::constant({{5, 5}, {0, 0}}), Tensor::constant({{0, 0}, {5, 5}}), y2)
                .item(),
            0.0);

  std::mt19937_64 rng(5);
  const Matrix fv = random_matrix(4, 3, rng);
  Matrix cv = random_matrix(2, 3, rng);
  const int labels[] = {1, 0, 1, 1};
  Graph h;
  auto c = Tensor::parameter(cv);
  h.backward(loss::center_loss(h, Tensor::constant(fv), c, labels));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 3; ++j) {
      double expect = 0;
      for (std::size_t i = 0; i < 4; ++i)
        if (labels[i] == static_cast<int>(k)) expect -= fv(i, j) - cv(k, j);
      EXPECT_NEAR(c.grad()(k, j), expect, 1e-12);
    }
  auto value = [&] {
    Graph q;
    return loss::center_loss(q, Tensor::constant(fv), Tensor::constant(cv), labels).item();
  };
  EXPECT_LT(max_rel_error(c.grad(), numeric_grad(cv, value)), 1e-4);
  const int bad[] = {0, 0, 2, 0};
  EXPECT_THROW(loss::center_loss(h, Tensor::constant(fv), c, bad), DataError);
}

TEST(DiscriminativeLoss, Values) {
  Graph g;
  const int y0[] = {0};
  EXPECT_NEAR(loss::discriminative_loss(g, Tensor::constant({{0, 0}}), Tensor::constant({{1, 0}, {0, 1}}),
                                        y0, 0.01)
                  .item(),
              0.5 / 1.01, 1e-9);
  EXPECT_NEAR(0.5 / 1.01, 0.495050, 1e-6);
  const int y1[] = {1};
  const double k3 = loss::discriminative_loss(g, Tensor::constant({{1, 1}}),
                                              Tensor::constant({{1, 1}, {0, 0}, {2, 2}}), y1, 0.01)
                        .item();
  EXPECT_NEAR(k3, 0.5 * 2 / 2.01, 1e-9);
  EXPECT_NEAR(k3, 0.497512, 1e-6);
  EXPECT_EQ(loss::discriminative_loss(g, Tensor::constant({{0, 1}}), Tensor::constant({{1, 0}, {0, 1}}), y1,
                                      0.01)
                .item(),
            0.0);
}

TEST(DiscriminativeLoss, ErrorPaths) {
  Graph g;
  const int y[] = {0};
  EXPECT_THROW(loss::discriminative_loss(g, Tensor::constant({{0, 0}}), Tensor::constant({{1, 0}}), y, 0.01),
               ConfigError);
  EXPECT_THROW(
      loss::discriminative_loss(g, Tensor::constant({{0, 0}}), Tensor::constant({{1, 0}, {0, 1}}), y, 0.0),
      ConfigError);
}

TEST(DiscriminativeLoss, TranslationInvariant) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 20; ++t) {
    Matrix f = random_matrix(4, 3, rng), c = random_matrix(3, 3, rng);
    const Matrix shift = random_matrix(1, 3, rng, 5.0);
    const int y[] = {0, 2, 1, 2};
    Graph g;
    const double base = loss::discriminative_loss(g, Tensor::constant(f), Tensor::constant(c), y, 1e-3).item();
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t j = 0; j < 3; ++j) f(i, j) += shift(0, j);
    for (std::size_t i = 0; i < c.rows(); ++i)
      for (std::size_t j = 0; j < 3; ++j) c(i, j) += shift(0, j);
    EXPECT_NEAR(loss::discriminative_loss(g, Tensor::constant(f), Tensor::constant(c), y, 1e-3).item(), base,
                1e-9);
  }
}

TEST(DiscriminativeLoss, GradientsReachFeaturesAndCenters) {
  std::mt19937_64 rng(7);
  Matrix fv = random_matrix(4, 2, rng), cv = random_matrix(3, 2, rng);
  const int y[] = {2, 0, 1, 0};
  Graph g;
  auto f = Tensor::parameter(fv), c = Tensor::parameter(cv);
  g.backward(loss::discriminative_loss(g, f, c, y, 1e-3));
  auto value = [&] {
    Graph h;
    return loss::discriminative_loss(h, Tensor::constant(fv), Tensor::constant(cv), y, 1e-3).item();
  };
  EXPECT_LT(max_rel_error(f.grad(), numeric_grad(fv, value)), 1e-4);
  EXPECT_LT(max_rel_error(c.grad(), numeric_grad(cv, value)), 1e-4);
}

TEST(TotalObjective, WeightedSum) {
  Graph g;
  loss::LossTerms t{Tensor::constant({{1.0}}), Tensor::constant({{0.6}}), Tensor::constant({{0.4}}),
                    Tensor::constant({{0.2}})};
  loss::HyperParams hp;
  auto [total, b] = loss::total_objective(g, t, hp);
  EXPECT_NEAR(total.item(), 1.7, 1e-9);
  EXPECT_EQ(b.l_cls, 1.0);
  EXPECT_EQ(b.l_dm, 0.6);
  EXPECT_EQ(b.l_dc, 0.4);
  EXPECT_EQ(b.l_dis, 0.2);
  EXPECT_NEAR(b.total, b.l_cls + hp.beta * b.l_dc + hp.gamma * b.l_dm + hp.alpha * b.l_dis, 1e-12);

  hp.alpha = hp.beta = hp.gamma = 0;
  EXPECT_EQ(loss::total_objective(g, t, hp).first.item(), 1.0);
  EXPECT_THROW(loss::total_objective(g, loss::LossTerms{}, hp), ContractError);
}

TEST(HyperParams, Validation) {
  loss::HyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  for (auto mutate : std::vector<void (*)(loss::HyperParams&)>{
           [](loss::HyperParams& h) { h.alpha = -1; }, [](loss::HyperParams& h) { h.phi = 0; },
           [](loss::HyperParams& h) { h.batch_size = 0; }, [](loss::HyperParams& h) { h.momentum = 1.0; }}) {
    loss::HyperParams bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), ConfigError);
  }
}

TEST(Losses, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const Matrix f = random_matrix(4, 3, rng, 3.0), c = random_matrix(3, 3, rng);
    const int y[] = {0, 1, 2, 1};
    const int d[] = {2, 2, 0, 1};
    auto disc = linear(random_matrix(3, 3, rng, 3.0), random_matrix(1, 3, rng));
    std::vector<nn::Mlp> heads;
    for (int k = 0; k < 3; ++k) heads.push_back(linear(random_matrix(3, 3, rng), random_matrix(1, 3, rng)));
    Graph g;
    const Matrix probs = loss::softmax_rows(random_matrix(4, 3, rng));
    EXPECT_GE(loss::classification_loss(g, Tensor::constant(f), y).item(), 0.0);
    EXPECT_GE(loss::global_domain_loss(g, Tensor::constant(f), disc, d, 1.0).item(), 0.0);
    EXPECT_GE(loss::local_domain_loss(g, Tensor::constant(f), probs, heads, d, 1.0).item(), 0.0);
    EXPECT_GE(loss::center_loss(g, Tensor::constant(f), Tensor::constant(c), y).item(), 0.0);
    EXPECT_GE(loss::discriminative_loss(g, Tensor::constant(f), Tensor::constant(c), y, 1e-3).item(), 0.0);
  }
}

// A feature-extractor step on the reversed domain loss, with the discriminator
// frozen, should not make the discriminator more accurate.
TEST(Adversarial, ExtractorStepDoesNotHelpDiscriminator) {
  int satisfied = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    std::mt19937_64 rng(100 + trial);
    const std::size_t fdims[] = {3, 6, 4};
    const std::size_t gdims[] = {4, 5, 3};
    auto feat = nn::init_params(fdims, 2 * trial);
    auto disc = nn::init_params(gdims, 2 * trial + 1);
    const Matrix x = random_matrix(8, 3, rng);
    const int d[] = {0, 1, 2, 0, 1, 2, 0, 1};
    auto disc_ce = [&] {
      Graph g;
      auto logits = disc.forward(g, feat.forward(g, Tensor::constant(x)));
      return loss::classification_loss(g, logits, d).item();
    };
    const double before = disc_ce();
    Graph g;
    auto f = feat.forward(g, Tensor::constant(x));
    g.backward(loss::global_domain_loss(g, f, disc, d, 1.0));
    nn::ParamSet ps;
    ps.add(feat);
    nn::SgdMomentum opt(ps, 0.05, 0.0);
    opt.step();
    if (disc_ce() >= before) ++satisfied;
  }
  EXPECT_GE(satisfied, 15);
}

TEST(Helpers, SoftmaxAndOneHot) {
  const Matrix p = loss::softmax_rows(Matrix({{0, 0}, {1000, 0}}));
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(1, 0), 1.0);
  const int y[] = {2, 0};
  EXPECT_EQ(loss::one_hot(y, 3), Matrix({{0, 0, 1}, {1, 0, 0}}));
}
