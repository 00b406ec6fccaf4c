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

#include <cstring>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ddian/simd/kernels.hpp"

using namespace ddian::simd;

namespace {

std::vector<double> rand_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  // exercise the relu boundary too
  if (n > 2) v[n / 2] = 0.0;
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!backend_available(Backend::kAvx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const KernelTable& s = scalar_kernels();
  const KernelTable& v = kernels_for(Backend::kAvx2);
  std::mt19937_64 rng{42};
};

}  // namespace

TEST_F(SimdEquivalence, Elementwise) {
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1001u}) {
    const auto a = rand_vec(n, rng), b = rand_vec(n, rng);
    for (int op = 0; op < 4; ++op) {
      std::vector<double> o1(n), o2(n);
      auto f = op == 0 ? s.add : op == 1 ? s.sub : s.mul;
      auto g = op == 0 ? v.add : op == 1 ? v.sub : v.mul;
      if (op == 3) {
        s.scale(-1.7, a.data(), o1.data(), n);
        v.scale(-1.7, a.data(), o2.data(), n);
      } else {
        f(a.data(), b.data(), o1.data(), n);
        g(a.data(), b.data(), o2.data(), n);
      }
      EXPECT_TRUE(bit_equal(o1, o2)) << "op " << op << " n " << n;
    }
    auto y1 = b, y2 = b;
    s.axpy(0.3, a.data(), y1.data(), n);
    v.axpy(0.3, a.data(), y2.data(), n);
    EXPECT_TRUE(bit_equal(y1, y2));
  }
}

TEST_F(SimdEquivalence, Relu) {
  for (std::size_t n : {1u, 5u, 9u, 100u}) {
    const auto x = rand_vec(n, rng), g = rand_vec(n, rng), gx0 = rand_vec(n, rng);
    std::vector<double> o1(n), o2(n);
    s.relu_forward(x.data(), o1.data(), n);
    v.relu_forward(x.data(), o2.data(), n);
    EXPECT_TRUE(bit_equal(o1, o2));
    auto g1 = gx0, g2 = gx0;
    s.relu_backward(x.data(), g.data(), g1.data(), n);
    v.relu_backward(x.data(), g.data(), g2.data(), n);
    EXPECT_TRUE(bit_equal(g1, g2));
  }
}

TEST_F(SimdEquivalence, Gemm) {
  for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                         {3, 4, 2}, {5, 7, 9}, {32, 16, 3}, {4, 33, 17}}) {
    const auto a = rand_vec(m * k, rng), b = rand_vec(k * n, rng), c0 = rand_vec(m * n, rng);
    auto c1 = c0, c2 = c0;
    s.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
    v.gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
    EXPECT_TRUE(bit_equal(c1, c2));

    const auto g = rand_vec(m * n, rng), d0 = rand_vec(k * n, rng);
    auto d1 = d0, d2 = d0;
    s.gemm_tn(a.data(), g.data(), d1.data(), m, k, n);
    v.gemm_tn(a.data(), g.data(), d2.data(), m, k, n);
    EXPECT_TRUE(bit_equal(d1, d2));

    std::vector<double> e1(m * k, 0.0), e2(m * k, 0.0);
    gemm_nt(s, g.data(), b.data(), e1.data(), m, n, k);
    gemm_nt(v, g.data(), b.data(), e2.data(), m, n, k);
    EXPECT_TRUE(bit_equal(e1, e2));
  }
}

TEST_F(SimdEquivalence, Momentum) {
  for (std::size_t n : {1u, 6u, 13u, 250u}) {
    const auto g = rand_vec(n, rng), v0 = rand_vec(n, rng), p0 = rand_vec(n, rng);
    auto v1 = v0, v2 = v0, p1 = p0, p2 = p0;
    s.momentum_update(0.9, 0.01, g.data(), v1.data(), p1.data(), n);
    v.momentum_update(0.9, 0.01, g.data(), v2.data(), p2.data(), n);
    EXPECT_TRUE(bit_equal(v1, v2));
    EXPECT_TRUE(bit_equal(p1, p2));
  }
}

TEST(SimdScalar, GemmMatchesNaive) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> b{1, 0, 0, 1, 1, 1};  // 3x2
  std::vector<double> c(4, 0.0);
  scalar_kernels().gemm_nn(a.data(), b.data(), c.data(), 2, 3, 2);
  EXPECT_EQ(c, (std::vector<double>{4, 5, 10, 11}));
}

TEST(SimdDispatch, NamesRoundTrip) {
  for (auto b : {Backend::kScalar, Backend::kAvx2})
    EXPECT_EQ(parse_backend(backend_name(b)), b);
  EXPECT_FALSE(parse_backend("neon").has_value());
  EXPECT_TRUE(backend_available(Backend::kScalar));
}
