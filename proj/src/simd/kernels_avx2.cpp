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

// Compiled with -mavx2 only (no -mfma): each lane performs the same multiply
// and add sequence as the scalar reference.
#include <immintrin.h>

#include "ddian/simd/kernels.hpp"

namespace ddian::simd {
namespace {

constexpr std::size_t kLanes = 4;

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <typename VecOp, typename ScalarOp>
inline void binary(const double* a, const double* b, double* out, std::size_t n, VecOp vop,
                   ScalarOp sop) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(out + i, vop(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = sop(a[i], b[i]);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  binary(
      a, b, out, n, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
      [](double x, double y) { return x + y; });
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  binary(
      a, b, out, n, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
      [](double x, double y) { return x - y; });
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  binary(
      a, b, out, n, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
      [](double x, double y) { return x * y; });
}

void scale(double s, const double* x, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}

// Masking with an ordered compare maps NaN and -0.0 to +0.0, like the scalar branch.
void relu_forward(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_and_pd(mask, v));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* gx, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d passed = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), passed));
  }
  for (; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0 ? g[i] : 0.0);
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, crow, n);
  }
}

void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], grow, c + p * n, n);
  }
}

void momentum_update(double mu, double lr, const double* g, double* v, double* p,
                     std::size_t n) {
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vlr = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m256d decayed = _mm256_mul_pd(vmu, _mm256_loadu_pd(v + i));
    __m256d step = _mm256_mul_pd(vlr, _mm256_loadu_pd(g + i));
    __m256d nv = _mm256_sub_pd(decayed, step);
    _mm256_storeu_pd(v + i, nv);
    _mm256_storeu_pd(p + i, _mm256_add_pd(_mm256_loadu_pd(p + i), nv));
  }
  for (; i < n; ++i) {
    v[i] = mu * v[i] - lr * g[i];
    p[i] = p[i] + v[i];
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{axpy,         add,           sub,     mul,     scale,
                                 relu_forward, relu_backward, gemm_nn, gemm_tn, momentum_update};
  return table;
}

}  // namespace ddian::simd
