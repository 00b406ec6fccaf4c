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

#include <cstddef>
#include <optional>
#include <string_view>

// Data-parallel inner loops used by the autodiff engine and the optimizer.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variants vectorize across independent output elements and keep
// the per-element operation order of the scalar loops (no FMA, no reordered
// reductions), so results are bit-identical whichever table is active.
//
// Pointers follow BLAS-like conventions: row-major, leading dimension equal to
// the column count, output buffers must not alias inputs unless noted.

namespace ddian::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a[i] + b[i]; out may alias a or b.
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] = s * x[i]; out may alias x.
  void (*scale)(double s, const double* x, double* out, std::size_t n);
  // out[i] = x[i] > 0 ? x[i] : 0
  void (*relu_forward)(const double* x, double* out, std::size_t n);
  // gx[i] += x[i] > 0 ? g[i] : 0
  void (*relu_backward)(const double* x, const double* g, double* gx, std::size_t n);
  // c[m x n] += a[m x k] * b[k x n], accumulated over k in ascending order.
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // c[k x n] += a[m x k]^T * g[m x n], accumulated over m in ascending order.
  void (*gemm_tn)(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // v = mu * v - lr * g; p = p + v
  void (*momentum_update)(double mu, double lr, const double* g, double* v, double* p,
                          std::size_t n);
};

const KernelTable& scalar_kernels();

// True when the variant was compiled in and the running CPU supports it.
bool backend_available(Backend b);

// Table for a specific backend; throws ddian::ContractError if unavailable.
const KernelTable& kernels_for(Backend b);

// Active table. Chosen on first use: DDIAN_SIMD=scalar|avx2 if set, otherwise
// the widest backend the CPU supports.
const KernelTable& kernels();
Backend active_backend();

// Overrides the runtime choice for the rest of the process (tests, benchmarks).
void set_backend(Backend b);

std::string_view backend_name(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

// c[m x k] += g[m x n] * b[k x n]^T, built from a transpose and gemm_nn.
void gemm_nt(const KernelTable& kt, const double* g, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k);

}  // namespace ddian::simd
