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

#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "ddian/error.hpp"
#include "ddian/simd/kernels.hpp"

namespace ddian::simd {

#if defined(DDIAN_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(DDIAN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend default_backend() {
  if (const char* env = std::getenv("DDIAN_SIMD")) {
    if (auto b = parse_backend(env); b && backend_available(*b)) return *b;
  }
  return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

struct Active {
  std::atomic<Backend> backend{default_backend()};
};

Active& active() {
  static Active a;
  return a;
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels_for(Backend b) {
  if (!backend_available(b))
    throw ContractError("SIMD backend '" + std::string(backend_name(b)) + "' is not available");
#if defined(DDIAN_HAVE_AVX2)
  if (b == Backend::kAvx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& kernels() { return kernels_for(active().backend.load(std::memory_order_relaxed)); }

Backend active_backend() { return active().backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  kernels_for(b);  // validates availability
  active().backend.store(b, std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  return std::nullopt;
}

void gemm_nt(const KernelTable& kt, const double* g, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
  // bt[n x k] = b^T
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  kt.gemm_nn(g, bt.data(), c, m, n, k);
}

}  // namespace ddian::simd
