// Copyright 2026 The Gridcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <concepts>
#include <cstdint>
#include <cstring>

namespace gridcast {

// Row-major blocked matrix multiply kernels. Every output element is
// accumulated by a single thread in a fixed k-order, so results are
// bit-identical regardless of the number of OpenMP threads.

// C(M,N) = A(M,K) * B(K,N); accumulate adds into C instead of overwriting.
template <std::floating_point T>
void gemm_nn(std::int64_t M, std::int64_t N, std::int64_t K, const T* A, const T* B, T* C,
             bool accumulate = false) {
  constexpr std::int64_t RT = 4;  // row tile: one B row feeds RT output rows
#pragma omp parallel for schedule(static)
  for (std::int64_t i0 = 0; i0 < M; i0 += RT) {
    const std::int64_t rows = (i0 + RT <= M) ? RT : M - i0;
    if (!accumulate)
      std::memset(C + i0 * N, 0, static_cast<std::size_t>(rows * N) * sizeof(T));
    if (rows == RT) {
      T* c0 = C + (i0 + 0) * N;
      T* c1 = C + (i0 + 1) * N;
      T* c2 = C + (i0 + 2) * N;
      T* c3 = C + (i0 + 3) * N;
      for (std::int64_t k = 0; k < K; ++k) {
        const T* b = B + k * N;
        const T a0 = A[(i0 + 0) * K + k];
        const T a1 = A[(i0 + 1) * K + k];
        const T a2 = A[(i0 + 2) * K + k];
        const T a3 = A[(i0 + 3) * K + k];
        for (std::int64_t j = 0; j < N; ++j) {
          const T bj = b[j];
          c0[j] += a0 * bj;
          c1[j] += a1 * bj;
          c2[j] += a2 * bj;
          c3[j] += a3 * bj;
        }
      }
    } else {
      for (std::int64_t r = 0; r < rows; ++r) {
        T* c = C + (i0 + r) * N;
        for (std::int64_t k = 0; k < K; ++k) {
          const T a = A[(i0 + r) * K + k];
          const T* b = B + k * N;
          for (std::int64_t j = 0; j < N; ++j) c[j] += a * b[j];
        }
      }
    }
  }
}

// C(M,N) = A(K,M)^T * B(K,N).
template <std::floating_point T>
void gemm_tn(std::int64_t M, std::int64_t N, std::int64_t K, const T* A, const T* B, T* C,
             bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < M; ++i) {
    T* c = C + i * N;
    if (!accumulate) std::memset(c, 0, static_cast<std::size_t>(N) * sizeof(T));
    for (std::int64_t k = 0; k < K; ++k) {
      const T a = A[k * M + i];
      if (a == T{0}) continue;
      const T* b = B + k * N;
      for (std::int64_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

// C(M,N) = A(M,K) * B(N,K)^T.
template <std::floating_point T>
void gemm_nt(std::int64_t M, std::int64_t N, std::int64_t K, const T* A, const T* B, T* C,
             bool accumulate = false) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < M; ++i) {
    const T* a = A + i * K;
    T* c = C + i * N;
    for (std::int64_t j = 0; j < N; ++j) {
      const T* b = B + j * K;
      T acc{0};
      for (std::int64_t k = 0; k < K; ++k) acc += a[k] * b[k];
      if (accumulate)
        c[j] += acc;
      else
        c[j] = acc;
    }
  }
}

}  // namespace gridcast
