/*
 * Copyright 2026 The Operon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "operon/nn/linalg.hpp"

#include <fmt/format.h>

#include "operon/errors.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace operon::nn {

namespace {

using Index = Eigen::Index;

#if defined(__AVX2__)

constexpr Index kTileRows = 6;
constexpr Index kTileCols = 8;

template <int Rows, bool Masked>
inline void tile(const double* a, Index lda, const double* b, Index ldb, double* c, Index ldc, Index depth,
                 __m256i lo_mask, __m256i hi_mask) {
  __m256d lo[Rows];
  __m256d hi[Rows];
  for (int r = 0; r < Rows; ++r) {
    lo[r] = _mm256_setzero_pd();
    hi[r] = _mm256_setzero_pd();
  }
  for (Index k = 0; k < depth; ++k) {
    __m256d b_lo;
    __m256d b_hi;
    if constexpr (Masked) {
      b_lo = _mm256_maskload_pd(b + k * ldb, lo_mask);
      b_hi = _mm256_maskload_pd(b + k * ldb + 4, hi_mask);
    } else {
      b_lo = _mm256_loadu_pd(b + k * ldb);
      b_hi = _mm256_loadu_pd(b + k * ldb + 4);
    }
    for (int r = 0; r < Rows; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * lda + k);
      lo[r] = _mm256_add_pd(lo[r], _mm256_mul_pd(av, b_lo));
      hi[r] = _mm256_add_pd(hi[r], _mm256_mul_pd(av, b_hi));
    }
  }
  for (int r = 0; r < Rows; ++r) {
    if constexpr (Masked) {
      _mm256_maskstore_pd(c + r * ldc, lo_mask, lo[r]);
      _mm256_maskstore_pd(c + r * ldc + 4, hi_mask, hi[r]);
    } else {
      _mm256_storeu_pd(c + r * ldc, lo[r]);
      _mm256_storeu_pd(c + r * ldc + 4, hi[r]);
    }
  }
}

template <bool Masked>
void panel(const double* a, Index lda, const double* b, Index ldb, double* c, Index ldc, Index rows, Index depth,
           __m256i lo_mask, __m256i hi_mask) {
  Index i = 0;
  for (; i + kTileRows <= rows; i += kTileRows) {
    tile<kTileRows, Masked>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, depth, lo_mask, hi_mask);
  }
  for (; i < rows; ++i) tile<1, Masked>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, depth, lo_mask, hi_mask);
}

void kernel(const double* a, Index lda, const double* b, Index ldb, double* c, Index ldc, Index rows, Index cols,
            Index depth) {
  const __m256i all = _mm256_set1_epi64x(-1);
  Index j = 0;
  for (; j + kTileCols <= cols; j += kTileCols) panel<false>(a, lda, b + j, ldb, c + j, ldc, rows, depth, all, all);
  const Index rem = cols - j;
  if (rem > 0) {
    alignas(32) long long mask[kTileCols];
    for (Index q = 0; q < kTileCols; ++q) mask[q] = q < rem ? -1 : 0;
    panel<true>(a, lda, b + j, ldb, c + j, ldc, rows, depth,
                _mm256_load_si256(reinterpret_cast<const __m256i*>(mask)),
                _mm256_load_si256(reinterpret_cast<const __m256i*>(mask + 4)));
  }
}

#else

void kernel(const double* a, Index lda, const double* b, Index ldb, double* c, Index ldc, Index rows, Index cols,
            Index depth) {
  for (Index i = 0; i < rows; ++i) {
    double* out = c + i * ldc;
    for (Index j = 0; j < cols; ++j) out[j] = 0.0;
    for (Index k = 0; k < depth; ++k) {
      const double av = a[i * lda + k];
      const double* brow = b + k * ldb;
      for (Index j = 0; j < cols; ++j) out[j] += av * brow[j];
    }
  }
}

#endif

}  // namespace

void matmul_rowwise(Eigen::Ref<const RowMatrix> a, Eigen::Ref<const RowMatrix> b, Eigen::Ref<RowMatrix> c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw DimensionError(fmt::format("matmul [{}x{}]*[{}x{}] into [{}x{}]", a.rows(), a.cols(), b.rows(), b.cols(),
                                     c.rows(), c.cols()));
  }
  if (a.rows() == 0 || b.cols() == 0) return;
  kernel(a.data(), a.outerStride(), b.data(), b.outerStride(), c.data(), c.outerStride(), a.rows(), b.cols(),
         a.cols());
}

}  // namespace operon::nn
