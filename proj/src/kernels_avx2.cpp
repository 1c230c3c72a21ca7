// Copyright 2026 The tlme Authors
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

// Compiled with -mavx2 only; reached through avx2_kernels() after a CPU check.

#include <immintrin.h>

#include "tlme/kernels.hpp"

namespace tlme::kernels::detail {
namespace {

static_assert(kLanes == 4, "one __m256d per component");

void expectation_avx2(int d, const double* m_re, const double* m_im, const double* psi_re,
                      const double* psi_im, double* out) {
  __m256d acc = _mm256_setzero_pd();
  for (int r = 0; r < d; ++r) {
    __m256d y_re = _mm256_setzero_pd();
    __m256d y_im = _mm256_setzero_pd();
    for (int c = 0; c < d; ++c) {
      const __m256d mr = _mm256_set1_pd(m_re[r * d + c]);
      const __m256d mi = _mm256_set1_pd(m_im[r * d + c]);
      const __m256d pr = _mm256_loadu_pd(psi_re + c * kLanes);
      const __m256d pi = _mm256_loadu_pd(psi_im + c * kLanes);
      y_re = _mm256_add_pd(y_re, _mm256_sub_pd(_mm256_mul_pd(mr, pr), _mm256_mul_pd(mi, pi)));
      y_im = _mm256_add_pd(y_im, _mm256_add_pd(_mm256_mul_pd(mr, pi), _mm256_mul_pd(mi, pr)));
    }
    const __m256d qr = _mm256_loadu_pd(psi_re + r * kLanes);
    const __m256d qi = _mm256_loadu_pd(psi_im + r * kLanes);
    acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_mul_pd(qr, y_re), _mm256_mul_pd(qi, y_im)));
  }
  _mm256_storeu_pd(out, acc);
}

void apply_avx2(int d, const double* a_re, const double* a_im, const double* psi_re,
                const double* psi_im, double* out_re, double* out_im, double* norm2) {
  __m256d n2 = _mm256_setzero_pd();
  for (int r = 0; r < d; ++r) {
    __m256d y_re = _mm256_setzero_pd();
    __m256d y_im = _mm256_setzero_pd();
    for (int c = 0; c < d; ++c) {
      const __m256d ar = _mm256_set1_pd(a_re[r * d + c]);
      const __m256d ai = _mm256_set1_pd(a_im[r * d + c]);
      const __m256d pr = _mm256_loadu_pd(psi_re + c * kLanes);
      const __m256d pi = _mm256_loadu_pd(psi_im + c * kLanes);
      y_re = _mm256_add_pd(y_re, _mm256_sub_pd(_mm256_mul_pd(ar, pr), _mm256_mul_pd(ai, pi)));
      y_im = _mm256_add_pd(y_im, _mm256_add_pd(_mm256_mul_pd(ar, pi), _mm256_mul_pd(ai, pr)));
    }
    _mm256_storeu_pd(out_re + r * kLanes, y_re);
    _mm256_storeu_pd(out_im + r * kLanes, y_im);
    n2 = _mm256_add_pd(n2, _mm256_add_pd(_mm256_mul_pd(y_re, y_re), _mm256_mul_pd(y_im, y_im)));
  }
  _mm256_storeu_pd(norm2, n2);
}

void scale_avx2(int d, double* psi_re, double* psi_im, const double* factor) {
  const __m256d f = _mm256_loadu_pd(factor);
  for (int c = 0; c < d; ++c) {
    _mm256_storeu_pd(psi_re + c * kLanes, _mm256_mul_pd(_mm256_loadu_pd(psi_re + c * kLanes), f));
    _mm256_storeu_pd(psi_im + c * kLanes, _mm256_mul_pd(_mm256_loadu_pd(psi_im + c * kLanes), f));
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", expectation_avx2, apply_avx2, scale_avx2};
  return table;
}

}  // namespace tlme::kernels::detail
