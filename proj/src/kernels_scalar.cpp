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

#include "tlme/kernels.hpp"

namespace tlme::kernels {
namespace {

void expectation_scalar(int d, const double* m_re, const double* m_im, const double* psi_re,
                        const double* psi_im, double* out) {
  for (int j = 0; j < kLanes; ++j) out[j] = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int j = 0; j < kLanes; ++j) {
      double y_re = 0.0;
      double y_im = 0.0;
      for (int c = 0; c < d; ++c) {
        const double mr = m_re[r * d + c];
        const double mi = m_im[r * d + c];
        const double pr = psi_re[c * kLanes + j];
        const double pi = psi_im[c * kLanes + j];
        y_re = y_re + (mr * pr - mi * pi);
        y_im = y_im + (mr * pi + mi * pr);
      }
      out[j] = out[j] + (psi_re[r * kLanes + j] * y_re + psi_im[r * kLanes + j] * y_im);
    }
  }
}

void apply_scalar(int d, const double* a_re, const double* a_im, const double* psi_re,
                  const double* psi_im, double* out_re, double* out_im, double* norm2) {
  for (int j = 0; j < kLanes; ++j) norm2[j] = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int j = 0; j < kLanes; ++j) {
      double y_re = 0.0;
      double y_im = 0.0;
      for (int c = 0; c < d; ++c) {
        const double ar = a_re[r * d + c];
        const double ai = a_im[r * d + c];
        const double pr = psi_re[c * kLanes + j];
        const double pi = psi_im[c * kLanes + j];
        y_re = y_re + (ar * pr - ai * pi);
        y_im = y_im + (ar * pi + ai * pr);
      }
      out_re[r * kLanes + j] = y_re;
      out_im[r * kLanes + j] = y_im;
      norm2[j] = norm2[j] + (y_re * y_re + y_im * y_im);
    }
  }
}

void scale_scalar(int d, double* psi_re, double* psi_im, const double* factor) {
  for (int c = 0; c < d; ++c) {
    for (int j = 0; j < kLanes; ++j) {
      psi_re[c * kLanes + j] *= factor[j];
      psi_im[c * kLanes + j] *= factor[j];
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", expectation_scalar, apply_scalar, scale_scalar};
  return table;
}

}  // namespace tlme::kernels
