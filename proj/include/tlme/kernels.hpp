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

#pragma once

// Batched complex kernels for the trajectory engines.
//
// A batch holds kLanes state vectors of dimension d in structure-of-arrays
// layout: component c of lane j lives at re[c * kLanes + j] (and im[...]).
// Operators are dense row-major d x d arrays split into real and imaginary
// parts. Every variant performs the same IEEE operations in the same order
// (the build disables FP contraction), so all variants agree bit for bit.

#include <string_view>

namespace tlme::kernels {

inline constexpr int kLanes = 4;

struct KernelTable {
  std::string_view name;

  /// out[j] = Re <psi_j| M |psi_j> for Hermitian M.
  void (*expectation)(int d, const double* m_re, const double* m_im, const double* psi_re,
                      const double* psi_im, double* out);

  /// out_j = A psi_j and norm2[j] = ||out_j||^2.
  void (*apply)(int d, const double* a_re, const double* a_im, const double* psi_re,
                const double* psi_im, double* out_re, double* out_im, double* norm2);

  /// psi_j *= factor[j].
  void (*scale)(int d, double* psi_re, double* psi_im, const double* factor);
};

const KernelTable& scalar_kernels();

/// nullptr unless the AVX2 variant was compiled in and the CPU supports it.
const KernelTable* avx2_kernels();

/// The variant the engines use: TLME_KERNELS=scalar|avx2 forces one,
/// otherwise the widest supported variant.
const KernelTable& active_kernels();

}  // namespace tlme::kernels
