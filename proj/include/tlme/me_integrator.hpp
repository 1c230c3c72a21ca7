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

#include <vector>

#include "tlme/quantum.hpp"
#include "tlme/rates.hpp"

namespace tlme::integrator {

struct PropagationResult {
  std::vector<double> times;
  std::vector<quantum::DensityMatrix> states;
  double step = 0.0;
};

struct ChoiReport {
  double time = 0.0;
  double min_eigenvalue = 0.0;
  bool is_cp = false;
  double tolerance = 0.0;
};

inline constexpr double kDefaultCpTolerance = 1e-8;

/// Classic RK4 on the vectorized generator with steps split at every rate
/// discontinuity. Each state is re-Hermitized and trace-renormalized after
/// every step. States are stored at every stride-th grid point and at t_end.
PropagationResult propagate(const quantum::TimeLocalGenerator& g,
                            const quantum::DensityMatrix& rho0, double t_end, double dt,
                            std::size_t stride = 1);

/// Closed-form solution of the single-channel two-level decay (H = 0,
/// L = sigma_minus): populations scale with kappa(t) = exp(-int_0^t gamma),
/// coherences with sqrt(kappa).
quantum::DensityMatrix analytic_two_level(const rates::RateFunction& gamma,
                                          const quantum::DensityMatrix& rho0, double t);
double survival_factor(const rates::RateFunction& gamma, double t);

/// Phi_t as a d^2 x d^2 matrix acting on column-major vec(rho); column
/// k + l*d holds vec(Phi_t(|k><l|)). Built by raw RK4 (no renormalization).
CMatrix dynamical_map(const quantum::TimeLocalGenerator& g, double t, double dt);
/// Phi_t for every t in times (any order), from one pass over the horizon.
std::vector<CMatrix> dynamical_maps(const quantum::TimeLocalGenerator& g,
                                    const std::vector<double>& times, double dt);

CMatrix apply_map(const CMatrix& map, const CMatrix& rho);

/// C = sum_{kl} |k><l| (x) Phi(|k><l|); Phi is CP iff C is positive semidefinite.
CMatrix choi_matrix(const CMatrix& map);
double min_choi_eigenvalue(const CMatrix& map);

std::vector<ChoiReport> cp_check(const quantum::TimeLocalGenerator& g,
                                 const std::vector<double>& t_grid, double dt,
                                 double tol = kDefaultCpTolerance);

}  // namespace tlme::integrator
