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

#include <cstdint>
#include <string>
#include <vector>

#include "tlme/me_integrator.hpp"
#include "tlme/quantum.hpp"

namespace tlme::mcwf {

/// Sum of jump probabilities allowed in one step before the step is rejected.
inline constexpr double kMaxStepProbability = 0.1;
/// Above this the runner warns that dt is coarse.
inline constexpr double kWarnStepProbability = 0.05;

struct JumpRecord {
  double time = 0.0;
  std::size_t channel = 0;
  std::string label;

  bool operator==(const JumpRecord&) const = default;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<double> times;
  std::vector<quantum::StateVector> states;
  std::vector<JumpRecord> jump_records;
};

/// Ensemble average on the stored grid plus per-entry standard errors of the
/// mean (real and imaginary parts separately).
struct EnsembleResult {
  integrator::PropagationResult average;
  std::vector<Eigen::MatrixXd> std_error_re;
  std::vector<Eigen::MatrixXd> std_error_im;
  std::vector<std::vector<JumpRecord>> jumps;  // per trajectory
  double max_step_probability = 0.0;
  std::size_t trajectories = 0;
};

/// (1 - i H_eff dt) psi, renormalized. Requires non-negative rates at t.
quantum::StateVector deterministic_step(const quantum::TimeLocalGenerator& g,
                                        const quantum::StateVector& psi, double t, double dt);

/// gamma_i(t) dt <psi| L_i^+ L_i |psi>.
double jump_probability(const quantum::TimeLocalGenerator& g, const quantum::StateVector& psi,
                        std::size_t channel, double t, double dt);

/// L_i psi / ||L_i psi||.
quantum::StateVector apply_jump(const quantum::TimeLocalGenerator& g,
                                const quantum::StateVector& psi, std::size_t channel);

/// One trajectory; identical to trajectory `index` of run_ensemble with the
/// same seed.
Trajectory run_trajectory(const quantum::TimeLocalGenerator& g, const quantum::StateVector& psi0,
                          double t_end, double dt, std::uint64_t seed, std::uint64_t index = 0,
                          std::size_t stride = 1);

/// N independent trajectories, trajectory k drawing from Rng(seed, k). Each
/// step draws one uniform u per trajectory: channel i fires when u falls in
/// its slot of [0, sum p), otherwise the state evolves under H_eff.
EnsembleResult run_ensemble(const quantum::TimeLocalGenerator& g, const quantum::StateVector& psi0,
                            double t_end, double dt, std::size_t n, std::uint64_t seed,
                            std::size_t stride = 1);

}  // namespace tlme::mcwf
