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
#include <optional>
#include <string>
#include <vector>

#include "tlme/me_integrator.hpp"
#include "tlme/quantum.hpp"
#include "tlme/rng.hpp"

namespace tlme::nmqj {

struct Member {
  quantum::StateVector state;
  std::int64_t count = 0;
};

/// Distinct states (modulo global phase) with occupation counts. The ensemble
/// average is sum_a (N_a / N) |psi_a><psi_a|.
class JumpEnsemble {
 public:
  JumpEnsemble(const quantum::StateVector& psi0, std::int64_t n);
  explicit JumpEnsemble(std::vector<Member> members);

  const std::vector<Member>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  std::int64_t total() const { return total_; }
  std::int64_t count(std::size_t a) const { return members_.at(a).count; }
  const quantum::StateVector& state(std::size_t a) const { return members_.at(a).state; }
  int dimension() const { return members_.front().state.dimension(); }

  std::optional<std::size_t> find(const quantum::StateVector& psi) const;
  /// Index of the member equal to psi, appending a zero-count one if absent.
  std::size_t find_or_add(const quantum::StateVector& psi);
  /// Moves k counts from member a to member b.
  void transfer(std::size_t a, std::size_t b, std::int64_t k);
  quantum::DensityMatrix density_matrix() const;

  /// Replaces every state (same order); merges members that coincide.
  void set_states(std::vector<quantum::StateVector> states);
  void prune_empty();

 private:
  std::vector<Member> members_;
  std::int64_t total_ = 0;
};

struct ReverseJumpOperator {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string channel_label;
};

/// Every member a' whose normalized L_i|psi_a'> equals |psi_a> modulo phase.
std::vector<std::size_t> reverse_targets(const quantum::TimeLocalGenerator& g,
                                         const JumpEnsemble& ens, std::size_t source,
                                         std::size_t channel);

/// Single reverse target. When several members qualify the most occupied one
/// is returned and *ambiguous (if given) is set.
std::optional<std::size_t> reverse_target(const quantum::TimeLocalGenerator& g,
                                          const JumpEnsemble& ens, std::size_t source,
                                          std::size_t channel, bool* ambiguous = nullptr);

/// (N_target / N_source) |gamma_i(t)| dt <psi_target| L_i^+ L_i |psi_target>.
double reverse_jump_probability(const quantum::TimeLocalGenerator& g, const JumpEnsemble& ens,
                                std::size_t source, std::size_t target, std::size_t channel,
                                double t, double dt);

/// |gamma_i(t)| N_target / N_source.
double effective_rate(const quantum::TimeLocalGenerator& g, const JumpEnsemble& ens,
                      std::size_t source, std::size_t target, std::size_t channel, double t);

struct JumpEvent {
  double time = 0.0;
  std::size_t channel = 0;
  bool reversed = false;
  std::int64_t count = 0;
};

struct StepStats {
  std::int64_t forward_jumps = 0;
  std::int64_t reverse_jumps = 0;
  /// Reversed jumps that landed on a target with no occupation. Always zero;
  /// kept as an instrumentation check.
  std::int64_t zero_target_reversals = 0;
  /// Negative-rate source members for which no target exists.
  std::int64_t unmatched_sources = 0;
  std::int64_t ambiguity_warnings = 0;
  double max_step_probability = 0.0;
  std::vector<JumpEvent> events;

  void merge(const StepStats& other);
};

/// One step [t, t + dt]: jumps are sampled from the time-t ensemble (one
/// multinomial draw per member over its forward and reversed events), counts
/// are moved, then every member evolves under (1 - i H_eff dt) and is
/// renormalized. Empty members are dropped only when prune_empty is set.
StepStats step(const quantum::TimeLocalGenerator& g, JumpEnsemble& ens, double t, double dt,
               Rng& rng, bool prune_empty);

struct EnsembleRun {
  integrator::PropagationResult average;
  StepStats stats;
  std::size_t max_members = 0;
};

/// The whole ensemble evolves as one coupled system drawing from
/// Rng(seed, 0). Steps are split at rate discontinuities.
EnsembleRun run_ensemble_nm(const quantum::TimeLocalGenerator& g, const quantum::StateVector& psi0,
                            double t_end, double dt, std::int64_t n, std::uint64_t seed,
                            std::size_t stride = 1);

}  // namespace tlme::nmqj
