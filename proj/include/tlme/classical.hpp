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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tlme/rates.hpp"

namespace tlme::classical {

/// Occupation probabilities; sums to one within 1e-9, entries above -1e-12
/// are clamped to zero.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(Eigen::VectorXd p);
  static ProbabilityVector basis(int n, int k);
  int dimension() const { return static_cast<int>(p_.size()); }
  double operator[](int k) const { return p_(k); }
  const Eigen::VectorXd& values() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

/// gamma_kl is the rate of the transition l -> k.
struct RateMatrixSpec {
  int n = 0;
  std::map<std::pair<int, int>, rates::RateFunction> rates;
  std::string topology;

  void validate() const;
  std::vector<double> breakpoints(double t0, double t1) const;
};

/// dp_k/dt = sum_{l != k} (gamma_kl p_l - gamma_lk p_k)
Eigen::VectorXd rate_rhs(const RateMatrixSpec& spec, const Eigen::VectorXd& p, double t);
inline Eigen::VectorXd rate_rhs(const RateMatrixSpec& spec, const ProbabilityVector& p, double t) {
  return rate_rhs(spec, p.values(), t);
}

/// q_kl = gamma_kl (k != l), q_ll = -sum_k gamma_lk, so that dP/dt = Q P and
/// every column sums to zero.
Eigen::MatrixXd q_matrix(const RateMatrixSpec& spec, double t);

struct RateIncident {
  int k = 0;
  int l = 0;
  double time = 0.0;
  double rate = 0.0;
};

struct MarkovReport {
  bool markov = true;
  std::vector<RateIncident> incidents;
};

/// Markov iff no rate is negative on the grid.
MarkovReport validate_markov(const RateMatrixSpec& spec, const std::vector<double>& t_grid);

/// |gamma_kl| p_l / p_k for a negative gamma_kl.
double effective_rate_classical(double gamma_kl, const ProbabilityVector& p, int k, int l);

struct Series {
  std::vector<double> times;
  std::vector<ProbabilityVector> states;
};

/// RK4 with steps split at rate discontinuities. Throws PositivityError when
/// an entry drops below -1e-8.
Series integrate(const RateMatrixSpec& spec, const ProbabilityVector& p0, double t_end, double dt,
                 std::size_t stride = 1);

enum class TwoStateVariant { kMarkov, kNonMarkov };
enum class RingVariant { kA, kB, kC, kD };

/// State 0 is "1", state 1 is "2". Markov: gamma_1 drives 1 -> 2 on
/// [0, s1), [s2, 2 s2 - s1), ... and gamma_2 drives 2 -> 1 on the gaps.
/// Non-Markov: a single 1 -> 2 rate gamma_1 - gamma_2.
RateMatrixSpec build_two_state(TwoStateVariant variant, double gamma, double s1, double s2);
rates::RateFunction two_state_gamma1(double gamma, double s1, double s2);
rates::RateFunction two_state_gamma2(double gamma, double s1, double s2);

/// Periodic driving pieces of the ring models.
rates::RateFunction ring_f(double gamma);
rates::RateFunction ring_g(double gamma);
rates::RateFunction ring_r(double gamma);

inline int ring_next(int i, int n) { return (i + 1) % n; }
inline int ring_prev(int i, int n) { return (i + n - 1) % n; }

RateMatrixSpec build_ring(RingVariant variant, double gamma, int n = 4);

struct ClassicalEnsemble {
  std::vector<std::int64_t> counts;
  std::int64_t total() const;
};

struct ChainEvent {
  double time = 0.0;
  int from = 0;
  int to = 0;
  std::int64_t count = 0;
};

struct EnsembleSeries {
  std::vector<double> times;
  std::vector<ClassicalEnsemble> states;
  std::vector<ChainEvent> events;
  std::uint64_t seed = 0;
  double max_step_probability = 0.0;
};

/// Fixed-step sampler. A member in k jumps to j with probability
/// gamma_jk dt when gamma_jk >= 0; a negative gamma_kl instead moves members
/// from k to l with probability |gamma_kl| (n_l / n_k) dt. All draws in a step
/// use the counts at its start.
EnsembleSeries sample_ensemble(const RateMatrixSpec& spec, const ClassicalEnsemble& counts0,
                               double t_end, double dt, std::uint64_t seed, std::size_t stride = 1);

}  // namespace tlme::classical
