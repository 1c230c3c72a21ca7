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

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tlme/rates.hpp"

namespace tlme {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

namespace quantum {

/// Basis convention for two-level helpers: |e> is index 0, |g> is index 1.
inline constexpr int kExcited = 0;
inline constexpr int kGround = 1;

/// sigma_minus = |g><e|.
CMatrix sigma_minus();
CVector basis_vector(int dimension, int index);
/// |k><l| in dimension d.
CMatrix matrix_unit(int dimension, int k, int l);

class StateVector {
 public:
  StateVector() = default;
  /// Normalizes on construction; throws StructuralError on a null vector.
  explicit StateVector(CVector amplitudes);

  static StateVector basis(int dimension, int index);

  int dimension() const { return static_cast<int>(amp_.size()); }
  const CVector& amplitudes() const { return amp_; }
  double norm() const { return amp_.norm(); }

  /// |psi><psi|
  CMatrix projector() const { return amp_ * amp_.adjoint(); }

 private:
  CVector amp_;
};

/// min over phi of || a - e^{i phi} b ||.
double phase_distance(const CVector& a, const CVector& b);
inline double phase_distance(const StateVector& a, const StateVector& b) {
  return phase_distance(a.amplitudes(), b.amplitudes());
}
inline constexpr double kPhaseMatchTolerance = 1e-9;
inline bool same_ray(const StateVector& a, const StateVector& b) {
  return phase_distance(a, b) <= kPhaseMatchTolerance;
}

/// Hermitian within 1e-10 and unit trace within 1e-9. Positivity is not
/// enforced; that is the job of the complete-positivity audit.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(CMatrix entries);

  static DensityMatrix pure(const StateVector& psi) { return DensityMatrix(psi.projector()); }

  int dimension() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }
  double population(int k) const { return m_(k, k).real(); }

 private:
  CMatrix m_;
};

struct Channel {
  Channel(CMatrix op, rates::RateFunction rate, std::string label);

  CMatrix lindblad_operator;
  rates::RateFunction rate;
  std::string label;
};

/// dRho/dt = -i[H, rho] + sum_i gamma_i(t) (L_i rho L_i^+ - 1/2 {L_i^+ L_i, rho})
/// with constant H and L_i.
class TimeLocalGenerator {
 public:
  TimeLocalGenerator(CMatrix hamiltonian, std::vector<Channel> channels);

  int dimension() const { return static_cast<int>(h_.rows()); }
  const CMatrix& hamiltonian() const { return h_; }
  const std::vector<Channel>& channels() const { return channels_; }
  std::size_t channel_count() const { return channels_.size(); }

  /// L_i^+ L_i, cached.
  const CMatrix& jump_product(std::size_t i) const { return jump_products_[i]; }

  void rates_at(double t, std::span<double> out) const;
  void left_rates_at(double t, std::span<double> out) const;
  std::vector<double> rates_at(double t) const;

  /// Discontinuities of every channel rate in (t0, t1].
  std::vector<double> breakpoints(double t0, double t1) const;
  /// Smallest rate any channel takes on [t0, t1).
  double minimum_rate(double t0, double t1) const;

  /// Column-major vectorized superoperators: vec(-i[H, .]) and the
  /// dissipator of each channel, so that vec(dRho) = (C + sum gamma_i D_i) vec(rho).
  const CMatrix& coherent_superoperator() const { return coherent_; }
  const CMatrix& dissipator(std::size_t i) const { return dissipators_[i]; }
  CMatrix liouvillian(std::span<const double> rates) const;

 private:
  CMatrix h_;
  std::vector<Channel> channels_;
  std::vector<CMatrix> jump_products_;
  CMatrix coherent_;
  std::vector<CMatrix> dissipators_;
};

/// Right-hand side of the time-local master equation with explicit rates.
CMatrix apply_generator(const TimeLocalGenerator& g, const CMatrix& rho,
                        std::span<const double> rates);
CMatrix apply_generator(const TimeLocalGenerator& g, const CMatrix& rho, double t);
inline CMatrix apply_generator(const TimeLocalGenerator& g, const DensityMatrix& rho, double t) {
  return apply_generator(g, rho.matrix(), t);
}

/// H - (i/2) sum_i gamma_i L_i^+ L_i
CMatrix effective_hamiltonian(const TimeLocalGenerator& g, std::span<const double> rates);
CMatrix effective_hamiltonian(const TimeLocalGenerator& g, double t);

/// Kronecker product, used for superoperators.
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector vec(const CMatrix& m);
CMatrix unvec(const CVector& v, int dimension);

/// The two-level amplitude-damping generator (H = 0, L = sigma_minus).
TimeLocalGenerator two_level_decay(rates::RateFunction gamma);

}  // namespace quantum
}  // namespace tlme
