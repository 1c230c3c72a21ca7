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

#include "tlme/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlme/errors.hpp"

namespace tlme::quantum {

CMatrix sigma_minus() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(kGround, kExcited) = 1.0;
  return s;
}

CVector basis_vector(int dimension, int index) {
  if (index < 0 || index >= dimension) throw StructuralError("basis index out of range");
  CVector v = CVector::Zero(dimension);
  v(index) = 1.0;
  return v;
}

CMatrix matrix_unit(int dimension, int k, int l) {
  CMatrix m = CMatrix::Zero(dimension, dimension);
  m(k, l) = 1.0;
  return m;
}

StateVector::StateVector(CVector amplitudes) : amp_(std::move(amplitudes)) {
  const double n = amp_.norm();
  if (amp_.size() == 0 || !std::isfinite(n) || n <= 1e-300) {
    throw StructuralError("state vector must be non-empty, finite and non-zero");
  }
  amp_ /= n;
}

StateVector StateVector::basis(int dimension, int index) {
  return StateVector(basis_vector(dimension, index));
}

double phase_distance(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) throw StructuralError("phase_distance dimension mismatch");
  // ||a - e^{i phi} b||^2 = |a|^2 + |b|^2 - 2 Re(e^{i phi} <a|b>), minimized at |<a|b>|.
  const double d2 = a.squaredNorm() + b.squaredNorm() - 2.0 * std::abs(a.dot(b));
  return std::sqrt(std::max(d2, 0.0));
}

DensityMatrix::DensityMatrix(CMatrix entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    throw StructuralError("density matrix must be square and non-empty");
  }
  if (!m_.allFinite()) throw StructuralError("density matrix has non-finite entries");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw StructuralError("density matrix is not Hermitian within 1e-10");
  }
  if (std::abs(m_.trace() - Complex(1.0)) > 1e-9) {
    throw StructuralError("density matrix trace differs from 1 by more than 1e-9");
  }
}

Channel::Channel(CMatrix op, rates::RateFunction r, std::string l)
    : lindblad_operator(std::move(op)), rate(std::move(r)), label(std::move(l)) {
  if (lindblad_operator.rows() != lindblad_operator.cols() || lindblad_operator.rows() == 0) {
    throw StructuralError("Lindblad operator of channel '" + label + "' must be square");
  }
  if (lindblad_operator.cwiseAbs().maxCoeff() == 0.0) {
    throw StructuralError("Lindblad operator of channel '" + label + "' is identically zero");
  }
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CVector vec(const CMatrix& m) { return Eigen::Map<const CVector>(m.data(), m.size()); }

CMatrix unvec(const CVector& v, int dimension) {
  if (v.size() != static_cast<Eigen::Index>(dimension) * dimension) {
    throw StructuralError("unvec size mismatch");
  }
  return Eigen::Map<const CMatrix>(v.data(), dimension, dimension);
}

TimeLocalGenerator::TimeLocalGenerator(CMatrix hamiltonian, std::vector<Channel> channels)
    : h_(std::move(hamiltonian)), channels_(std::move(channels)) {
  if (h_.rows() != h_.cols() || h_.rows() == 0) {
    throw StructuralError("Hamiltonian must be square and non-empty");
  }
  if ((h_ - h_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw StructuralError("Hamiltonian is not Hermitian within 1e-12");
  }
  const int d = dimension();
  const CMatrix id = CMatrix::Identity(d, d);
  coherent_ = Complex(0.0, -1.0) * (kron(id, h_) - kron(h_.transpose(), id));
  for (const Channel& c : channels_) {
    if (c.lindblad_operator.rows() != d) {
      std::ostringstream os;
      os << "channel '" << c.label << "' has dimension " << c.lindblad_operator.rows()
         << " but the Hamiltonian has dimension " << d;
      throw StructuralError(os.str());
    }
    const CMatrix& l = c.lindblad_operator;
    CMatrix m = l.adjoint() * l;
    // vec(L X L^+) = (conj(L) (x) L) vec(X)
    dissipators_.push_back(kron(l.conjugate(), l) - 0.5 * (kron(id, m) + kron(m.transpose(), id)));
    jump_products_.push_back(std::move(m));
  }
}

void TimeLocalGenerator::rates_at(double t, std::span<double> out) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) out[i] = channels_[i].rate.evaluate(t);
}

void TimeLocalGenerator::left_rates_at(double t, std::span<double> out) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) out[i] = channels_[i].rate.left_limit(t);
}

std::vector<double> TimeLocalGenerator::rates_at(double t) const {
  std::vector<double> r(channels_.size());
  rates_at(t, r);
  return r;
}

std::vector<double> TimeLocalGenerator::breakpoints(double t0, double t1) const {
  std::vector<const rates::RateFunction*> fs;
  for (const Channel& c : channels_) fs.push_back(&c.rate);
  return rates::merged_breakpoints(fs, t0, t1);
}

double TimeLocalGenerator::minimum_rate(double t0, double t1) const {
  double m = std::numeric_limits<double>::infinity();
  for (const Channel& c : channels_) m = std::min(m, c.rate.minimum(t0, t1));
  return m;
}

CMatrix TimeLocalGenerator::liouvillian(std::span<const double> rates) const {
  CMatrix out = coherent_;
  for (std::size_t i = 0; i < dissipators_.size(); ++i) out += rates[i] * dissipators_[i];
  return out;
}

CMatrix apply_generator(const TimeLocalGenerator& g, const CMatrix& rho,
                        std::span<const double> rates) {
  if (rho.rows() != g.dimension() || rho.cols() != g.dimension()) {
    throw StructuralError("density matrix and generator dimensions differ");
  }
  const CMatrix& h = g.hamiltonian();
  CMatrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
  for (std::size_t i = 0; i < g.channel_count(); ++i) {
    const CMatrix& l = g.channels()[i].lindblad_operator;
    const CMatrix& m = g.jump_product(i);
    out += rates[i] * (l * rho * l.adjoint() - 0.5 * (m * rho + rho * m));
  }
  return out;
}

CMatrix apply_generator(const TimeLocalGenerator& g, const CMatrix& rho, double t) {
  return apply_generator(g, rho, g.rates_at(t));
}

CMatrix effective_hamiltonian(const TimeLocalGenerator& g, std::span<const double> rates) {
  CMatrix h = g.hamiltonian();
  for (std::size_t i = 0; i < g.channel_count(); ++i) {
    if (rates[i] != 0.0) h -= Complex(0.0, 0.5 * rates[i]) * g.jump_product(i);
  }
  return h;
}

CMatrix effective_hamiltonian(const TimeLocalGenerator& g, double t) {
  return effective_hamiltonian(g, g.rates_at(t));
}

TimeLocalGenerator two_level_decay(rates::RateFunction gamma) {
  std::vector<Channel> ch;
  ch.emplace_back(sigma_minus(), std::move(gamma), "sigma_minus");
  return TimeLocalGenerator(CMatrix::Zero(2, 2), std::move(ch));
}

}  // namespace tlme::quantum
