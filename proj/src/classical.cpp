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

#include "tlme/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tlme/errors.hpp"
#include "tlme/mcwf.hpp"
#include "tlme/rng.hpp"
#include "tlme/time_grid.hpp"

namespace tlme::classical {
namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kClampTolerance = 1e-12;
constexpr double kPositivityThreshold = 1e-8;

Eigen::VectorXd clamp_small(Eigen::VectorXd p, double tol) {
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) < 0.0 && p(k) >= -tol) p(k) = 0.0;
  }
  return p;
}

}  // namespace

ProbabilityVector::ProbabilityVector(Eigen::VectorXd p) : p_(std::move(p)) {
  if (p_.size() == 0) throw StructuralError("probability vector is empty");
  for (Eigen::Index k = 0; k < p_.size(); ++k) {
    if (!std::isfinite(p_(k)) || p_(k) < -kClampTolerance) {
      std::ostringstream os;
      os << "probability p[" << k << "] = " << p_(k) << " is negative";
      throw DomainError(os.str());
    }
  }
  p_ = clamp_small(p_, kClampTolerance);
  if (std::abs(p_.sum() - 1.0) > kSumTolerance) throw DomainError("probabilities must sum to one");
}

ProbabilityVector ProbabilityVector::basis(int n, int k) {
  if (k < 0 || k >= n) throw StructuralError("basis index out of range");
  return ProbabilityVector(Eigen::VectorXd::Unit(n, k));
}

void RateMatrixSpec::validate() const {
  if (n < 1) throw StructuralError("rate matrix needs at least one state");
  for (const auto& [key, rate] : rates) {
    const auto [k, l] = key;
    if (k == l) throw StructuralError("self-rates are not allowed");
    if (k < 0 || l < 0 || k >= n || l >= n) throw StructuralError("rate refers to a state out of range");
  }
}

std::vector<double> RateMatrixSpec::breakpoints(double t0, double t1) const {
  std::vector<const rates::RateFunction*> fs;
  for (const auto& [key, rate] : rates) fs.push_back(&rate);
  return rates::merged_breakpoints(fs, t0, t1);
}

Eigen::VectorXd rate_rhs(const RateMatrixSpec& spec, const Eigen::VectorXd& p, double t) {
  spec.validate();
  if (p.size() != spec.n) throw StructuralError("probability vector and rate matrix sizes differ");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.n);
  for (const auto& [key, rate] : spec.rates) {
    const auto [k, l] = key;
    const double flow = rate.evaluate(t) * p(l);
    out(k) += flow;
    out(l) -= flow;
  }
  return out;
}

Eigen::MatrixXd q_matrix(const RateMatrixSpec& spec, double t) {
  spec.validate();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(spec.n, spec.n);
  for (const auto& [key, rate] : spec.rates) {
    const auto [k, l] = key;
    const double g = rate.evaluate(t);
    q(k, l) += g;
    q(l, l) -= g;
  }
  return q;
}

MarkovReport validate_markov(const RateMatrixSpec& spec, const std::vector<double>& t_grid) {
  spec.validate();
  MarkovReport report;
  for (double t : t_grid) {
    for (const auto& [key, rate] : spec.rates) {
      const double g = rate.evaluate(t);
      if (g < 0.0) report.incidents.push_back({key.first, key.second, t, g});
    }
  }
  report.markov = report.incidents.empty();
  return report;
}

double effective_rate_classical(double gamma_kl, const ProbabilityVector& p, int k, int l) {
  if (k < 0 || l < 0 || k >= p.dimension() || l >= p.dimension()) {
    throw StructuralError("state index out of range");
  }
  if (!(gamma_kl < 0.0)) throw DomainError("effective rates are defined for negative rates only");
  if (p[l] == 0.0) return 0.0;
  if (p[k] == 0.0) throw UndefinedSourceError("effective rate with an empty source state");
  return std::abs(gamma_kl) * p[l] / p[k];
}

Series integrate(const RateMatrixSpec& spec, const ProbabilityVector& p0, double t_end, double dt,
                 std::size_t stride) {
  spec.validate();
  if (p0.dimension() != spec.n) throw StructuralError("initial vector and rate matrix sizes differ");
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (stride == 0) throw DomainError("output stride must be at least 1");
  if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");

  Series out;
  out.times.push_back(0.0);
  out.states.push_back(p0);
  Eigen::VectorXd p = p0.values();
  Eigen::MatrixXd q;
  double q_time = -1.0;

  StepWalker walker(t_end, dt, spec.breakpoints(0.0, t_end));
  Step st;
  while (walker.next(st)) {
    // Rates are constant on every step because steps never straddle a
    // discontinuity.
    if (st.t0 != q_time) {
      q = q_matrix(spec, st.t0);
      q_time = st.t0;
    }
    const double h = st.width();
    const Eigen::VectorXd k1 = q * p;
    const Eigen::VectorXd k2 = q * (p + 0.5 * h * k1);
    const Eigen::VectorXd k3 = q * (p + 0.5 * h * k2);
    const Eigen::VectorXd k4 = q * (p + h * k3);
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (int k = 0; k < spec.n; ++k) {
      if (!std::isfinite(p(k))) throw BlowupError("non-finite probability", st.t1);
      if (p(k) < -kPositivityThreshold) {
        std::ostringstream os;
        os << "positivity violated: p[" << k << "] = " << p(k) << " at t=" << st.t1;
        throw PositivityError(os.str(), k, st.t1);
      }
    }
    if (st.on_grid() && keep_grid_point(st.grid_index, walker.grid_intervals(), stride)) {
      out.times.push_back(st.t1);
      out.states.emplace_back(clamp_small(p, kPositivityThreshold));
    }
  }
  return out;
}

rates::RateFunction two_state_gamma1(double gamma, double s1, double s2) {
  return rates::RateFunction::piecewise({s1, s2}, {gamma, 0.0, gamma}, s1, 2.0 * (s2 - s1));
}

rates::RateFunction two_state_gamma2(double gamma, double s1, double s2) {
  return rates::RateFunction::piecewise({s1, s2}, {0.0, gamma, 0.0}, s1, 2.0 * (s2 - s1));
}

RateMatrixSpec build_two_state(TwoStateVariant variant, double gamma, double s1, double s2) {
  if (!(gamma > 0.0)) throw DomainError("two-state rate must be positive");
  if (!(s1 > 0.0 && s2 > s1)) throw DomainError("two-state switching times need 0 < s1 < s2");
  RateMatrixSpec spec;
  spec.n = 2;
  const auto g1 = two_state_gamma1(gamma, s1, s2);
  const auto g2 = two_state_gamma2(gamma, s1, s2);
  if (variant == TwoStateVariant::kMarkov) {
    spec.topology = "two-state/markov";
    spec.rates[{1, 0}] = g1;
    spec.rates[{0, 1}] = g2;
  } else {
    spec.topology = "two-state/nonmarkov";
    spec.rates[{1, 0}] = rates::RateFunction::difference(g1, g2);
  }
  return spec;
}

rates::RateFunction ring_f(double gamma) {
  return rates::RateFunction::sign_periodic(gamma, -std::numbers::pi / 2.0, 1);
}

rates::RateFunction ring_g(double gamma) {
  return rates::RateFunction::sign_periodic(gamma, std::numbers::pi / 2.0, 1);
}

rates::RateFunction ring_r(double gamma) {
  return rates::RateFunction::difference(ring_f(gamma), ring_g(gamma));
}

RateMatrixSpec build_ring(RingVariant variant, double gamma, int n) {
  if (!(gamma > 0.0)) throw DomainError("ring rate must be positive");
  if (n < 3) throw DomainError("a ring needs at least three states");
  RateMatrixSpec spec;
  spec.n = n;
  const auto constant = rates::RateFunction::constant(gamma);
  for (int i = 0; i < n; ++i) {
    const std::pair<int, int> cw{ring_next(i, n), i};
    const std::pair<int, int> acw{ring_prev(i, n), i};
    switch (variant) {
      case RingVariant::kA:
        spec.rates[cw] = ring_r(gamma);
        break;
      case RingVariant::kB:
        spec.rates[cw] = ring_f(gamma);
        spec.rates[acw] = ring_g(gamma);
        break;
      case RingVariant::kC:
        spec.rates[cw] = constant;
        spec.rates[acw] = ring_r(gamma);
        break;
      case RingVariant::kD:
        spec.rates[cw] = rates::sum(constant, ring_g(gamma));
        spec.rates[acw] = rates::RateFunction::difference(constant, ring_g(gamma));
        break;
    }
  }
  static const char* const kNames[] = {"ring/a", "ring/b", "ring/c", "ring/d"};
  spec.topology = kNames[static_cast<int>(variant)];
  return spec;
}

std::int64_t ClassicalEnsemble::total() const {
  std::int64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

EnsembleSeries sample_ensemble(const RateMatrixSpec& spec, const ClassicalEnsemble& counts0,
                               double t_end, double dt, std::uint64_t seed, std::size_t stride) {
  spec.validate();
  if (static_cast<int>(counts0.counts.size()) != spec.n) {
    throw StructuralError("ensemble and rate matrix sizes differ");
  }
  for (auto c : counts0.counts) {
    if (c < 0) throw DomainError("ensemble counts must be non-negative");
  }
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (stride == 0) throw DomainError("output stride must be at least 1");

  EnsembleSeries out;
  out.seed = seed;
  out.times.push_back(0.0);
  out.states.push_back(counts0);
  Rng rng(seed, 0);
  std::vector<std::int64_t> n = counts0.counts;

  struct Move {
    int to;
    double p;
  };
  std::vector<std::vector<Move>> moves(spec.n);
  std::vector<std::int64_t> delta(spec.n);

  StepWalker walker(t_end, dt, spec.breakpoints(0.0, t_end));
  Step st;
  while (walker.next(st)) {
    const double h = st.width();
    for (auto& m : moves) m.clear();
    for (const auto& [key, rate] : spec.rates) {
      const auto [k, l] = key;
      const double g = rate.evaluate(st.t0);
      if (g > 0.0) {
        moves[l].push_back({k, g * h});
      } else if (g < 0.0 && n[k] > 0 && n[l] > 0) {
        moves[k].push_back({l, -g * static_cast<double>(n[l]) / static_cast<double>(n[k]) * h});
      }
    }
    std::fill(delta.begin(), delta.end(), 0);
    for (int k = 0; k < spec.n; ++k) {
      if (n[k] == 0 || moves[k].empty()) continue;
      double total = 0.0;
      for (const Move& m : moves[k]) total += m.p;
      out.max_step_probability = std::max(out.max_step_probability, total);
      if (total > mcwf::kMaxStepProbability) {
        std::ostringstream os;
        os << "jump probability " << total << " per member in one step exceeds "
           << mcwf::kMaxStepProbability << " at t=" << st.t0 << " (state " << k << "); reduce dt";
        throw StepSizeError(os.str(), st.t0, total);
      }
      std::int64_t remaining = n[k];
      double mass = 1.0;
      for (const Move& m : moves[k]) {
        if (remaining == 0) break;
        const std::int64_t c = sample_binomial(rng, remaining, std::min(1.0, m.p / mass));
        remaining -= c;
        mass -= m.p;
        if (c > 0) {
          delta[k] -= c;
          delta[m.to] += c;
          out.events.push_back({st.t1, k, m.to, c});
        }
      }
    }
    for (int k = 0; k < spec.n; ++k) n[k] += delta[k];
    if (st.on_grid() && keep_grid_point(st.grid_index, walker.grid_intervals(), stride)) {
      out.times.push_back(st.t1);
      out.states.push_back({n});
    }
  }
  return out;
}

}  // namespace tlme::classical
