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

#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include <doctest.h>

#include "oracles.hpp"
#include "tlme/classical.hpp"
#include "tlme/errors.hpp"
#include "tlme/me_integrator.hpp"

using namespace tlme;
using namespace tlme::classical;
using rates::RateFunction;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

RateMatrixSpec random_spec(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RateMatrixSpec spec;
  spec.n = n;
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k != l) spec.rates[{k, l}] = RateFunction::constant(u(rng));
    }
  }
  return spec;
}

Eigen::VectorXd random_probabilities(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(n);
  for (int k = 0; k < n; ++k) p(k) = u(rng);
  return p / p.sum();
}

const ProbabilityVector& at(const Series& s, double t) {
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    if (std::abs(s.times[k] - t) < 1e-9) return s.states[k];
  }
  throw std::runtime_error("time not stored");
}

const ClassicalEnsemble& at(const EnsembleSeries& s, double t) {
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    if (std::abs(s.times[k] - t) < 1e-9) return s.states[k];
  }
  throw std::runtime_error("time not stored");
}

const RateMatrixSpec kMarkov = build_two_state(TwoStateVariant::kMarkov, 0.4, 5.0, 10.0);
const RateMatrixSpec kNonMarkov = build_two_state(TwoStateVariant::kNonMarkov, 0.4, 5.0, 10.0);

}  // namespace

TEST_CASE("probability vector validation") {
  CHECK_THROWS_AS(ProbabilityVector(vec({0.5, 0.6})), DomainError);
  CHECK_THROWS_AS(ProbabilityVector(vec({1.1, -0.1})), DomainError);
  const ProbabilityVector p(vec({1.0 + 5e-13, -5e-13}));
  CHECK(p[1] == 0.0);
  CHECK(ProbabilityVector::basis(3, 2)[2] == 1.0);
  CHECK_THROWS_AS(ProbabilityVector::basis(3, 3), StructuralError);
}

TEST_CASE("rate matrix validation") {
  RateMatrixSpec spec;
  spec.n = 2;
  spec.rates[{0, 0}] = RateFunction::constant(1.0);
  CHECK_THROWS_AS(spec.validate(), StructuralError);
  spec.rates.clear();
  spec.rates[{0, 2}] = RateFunction::constant(1.0);
  CHECK_THROWS_AS(spec.validate(), StructuralError);
}

TEST_CASE("rate equation right-hand side") {
  const Eigen::VectorXd d = rate_rhs(kMarkov, ProbabilityVector(vec({1.0, 0.0})), 1.0);
  CHECK(d(0) == doctest::Approx(-0.4));
  CHECK(d(1) == doctest::Approx(0.4));
  RateMatrixSpec sym;
  sym.n = 2;
  sym.rates[{0, 1}] = RateFunction::constant(0.7);
  sym.rates[{1, 0}] = RateFunction::constant(0.7);
  CHECK(rate_rhs(sym, vec({0.5, 0.5}), 0.0).cwiseAbs().maxCoeff() == 0.0);
  RateMatrixSpec zero;
  zero.n = 3;
  CHECK(rate_rhs(zero, vec({0.2, 0.3, 0.5}), 0.0).isZero(0.0));
}

TEST_CASE("Q matrix form") {
  RateMatrixSpec spec;
  spec.n = 2;
  spec.rates[{1, 0}] = RateFunction::constant(0.4);
  Eigen::MatrixXd expect(2, 2);
  expect << -0.4, 0.0, 0.4, 0.0;
  CHECK((q_matrix(spec, 0.0) - expect).cwiseAbs().maxCoeff() == 0.0);
  RateMatrixSpec zero;
  zero.n = 2;
  CHECK(q_matrix(zero, 0.0).isZero(0.0));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const RateMatrixSpec s = random_spec(rng, n);
    const Eigen::VectorXd p = random_probabilities(rng, n);
    const Eigen::MatrixXd q = q_matrix(s, 0.0);
    const Eigen::VectorXd rhs = rate_rhs(s, p, 0.0);
    CHECK((q * p - rhs).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(rhs.sum()) < 1e-12);
    CHECK(q.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Markov validation") {
  std::vector<double> grid;
  for (int k = 0; k < 120; ++k) grid.push_back(0.1 * k);
  CHECK(validate_markov(kMarkov, grid).markov);
  const MarkovReport nm = validate_markov(kNonMarkov, grid);
  CHECK_FALSE(nm.markov);
  REQUIRE_FALSE(nm.incidents.empty());
  for (const auto& inc : nm.incidents) {
    CHECK(inc.time >= 5.0 - 1e-12);
    CHECK(inc.time < 10.0);
    CHECK(inc.rate == doctest::Approx(-0.4));
  }
  RateMatrixSpec zero;
  zero.n = 2;
  CHECK(validate_markov(zero, grid).markov);
}

TEST_CASE("classical effective rate") {
  CHECK(effective_rate_classical(-0.4, ProbabilityVector(vec({0.6, 0.3, 0.1})), 0, 1) == doctest::Approx(0.2));
  CHECK(effective_rate_classical(-0.4, ProbabilityVector(vec({1.0, 0.0})), 0, 1) == 0.0);
  CHECK(effective_rate_classical(-0.4, ProbabilityVector(vec({0.5, 0.5})), 0, 1) == doctest::Approx(0.4));
  CHECK_THROWS_AS(effective_rate_classical(-0.4, ProbabilityVector(vec({0.0, 1.0})), 0, 1), UndefinedSourceError);
  CHECK_THROWS_AS(effective_rate_classical(0.4, ProbabilityVector(vec({0.5, 0.5})), 0, 1), DomainError);
}

TEST_CASE("two-state builders") {
  CHECK(two_state_gamma1(0.4, 5, 10)(2.0) == 0.4);
  CHECK(two_state_gamma2(0.4, 5, 10)(2.0) == 0.0);
  CHECK(kNonMarkov.rates.at({1, 0})(7.0) == doctest::Approx(-0.4));
  CHECK(std::abs(kNonMarkov.rates.at({1, 0}).integral(0.0, 10.0)) < 1e-12);
  CHECK_THROWS_AS(build_two_state(TwoStateVariant::kMarkov, 0.0, 5, 10), DomainError);
  CHECK_THROWS_AS(build_two_state(TwoStateVariant::kMarkov, 0.4, 10, 5), DomainError);
}

TEST_CASE("ring builders") {
  const RateMatrixSpec a = build_ring(RingVariant::kA, 0.5);
  CHECK(a.rates.at({1, 0})(1.0) == doctest::Approx(0.5));
  CHECK(a.rates.at({1, 0})(3.0) == doctest::Approx(-0.5));
  CHECK(a.rates.count({0, 1}) == 0);
  CHECK(a.rates.at({0, 3})(1.0) == doctest::Approx(0.5));
  std::vector<double> grid;
  for (int k = 0; k < 400; ++k) grid.push_back(0.1 * k + 0.05);
  CHECK(validate_markov(build_ring(RingVariant::kB, 0.5), grid).markov);
  CHECK(validate_markov(build_ring(RingVariant::kD, 0.5), grid).markov);
  CHECK_FALSE(validate_markov(build_ring(RingVariant::kC, 0.5), grid).markov);
  const RateMatrixSpec d = build_ring(RingVariant::kD, 0.5);
  for (double t : grid) {
    const double cw = d.rates.at({1, 0})(t);
    CHECK((cw == doctest::Approx(0.5) || cw == doctest::Approx(1.0)));
  }
  CHECK(d.rates.at({1, 0})(1.0) != d.rates.at({1, 0})(3.0));
  CHECK_THROWS_AS(build_ring(RingVariant::kA, 0.5, 2), DomainError);
  CHECK_THROWS_AS(build_ring(RingVariant::kA, -0.5), DomainError);
}

TEST_CASE("two-state integration follows the closed form") {
  const auto s0 = integrate(kNonMarkov, ProbabilityVector::basis(2, 1), 12.0, 1e-3, 100);
  for (const auto& p : s0.states) CHECK(std::abs(p[0]) <= 1e-12);
  for (double a : {1.0, 0.3}) {
    const auto s = integrate(kNonMarkov, ProbabilityVector(vec({a, 1.0 - a})), 12.0, 1e-3, 10);
    const auto& gamma = kNonMarkov.rates.at({1, 0});
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      CHECK(std::abs(s.states[k][0] - a * std::exp(-gamma.integral(0.0, s.times[k]))) < 1e-8);
      CHECK(std::abs(s.states[k].values().sum() - 1.0) < 1e-10);
    }
  }
  const auto s1 = integrate(kNonMarkov, ProbabilityVector::basis(2, 0), 10.0, 1e-3);
  CHECK(std::abs(s1.states.back()[0] - 1.0) < 1e-9);
}

TEST_CASE("integration agrees with piecewise matrix exponentials") {
  const RateMatrixSpec spec = build_ring(RingVariant::kC, 0.5);
  const auto s = integrate(spec, ProbabilityVector::basis(4, 0), 10.0, 1e-3, 1000);
  Eigen::VectorXd p = ProbabilityVector::basis(4, 0).values();
  double t = 0.0;
  for (double cut : {1.0, 3.0, 5.0, 7.0, 9.0, 10.0}) {
    p = oracle::classical_step(q_matrix(spec, 0.5 * (t + cut)), p, cut - t);
    t = cut;
  }
  CHECK((s.states.back().values() - p).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("invalid negative rates surface as positivity violations") {
  RateMatrixSpec spec;
  spec.n = 2;
  spec.rates[{1, 0}] = RateFunction::constant(-0.5);
  CHECK_THROWS_AS(integrate(spec, ProbabilityVector(vec({0.5, 0.5})), 5.0, 1e-3), PositivityError);
  CHECK_THROWS_AS(integrate(spec, ProbabilityVector(vec({0.5, 0.5})), 5.0, 0.0), DomainError);
}

TEST_CASE("ring (a) returns to its initial state") {
  const auto s = integrate(build_ring(RingVariant::kA, 0.5), ProbabilityVector::basis(4, 0), 12.0, 1e-3);
  for (double t : {4.0, 8.0, 12.0}) {
    CHECK((at(s, t).values() - ProbabilityVector::basis(4, 0).values()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ring (a) change of variable") {
  // With a single clockwise rate r(t), p(t) = exp(tau(t) Q1) p(0) where
  // tau = int_0^t r and Q1 is the unit-rate clockwise generator. Since
  // tau >= 0 throughout, this is a positive-rate evolution in tau.
  const RateMatrixSpec a = build_ring(RingVariant::kA, 0.5);
  const RateFunction r = ring_r(0.5);
  RateMatrixSpec unit;
  unit.n = 4;
  for (int i = 0; i < 4; ++i) unit.rates[{ring_next(i, 4), i}] = RateFunction::constant(1.0);
  const Eigen::MatrixXd q1 = q_matrix(unit, 0.0);
  const Eigen::VectorXd p0 = ProbabilityVector::basis(4, 0).values();
  const auto s = integrate(a, ProbabilityVector::basis(4, 0), 12.0, 1e-3, 10);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    const double tau = r.integral(0.0, s.times[k]);
    CHECK(tau >= -1e-12);
    const Eigen::VectorXd expect = oracle::classical_step(q1, p0, tau);
    CHECK((s.states[k].values() - expect).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::VectorXd y = std::exp(tau) * s.states[k].values();
    CHECK(y.minCoeff() >= 0.0);
  }
}

TEST_CASE("rings relax to the uniform distribution") {
  for (RingVariant v : {RingVariant::kB, RingVariant::kC, RingVariant::kD}) {
    const auto s = integrate(build_ring(v, 0.5), ProbabilityVector::basis(4, 0), 40.0, 1e-3, 1000);
    CHECK((s.states.back().values().array() - 0.25).abs().maxCoeff() < 0.01);
  }
}

TEST_CASE("ring (c) effective clockwise rate approaches the Markovian value") {
  const double gamma = 0.5;
  const auto s = integrate(build_ring(RingVariant::kC, gamma), ProbabilityVector::basis(4, 0), 40.0, 1e-3, 100);
  // r < 0 on [38, 40); sample its middle.
  const double t = 39.0;
  const double r = ring_r(gamma)(t);
  REQUIRE(r < 0.0);
  const auto& p = at(s, t);
  for (int i = 0; i < 4; ++i) {
    const double eff = gamma + std::abs(r) * p[ring_next(i, 4)] / p[i];
    CHECK(std::abs(eff - 2 * gamma) / (2 * gamma) < 0.05);
  }
}

TEST_CASE("sampler basics") {
  RateMatrixSpec zero;
  zero.n = 3;
  const auto still = sample_ensemble(zero, {{10, 20, 30}}, 2.0, 1e-2, 1);
  for (const auto& e : still.states) CHECK(e.counts == std::vector<std::int64_t>{10, 20, 30});
  CHECK(still.events.empty());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = sample_ensemble(kNonMarkov, {{0, 1000}}, 12.0, 1e-3, seed, 100);
    for (const auto& e : s.states) CHECK(e.counts[0] == 0);
  }
  CHECK_THROWS_AS(sample_ensemble(kMarkov, {{10, 10}}, 1.0, 0.5, 1), StepSizeError);
  CHECK_THROWS_AS(sample_ensemble(kMarkov, {{10, -1}}, 1.0, 1e-3, 1), DomainError);
  CHECK_THROWS_AS(sample_ensemble(kMarkov, {{10}}, 1.0, 1e-3, 1), StructuralError);
}

TEST_CASE("sampler conserves members and is deterministic") {
  const RateMatrixSpec a = build_ring(RingVariant::kA, 0.5);
  const auto s1 = sample_ensemble(a, {{1000, 0, 0, 0}}, 8.0, 1e-4, 42, 100);
  const auto s2 = sample_ensemble(a, {{1000, 0, 0, 0}}, 8.0, 1e-4, 42, 100);
  REQUIRE(s1.states.size() == s2.states.size());
  for (std::size_t k = 0; k < s1.states.size(); ++k) {
    CHECK(s1.states[k].total() == 1000);
    CHECK(s1.states[k].counts == s2.states[k].counts);
  }
  double last = 0.0;
  for (const auto& ev : s1.events) {
    CHECK(ev.time >= last);
    last = ev.time;
    CHECK(ev.from != ev.to);
    CHECK(ev.count > 0);
  }
}

TEST_CASE("sampler matches the rate equation on all rings") {
  const std::int64_t n = 10000;
  const double dt = 1e-5;
  const std::vector<double> checkpoints{5.0, 10.0, 15.0, 20.0, 25.0};
  const int replicates = 8;
  for (RingVariant v : {RingVariant::kA, RingVariant::kB, RingVariant::kC, RingVariant::kD}) {
    const RateMatrixSpec spec = build_ring(v, 0.5);
    const auto ode = integrate(spec, ProbabilityVector::basis(4, 0), 25.0, 1e-3, 100);
    std::vector<EnsembleSeries> reps;
    for (int r = 0; r < replicates; ++r) {
      reps.push_back(sample_ensemble(spec, {{n, 0, 0, 0}}, 25.0, dt, 500 + r, 100000));
    }
    const auto run = sample_ensemble(spec, {{n, 0, 0, 0}}, 25.0, dt, 12345, 100000);
    for (double t : checkpoints) {
      for (int i = 0; i < 4; ++i) {
        const double p = at(ode, t)[i];
        double mean = 0.0, ss = 0.0;
        for (const auto& e : reps) mean += at(e, t).counts[i] / double(n);
        mean /= replicates;
        for (const auto& e : reps) ss += std::pow(at(e, t).counts[i] / double(n) - mean, 2);
        const double sigma = std::max(std::sqrt(std::max(0.0, p * (1 - p)) / n), std::sqrt(ss / (replicates - 1)));
        const double got = at(run, t).counts[i] / double(n);
        INFO(spec.topology << " t " << t << " state " << i << " got " << got << " ode " << p << " sigma " << sigma);
        CHECK(std::abs(got - p) <= 4 * sigma);
      }
    }
  }
}
