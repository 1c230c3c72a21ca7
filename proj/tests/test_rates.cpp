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

#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "tlme/errors.hpp"
#include "tlme/rates.hpp"

using tlme::rates::RateFunction;

namespace {

const double kPi = std::numbers::pi;

RateFunction gamma1() {
  return RateFunction::piecewise({5.0, 10.0}, {0.4, 0.0, 0.4}, 5.0, 10.0);
}
RateFunction gamma2() {
  return RateFunction::piecewise({5.0, 10.0}, {0.0, 0.4, 0.0}, 5.0, 10.0);
}

std::vector<std::pair<std::string, RateFunction>> zoo() {
  return {
      {"constant", RateFunction::constant(-0.7)},
      {"piecewise", RateFunction::piecewise({0.5, 1.75, 3.0}, {1.0, -2.0, 0.25, 0.6})},
      {"cyclic", gamma1()},
      {"sign_periodic", RateFunction::sign_periodic(0.5, -kPi / 2.0)},
      {"sign_periodic_odd", RateFunction::sign_periodic(0.37, 1.1, -1)},
      {"difference", RateFunction::difference(gamma1(), gamma2())},
      {"nested", tlme::rates::sum(RateFunction::constant(0.5),
                                  RateFunction::sign_periodic(0.5, kPi / 2.0))},
      {"tabulated", RateFunction::tabulated({{0.0, 0.3}, {2.5, -0.1}, {7.0, 1.2}, {20.0, 1.2}})},
  };
}

}  // namespace

TEST_CASE("evaluate matches the reference values") {
  CHECK(RateFunction::constant(0.4).evaluate(2.0) == 0.4);
  CHECK(gamma1().evaluate(6.0) == 0.0);
  CHECK(RateFunction::sign_periodic(0.5, -kPi / 2.0).evaluate(1.0) == 0.5);
}

TEST_CASE("evaluate rejects negative times and out-of-range tables") {
  CHECK_THROWS_AS(RateFunction::constant(1.0).evaluate(-1e-3), tlme::DomainError);
  const auto tab = RateFunction::tabulated({{0.0, 1.0}, {2.0, 3.0}});
  CHECK(tab.evaluate(1.0) == 1.0);
  CHECK(tab.evaluate(2.0) == 3.0);
  CHECK_THROWS_AS(tab.evaluate(2.5), tlme::DomainError);
}

TEST_CASE("switching instants take the value from the right") {
  const auto g = gamma1();
  CHECK(g.evaluate(5.0) == 0.0);
  CHECK(g.left_limit(5.0) == 0.4);
  CHECK(g.evaluate(10.0) == 0.4);
  // The tables repeat with period 2 (s2 - s1) after s1.
  CHECK(g.evaluate(12.0) == 0.4);
  CHECK(g.evaluate(16.0) == 0.0);
  CHECK(g.evaluate(20.0) == 0.4);
  const auto f = RateFunction::sign_periodic(0.5, -kPi / 2.0);
  CHECK(f.evaluate(0.0) == 0.5);
  CHECK(f.evaluate(2.0) == 0.0);
  CHECK(f.left_limit(2.0) == 0.5);
  CHECK(f.evaluate(4.0) == 0.5);
}

TEST_CASE("sign-periodic rates take only the values 0 and gamma") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> t(0.0, 50.0);
  const auto f = RateFunction::sign_periodic(0.8, 0.3, -1);
  for (int k = 0; k < 500; ++k) {
    const double v = f.evaluate(t(rng));
    CHECK((v == 0.0 || v == 0.8));
  }
}

TEST_CASE("difference evaluates pointwise") {
  const auto a = RateFunction::sign_periodic(0.5, -kPi / 2.0);
  const auto b = RateFunction::sign_periodic(0.5, kPi / 2.0);
  const auto r = RateFunction::difference(a, b);
  for (double t = 0.05; t < 12.0; t += 0.1) CHECK(r.evaluate(t) == a.evaluate(t) - b.evaluate(t));
  CHECK(r.evaluate(1.0) == 0.5);
  CHECK(r.evaluate(3.0) == -0.5);
}

TEST_CASE("integral reference values") {
  CHECK(RateFunction::constant(0.4).integral(0.0, 7.5) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(std::abs(RateFunction::difference(gamma1(), gamma2()).integral(0.0, 10.0)) < 1e-15);
  for (const auto& [name, f] : zoo()) {
    INFO(name);
    CHECK(f.integral(3.3, 3.3) == 0.0);
  }
  CHECK_THROWS_AS(RateFunction::constant(1.0).integral(2.0, 1.0), tlme::DomainError);
  CHECK_THROWS_AS(RateFunction::constant(1.0).integral(-1.0, 1.0), tlme::DomainError);
}

TEST_CASE("integral agrees with adaptive quadrature of evaluate") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (const auto& [name, f] : zoo()) {
    INFO(name);
    for (int k = 0; k < 100; ++k) {
      const double t = u(rng);
      const double quad = oracle::adaptive_simpson([&](double s) { return f.evaluate(s); }, 0.0, t);
      CHECK(std::abs(f.integral(0.0, t) - quad) < 1e-10);
    }
  }
}

TEST_CASE("integral is additive") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (const auto& [name, f] : zoo()) {
    INFO(name);
    for (int k = 0; k < 50; ++k) {
      double x[3] = {u(rng), u(rng), u(rng)};
      std::sort(x, x + 3);
      CHECK(std::abs(f.integral(x[0], x[1]) + f.integral(x[1], x[2]) - f.integral(x[0], x[2])) < 1e-12);
    }
  }
}

TEST_CASE("sign-periodic ring rate has period four seconds") {
  const auto f = RateFunction::sign_periodic(0.5, -kPi / 2.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int k = 0; k < 200; ++k) {
    const double t = u(rng);
    if (std::abs(t / 2.0 - std::round(t / 2.0)) < 1e-6) continue;
    CHECK(f.evaluate(t) == f.evaluate(t + 4.0));
  }
}

TEST_CASE("breakpoints reference values") {
  CHECK(RateFunction::constant(0.4).breakpoints(0.0, 10.0).empty());
  const auto b1 = gamma1().breakpoints(0.0, 12.0);
  REQUIRE(b1.size() == 2);
  CHECK(b1[0] == doctest::Approx(5.0));
  CHECK(b1[1] == doctest::Approx(10.0));
  const auto b2 = RateFunction::sign_periodic(0.5, -kPi / 2.0).breakpoints(0.0, 8.0);
  REQUIRE(b2.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(b2[k] == doctest::Approx(2.0 * (k + 1)).epsilon(1e-12));
}

TEST_CASE("breakpoints of a difference skip cancelling switches") {
  // f - g switches at every multiple of 2 but is never constant across them.
  const auto r = RateFunction::difference(RateFunction::sign_periodic(0.5, -kPi / 2.0),
                                          RateFunction::sign_periodic(0.5, kPi / 2.0));
  CHECK(r.breakpoints(0.0, 8.0).size() == 4);
  const auto same = RateFunction::difference(RateFunction::sign_periodic(0.5, 0.2),
                                             RateFunction::sign_periodic(0.5, 0.2));
  CHECK(same.breakpoints(0.0, 20.0).empty());
}

TEST_CASE("minimum over an interval") {
  const auto r = RateFunction::difference(gamma1(), gamma2());
  CHECK(r.minimum(0.0, 5.0) == 0.4);
  CHECK(r.minimum(0.0, 5.5) == -0.4);
  CHECK(r.minimum(10.0, 15.0) == 0.4);
}

TEST_CASE("piecewise construction is validated") {
  CHECK_THROWS(RateFunction::piecewise({2.0, 1.0}, {1.0, 2.0, 3.0}));
  CHECK_THROWS(RateFunction::piecewise({1.0}, {1.0}));
  CHECK_THROWS(RateFunction::tabulated({}));
}

TEST_CASE("tabulated integral is the step sum") {
  const auto tab = RateFunction::tabulated({{0.0, 1.0}, {1.0, -2.0}, {3.0, 0.5}, {6.0, 0.5}});
  CHECK(tab.integral(0.0, 6.0) == doctest::Approx(1.0 - 4.0 + 1.5));
  CHECK(tab.integral(0.5, 2.0) == doctest::Approx(0.5 - 2.0));
}
