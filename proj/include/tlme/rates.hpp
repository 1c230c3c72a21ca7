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

#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace tlme::rates {

/// Two discontinuities closer than this are reported once.
inline constexpr double kBreakpointTolerance = 1e-12;

struct Constant {
  double value = 0.0;
};

/// values[0] on [0, b_1), values[j] on [b_j, b_{j+1}), values.back() on
/// [b_m, inf). With period > 0 the window [cycle_start, cycle_start + period)
/// repeats forever.
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double cycle_start = 0.0;
  double period = 0.0;
};

/// (gamma/2) * (1 + sign * sgn[cos(gamma*pi*t + phase)]), so values are 0 or
/// gamma and the period is 2/gamma.
struct SignPeriodic {
  double gamma = 0.0;
  double phase = 0.0;
  int sign = 1;
};

class RateFunction;

struct Difference {
  std::shared_ptr<const RateFunction> a;
  std::shared_ptr<const RateFunction> b;
};

/// Previous-sample step interpolation over [samples.front().first,
/// samples.back().first].
struct Tabulated {
  std::vector<std::pair<double, double>> samples;
};

/// A real rate of time (units 1/s), possibly negative. Every variant is
/// piecewise constant and right-continuous: at a switching instant the value
/// is the limit from above. Immutable once built.
class RateFunction {
 public:
  using Variant =
      std::variant<Constant, PiecewiseConstant, SignPeriodic, Difference, Tabulated>;

  RateFunction() : v_(Constant{}) {}

  static RateFunction constant(double value);
  static RateFunction piecewise(std::vector<double> breakpoints, std::vector<double> values,
                                double cycle_start = 0.0, double period = 0.0);
  static RateFunction sign_periodic(double gamma, double phase, int sign = 1);
  static RateFunction difference(RateFunction a, RateFunction b);
  static RateFunction tabulated(std::vector<std::pair<double, double>> samples);

  double operator()(double t) const { return evaluate(t); }
  double evaluate(double t) const;
  /// Limit from below; equals evaluate() away from discontinuities.
  double left_limit(double t) const;
  double integral(double t0, double t1) const;
  /// Discontinuities in (t0, t1], sorted and deduplicated.
  std::vector<double> breakpoints(double t0, double t1) const;
  /// Exact minimum over [t0, t1).
  double minimum(double t0, double t1) const;

  const Variant& variant() const { return v_; }

 private:
  explicit RateFunction(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline double evaluate(const RateFunction& f, double t) { return f.evaluate(t); }
inline double integral(const RateFunction& f, double t0, double t1) { return f.integral(t0, t1); }
inline std::vector<double> breakpoints(const RateFunction& f, double t0, double t1) {
  return f.breakpoints(t0, t1);
}

/// a + b, spelled as a - (0 - b).
RateFunction sum(RateFunction a, RateFunction b);

/// Sorted union of the discontinuities of all rates in (t0, t1].
std::vector<double> merged_breakpoints(const std::vector<const RateFunction*>& fs, double t0,
                                       double t1);

}  // namespace tlme::rates
