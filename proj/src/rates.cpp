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

#include "tlme/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tlme/errors.hpp"

namespace tlme::rates {
namespace {

constexpr double kTol = kBreakpointTolerance;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_time(double t) {
  if (!std::isfinite(t) || t < 0.0) {
    std::ostringstream os;
    os << "rate evaluated at invalid time t=" << t;
    throw DomainError(os.str());
  }
}

void check_interval(double t0, double t1) {
  check_time(t0);
  check_time(t1);
  if (t1 < t0) {
    std::ostringstream os;
    os << "inverted interval [" << t0 << ", " << t1 << "]";
    throw DomainError(os.str());
  }
}

void sort_dedup(std::vector<double>& ts) {
  std::sort(ts.begin(), ts.end());
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) {
    if (out.empty() || t - out.back() > kTol) out.push_back(t);
  }
  ts = std::move(out);
}

// ---- piecewise constant -------------------------------------------------

// Index of the piece active at t (right-continuous); breakpoints within kTol
// of t count as reached.
std::size_t piece_at(const std::vector<double>& bps, double t) {
  return static_cast<std::size_t>(
      std::upper_bound(bps.begin(), bps.end(), t + kTol) - bps.begin());
}

std::size_t piece_before(const std::vector<double>& bps, double t) {
  return static_cast<std::size_t>(
      std::lower_bound(bps.begin(), bps.end(), t - kTol) - bps.begin());
}

bool cycles(const PiecewiseConstant& p) { return p.period > 0.0; }

// Folds t into [0, cycle_start + period). at_window_end selects the left
// representative when t lands on a window boundary.
double fold(const PiecewiseConstant& p, double t, bool left) {
  const double end = p.cycle_start + p.period;
  if (!cycles(p) || t < end - kTol) return t;
  double r = std::fmod(t - p.cycle_start, p.period);
  if (r < kTol || p.period - r < kTol) {
    // On a restart instant.
    return left ? end : p.cycle_start;
  }
  return p.cycle_start + r;
}

double pw_eval(const PiecewiseConstant& p, double t) {
  return p.values[piece_at(p.breakpoints, fold(p, t, false))];
}

double pw_left(const PiecewiseConstant& p, double t) {
  if (t <= kTol) return p.values.front();
  return p.values[piece_before(p.breakpoints, fold(p, t, true))];
}

// Integral over [0, x] without folding.
double pw_window_integral(const PiecewiseConstant& p, double x) {
  double acc = 0.0;
  double lo = 0.0;
  for (std::size_t j = 0; j < p.breakpoints.size() && p.breakpoints[j] < x; ++j) {
    acc += p.values[j] * (p.breakpoints[j] - lo);
    lo = p.breakpoints[j];
  }
  acc += p.values[piece_at(p.breakpoints, lo)] * (x - lo);
  return acc;
}

double pw_antiderivative(const PiecewiseConstant& p, double x) {
  const double end = p.cycle_start + p.period;
  if (!cycles(p) || x <= end) return pw_window_integral(p, x);
  const double start_area = pw_window_integral(p, p.cycle_start);
  const double cycle_area = pw_window_integral(p, end) - start_area;
  const double k = std::floor((x - p.cycle_start) / p.period);
  double r = x - p.cycle_start - k * p.period;
  r = std::clamp(r, 0.0, p.period);
  return start_area + k * cycle_area + (pw_window_integral(p, p.cycle_start + r) - start_area);
}

std::vector<double> pw_candidates(const PiecewiseConstant& p, double t0, double t1) {
  std::vector<double> out;
  for (double b : p.breakpoints) {
    if (b > t0 + kTol && b <= t1 + kTol) out.push_back(b);
  }
  if (cycles(p)) {
    const double first_k = std::max(1.0, std::floor((t0 - p.cycle_start) / p.period));
    for (double k = first_k;; k += 1.0) {
      const double base = p.cycle_start + k * p.period;
      if (base > t1 + kTol) break;
      if (base > t0 + kTol) out.push_back(base);
      for (double b : p.breakpoints) {
        if (b < p.cycle_start) continue;
        const double tb = base + (b - p.cycle_start);
        if (tb > t0 + kTol && tb <= t1 + kTol) out.push_back(tb);
      }
    }
  }
  return out;
}

// ---- sign periodic -------------------------------------------------------

double sp_offset(const SignPeriodic& s) {
  return (s.phase - std::numbers::pi / 2.0) / std::numbers::pi;
}

// u is the phase in units of pi, shifted so that cos changes sign at integer
// u. Snaps to the nearest integer within the breakpoint tolerance.
struct Phase {
  double u;
  bool on_integer;
  double nearest;
};

Phase sp_phase(const SignPeriodic& s, double t) {
  const double u = s.gamma * t + sp_offset(s);
  const double r = std::nearbyint(u);
  const double tol = s.gamma * kTol + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(u);
  return {u, std::abs(u - r) <= tol, r};
}

// sgn(cos) on the open unit cell (m, m+1) of u: negative for even m.
double sp_value_on_cell(const SignPeriodic& s, double m) {
  const bool odd = std::fmod(std::abs(m), 2.0) == 1.0;
  const double sgn = odd ? 1.0 : -1.0;
  return 0.5 * s.gamma * (1.0 + s.sign * sgn);
}

double sp_eval(const SignPeriodic& s, double t) {
  if (s.gamma == 0.0) return 0.0;
  const Phase ph = sp_phase(s, t);
  return sp_value_on_cell(s, ph.on_integer ? ph.nearest : std::floor(ph.u));
}

double sp_left(const SignPeriodic& s, double t) {
  if (s.gamma == 0.0) return 0.0;
  const Phase ph = sp_phase(s, t);
  return sp_value_on_cell(s, ph.on_integer ? ph.nearest - 1.0 : std::floor(ph.u));
}

// Lebesgue measure of {v <= u : floor(v) odd}, up to a constant.
double odd_cell_measure(double u) {
  const double pairs = std::floor(u / 2.0);
  return pairs + std::clamp(u - 2.0 * pairs - 1.0, 0.0, 1.0);
}

double sp_integral(const SignPeriodic& s, double t0, double t1) {
  if (s.gamma == 0.0) return 0.0;
  const double c = sp_offset(s);
  const double u0 = s.gamma * t0 + c;
  const double u1 = s.gamma * t1 + c;
  // The value is gamma on a set of u-measure P, and dt = du / gamma.
  const double positive = odd_cell_measure(u1) - odd_cell_measure(u0);
  return s.sign > 0 ? positive : (u1 - u0) - positive;
}

std::vector<double> sp_candidates(const SignPeriodic& s, double t0, double t1) {
  std::vector<double> out;
  if (s.gamma == 0.0) return out;
  const double c = sp_offset(s);
  const Phase p0 = sp_phase(s, t0);
  const Phase p1 = sp_phase(s, t1);
  const double first = p0.on_integer ? p0.nearest + 1.0 : std::floor(p0.u) + 1.0;
  const double last = p1.on_integer ? p1.nearest : std::floor(p1.u);
  for (double m = first; m <= last; m += 1.0) out.push_back((m - c) / s.gamma);
  return out;
}

// ---- tabulated -----------------------------------------------------------

void tab_check(const Tabulated& tab, double t) {
  if (t < tab.samples.front().first - kTol || t > tab.samples.back().first + kTol) {
    std::ostringstream os;
    os << "t=" << t << " outside tabulated range [" << tab.samples.front().first << ", "
       << tab.samples.back().first << "]";
    throw DomainError(os.str());
  }
}

std::size_t tab_index(const Tabulated& tab, double t) {
  auto it = std::upper_bound(tab.samples.begin(), tab.samples.end(), t + kTol,
                             [](double x, const auto& s) { return x < s.first; });
  return it == tab.samples.begin() ? 0 : static_cast<std::size_t>(it - tab.samples.begin()) - 1;
}

double tab_eval(const Tabulated& tab, double t) {
  tab_check(tab, t);
  return tab.samples[tab_index(tab, t)].second;
}

double tab_left(const Tabulated& tab, double t) {
  tab_check(tab, t);
  auto it = std::lower_bound(tab.samples.begin(), tab.samples.end(), t - kTol,
                             [](const auto& s, double x) { return s.first < x; });
  if (it == tab.samples.begin()) return tab.samples.front().second;
  return std::prev(it)->second;
}

double tab_integral(const Tabulated& tab, double t0, double t1) {
  tab_check(tab, t0);
  tab_check(tab, t1);
  double acc = 0.0;
  const auto& s = tab.samples;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double lo = std::max(t0, s[j].first);
    const double hi = std::min(t1, j + 1 < s.size() ? s[j + 1].first : s[j].first);
    if (hi > lo) acc += s[j].second * (hi - lo);
  }
  return acc;
}

std::vector<double> tab_candidates(const Tabulated& tab, double t0, double t1) {
  std::vector<double> out;
  for (std::size_t j = 1; j < tab.samples.size(); ++j) {
    const double t = tab.samples[j].first;
    if (t > t0 + kTol && t <= t1 + kTol) out.push_back(t);
  }
  return out;
}

}  // namespace

RateFunction RateFunction::constant(double value) {
  if (!std::isfinite(value)) throw StructuralError("constant rate must be finite");
  return RateFunction(Constant{value});
}

RateFunction RateFunction::piecewise(std::vector<double> breakpoints, std::vector<double> values,
                                     double cycle_start, double period) {
  if (values.size() != breakpoints.size() + 1) {
    throw StructuralError("piecewise rate needs exactly one more value than breakpoints");
  }
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    if (!std::isfinite(breakpoints[j]) || breakpoints[j] <= 0.0) {
      throw StructuralError("piecewise breakpoints must be positive and finite");
    }
    if (j > 0 && !(breakpoints[j] > breakpoints[j - 1])) {
      throw StructuralError("piecewise breakpoints must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw StructuralError("piecewise values must be finite");
  }
  if (!std::isfinite(period) || period < 0.0 || !std::isfinite(cycle_start) || cycle_start < 0.0) {
    throw StructuralError("piecewise cycle must have finite, non-negative start and period");
  }
  if (period > 0.0 && !breakpoints.empty() && breakpoints.back() >= cycle_start + period) {
    throw StructuralError("piecewise breakpoints must lie inside the first cycle window");
  }
  return RateFunction(PiecewiseConstant{std::move(breakpoints), std::move(values), cycle_start, period});
}

RateFunction RateFunction::sign_periodic(double gamma, double phase, int sign) {
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw StructuralError("sign-periodic amplitude must be finite and non-negative");
  }
  if (!std::isfinite(phase)) throw StructuralError("sign-periodic phase must be finite");
  if (sign != 1 && sign != -1) throw StructuralError("sign-periodic sign must be +1 or -1");
  return RateFunction(SignPeriodic{gamma, phase, sign});
}

RateFunction RateFunction::difference(RateFunction a, RateFunction b) {
  return RateFunction(Difference{std::make_shared<const RateFunction>(std::move(a)),
                                 std::make_shared<const RateFunction>(std::move(b))});
}

RateFunction RateFunction::tabulated(std::vector<std::pair<double, double>> samples) {
  if (samples.empty()) throw StructuralError("tabulated rate needs at least one sample");
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (!std::isfinite(samples[j].first) || samples[j].first < 0.0 ||
        !std::isfinite(samples[j].second)) {
      throw StructuralError("tabulated samples must be finite with non-negative times");
    }
    if (j > 0 && !(samples[j].first > samples[j - 1].first)) {
      throw StructuralError("tabulated sample times must be strictly increasing");
    }
  }
  return RateFunction(Tabulated{std::move(samples)});
}

double RateFunction::evaluate(double t) const {
  check_time(t);
  return std::visit(Overloaded{
                        [](const Constant& c) { return c.value; },
                        [t](const PiecewiseConstant& p) { return pw_eval(p, t); },
                        [t](const SignPeriodic& s) { return sp_eval(s, t); },
                        [t](const Difference& d) { return d.a->evaluate(t) - d.b->evaluate(t); },
                        [t](const Tabulated& tab) { return tab_eval(tab, t); },
                    },
                    v_);
}

double RateFunction::left_limit(double t) const {
  check_time(t);
  return std::visit(Overloaded{
                        [](const Constant& c) { return c.value; },
                        [t](const PiecewiseConstant& p) { return pw_left(p, t); },
                        [t](const SignPeriodic& s) { return sp_left(s, t); },
                        [t](const Difference& d) { return d.a->left_limit(t) - d.b->left_limit(t); },
                        [t](const Tabulated& tab) { return tab_left(tab, t); },
                    },
                    v_);
}

double RateFunction::integral(double t0, double t1) const {
  check_interval(t0, t1);
  if (t0 == t1) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Constant& c) { return c.value * (t1 - t0); },
          [&](const PiecewiseConstant& p) { return pw_antiderivative(p, t1) - pw_antiderivative(p, t0); },
          [&](const SignPeriodic& s) { return sp_integral(s, t0, t1); },
          [&](const Difference& d) { return d.a->integral(t0, t1) - d.b->integral(t0, t1); },
          [&](const Tabulated& tab) { return tab_integral(tab, t0, t1); },
      },
      v_);
}

std::vector<double> RateFunction::breakpoints(double t0, double t1) const {
  check_interval(t0, t1);
  std::vector<double> cand = std::visit(
      Overloaded{
          [](const Constant&) { return std::vector<double>{}; },
          [&](const PiecewiseConstant& p) { return pw_candidates(p, t0, t1); },
          [&](const SignPeriodic& s) { return sp_candidates(s, t0, t1); },
          [&](const Difference& d) {
            auto a = d.a->breakpoints(t0, t1);
            auto b = d.b->breakpoints(t0, t1);
            a.insert(a.end(), b.begin(), b.end());
            return a;
          },
          [&](const Tabulated& tab) { return tab_candidates(tab, t0, t1); },
      },
      v_);
  sort_dedup(cand);
  std::vector<double> out;
  out.reserve(cand.size());
  for (double t : cand) {
    if (evaluate(t) != left_limit(t)) out.push_back(t);
  }
  return out;
}

double RateFunction::minimum(double t0, double t1) const {
  double m = evaluate(t0);
  for (double b : breakpoints(t0, t1)) {
    if (b < t1 - kTol) m = std::min(m, evaluate(b));
  }
  return m;
}

RateFunction sum(RateFunction a, RateFunction b) {
  return RateFunction::difference(std::move(a),
                                  RateFunction::difference(RateFunction::constant(0.0), std::move(b)));
}

std::vector<double> merged_breakpoints(const std::vector<const RateFunction*>& fs, double t0,
                                       double t1) {
  std::vector<double> all;
  for (const RateFunction* f : fs) {
    auto b = f->breakpoints(t0, t1);
    all.insert(all.end(), b.begin(), b.end());
  }
  sort_dedup(all);
  return all;
}

}  // namespace tlme::rates
