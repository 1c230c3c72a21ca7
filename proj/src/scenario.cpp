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

#include "tlme/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tlme/classical.hpp"
#include "tlme/errors.hpp"
#include "tlme/mcwf.hpp"
#include "tlme/me_integrator.hpp"
#include "tlme/nmqj.hpp"
#include "tlme/quantum.hpp"

namespace tlme::scenario {
namespace {

using classical::RingVariant;
using classical::TwoStateVariant;
using quantum::DensityMatrix;
using quantum::StateVector;
using quantum::TimeLocalGenerator;
using rates::RateFunction;

const std::vector<std::string> kEngines = {"ode", "mcwf", "nmqj", "classical-ode",
                                           "classical-ensemble", "cp-audit"};

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field + ": " + message);
}

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path + key, "missing");
  return j.at(key);
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return number(j.at(key), path + key);
}

std::int64_t integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::string text(const Json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

RateFunction parse_rate(const Json& j, const std::string& field) {
  const std::string type = text(require(j, "type", field + "."), field + ".type");
  try {
    if (type == "constant") return RateFunction::constant(number(require(j, "value", field + "."), field + ".value"));
    if (type == "piecewise") {
      return RateFunction::piecewise(numbers(require(j, "breakpoints", field + "."), field + ".breakpoints"),
                                     numbers(require(j, "values", field + "."), field + ".values"),
                                     number_or(j, "cycle_start", 0.0, field + "."),
                                     number_or(j, "period", 0.0, field + "."));
    }
    if (type == "sign_periodic") {
      const double sign = number_or(j, "sign", 1.0, field + ".");
      if (sign != 1.0 && sign != -1.0) fail(field + ".sign", "must be +1 or -1");
      return RateFunction::sign_periodic(number(require(j, "gamma", field + "."), field + ".gamma"),
                                         number_or(j, "phase", 0.0, field + "."), static_cast<int>(sign));
    }
    if (type == "difference" || type == "sum") {
      RateFunction a = parse_rate(require(j, "a", field + "."), field + ".a");
      RateFunction b = parse_rate(require(j, "b", field + "."), field + ".b");
      return type == "sum" ? rates::sum(a, b) : RateFunction::difference(a, b);
    }
    if (type == "tabulated") {
      const Json& s = require(j, "samples", field + ".");
      if (!s.is_array()) fail(field + ".samples", "expected an array of [t, value] pairs");
      std::vector<std::pair<double, double>> samples;
      for (std::size_t k = 0; k < s.size(); ++k) {
        const std::string f = field + ".samples[" + std::to_string(k) + "]";
        if (!s[k].is_array() || s[k].size() != 2) fail(f, "expected [t, value]");
        samples.emplace_back(number(s[k][0], f), number(s[k][1], f));
      }
      return RateFunction::tabulated(std::move(samples));
    }
  } catch (const DomainError& e) {
    fail(field, e.what());
  } catch (const StructuralError& e) {
    fail(field, e.what());
  }
  fail(field + ".type", "unknown rate type '" + type + "'");
}

Complex parse_complex(const Json& j, const std::string& field) {
  if (j.is_array()) {
    if (j.size() != 2) fail(field, "complex entries are [re, im]");
    return {number(j[0], field), number(j[1], field)};
  }
  return {number(j, field), 0.0};
}

CMatrix parse_matrix(const Json& j, int d, const std::string& field) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (d == 2 && name == "sigma_minus") return quantum::sigma_minus();
    if (d == 2 && name == "sigma_plus") return quantum::sigma_minus().adjoint();
    if (d == 2 && name == "sigma_z") return quantum::matrix_unit(2, 0, 0) - quantum::matrix_unit(2, 1, 1);
    fail(field, "unknown named operator '" + name + "'");
  }
  if (!j.is_array() || static_cast<int>(j.size()) != d) fail(field, "expected " + std::to_string(d) + " rows");
  CMatrix m(d, d);
  for (int r = 0; r < d; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != d) {
      fail(field + "[" + std::to_string(r) + "]", "expected " + std::to_string(d) + " entries");
    }
    for (int c = 0; c < d; ++c) {
      m(r, c) = parse_complex(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

TimeLocalGenerator parse_generator(const Json& sys) {
  const std::int64_t d = integer(require(sys, "dimension", "system."), "system.dimension");
  if (d < 1 || d > 64) fail("system.dimension", "must be between 1 and 64");
  const int dim = static_cast<int>(d);
  const CMatrix h = sys.contains("hamiltonian") ? parse_matrix(sys["hamiltonian"], dim, "system.hamiltonian")
                                                : CMatrix::Zero(dim, dim);
  const Json& chans = require(sys, "channels", "system.");
  if (!chans.is_array()) fail("system.channels", "expected an array");
  std::vector<quantum::Channel> channels;
  for (std::size_t k = 0; k < chans.size(); ++k) {
    const std::string f = "system.channels[" + std::to_string(k) + "]";
    const std::string label = chans[k].contains("label") ? text(chans[k]["label"], f + ".label") : "L" + std::to_string(k);
    try {
      channels.emplace_back(parse_matrix(require(chans[k], "operator", f + "."), dim, f + ".operator"),
                            parse_rate(require(chans[k], "rate", f + "."), f + ".rate"), label);
    } catch (const StructuralError& e) {
      fail(f, e.what());
    }
  }
  try {
    return TimeLocalGenerator(h, std::move(channels));
  } catch (const StructuralError& e) {
    fail("system", e.what());
  }
}

StateVector parse_state(const Json& init, int d) {
  if (init.contains("basis")) {
    const std::int64_t k = integer(init["basis"], "initial.basis");
    if (k < 0 || k >= d) fail("initial.basis", "index out of range");
    return StateVector::basis(d, static_cast<int>(k));
  }
  if (init.contains("amplitudes")) {
    const Json& a = init["amplitudes"];
    if (!a.is_array() || static_cast<int>(a.size()) != d) fail("initial.amplitudes", "expected " + std::to_string(d) + " entries");
    CVector v(d);
    for (int k = 0; k < d; ++k) v(k) = parse_complex(a[k], "initial.amplitudes[" + std::to_string(k) + "]");
    if (v.norm() == 0.0) fail("initial.amplitudes", "null vector");
    return StateVector(v);
  }
  fail("initial", "expected 'basis' or 'amplitudes'");
}

DensityMatrix parse_density(const Json& init, int d) {
  if (init.contains("density")) {
    try {
      return DensityMatrix(parse_matrix(init["density"], d, "initial.density"));
    } catch (const DomainError& e) {
      fail("initial.density", e.what());
    }
  }
  return DensityMatrix::pure(parse_state(init, d));
}

classical::RateMatrixSpec parse_rate_matrix(const Json& sys) {
  try {
    if (sys.contains("preset")) {
      const std::string preset = text(sys["preset"], "system.preset");
      const std::string variant = text(require(sys, "variant", "system."), "system.variant");
      const double gamma = number(require(sys, "gamma", "system."), "system.gamma");
      if (preset == "two_state") {
        TwoStateVariant v;
        if (variant == "markov") {
          v = TwoStateVariant::kMarkov;
        } else if (variant == "nonmarkov") {
          v = TwoStateVariant::kNonMarkov;
        } else {
          fail("system.variant", "expected markov or nonmarkov");
        }
        return classical::build_two_state(v, gamma, number(require(sys, "s1", "system."), "system.s1"),
                                          number(require(sys, "s2", "system."), "system.s2"));
      }
      if (preset == "ring") {
        static const std::map<std::string, RingVariant> kRing = {
            {"a", RingVariant::kA}, {"b", RingVariant::kB}, {"c", RingVariant::kC}, {"d", RingVariant::kD}};
        const auto it = kRing.find(variant);
        if (it == kRing.end()) fail("system.variant", "expected a, b, c or d");
        const int n = sys.contains("n") ? static_cast<int>(integer(sys["n"], "system.n")) : 4;
        return classical::build_ring(it->second, gamma, n);
      }
      fail("system.preset", "unknown preset '" + preset + "'");
    }
    classical::RateMatrixSpec spec;
    spec.n = static_cast<int>(integer(require(sys, "n", "system."), "system.n"));
    spec.topology = sys.contains("topology") ? text(sys["topology"], "system.topology") : "custom";
    const Json& list = require(sys, "rates", "system.");
    if (!list.is_array()) fail("system.rates", "expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string f = "system.rates[" + std::to_string(k) + "]";
      const int from = static_cast<int>(integer(require(list[k], "from", f + "."), f + ".from"));
      const int to = static_cast<int>(integer(require(list[k], "to", f + "."), f + ".to"));
      if (spec.rates.count({to, from})) fail(f, "duplicate transition");
      spec.rates[{to, from}] = parse_rate(require(list[k], "rate", f + "."), f + ".rate");
    }
    spec.validate();
    return spec;
  } catch (const DomainError& e) {
    fail("system", e.what());
  } catch (const StructuralError& e) {
    fail("system", e.what());
  }
}

classical::ProbabilityVector parse_probabilities(const Json& init, int n) {
  const std::vector<double> p = numbers(require(init, "p", "initial."), "initial.p");
  if (static_cast<int>(p.size()) != n) fail("initial.p", "expected " + std::to_string(n) + " entries");
  try {
    return classical::ProbabilityVector(Eigen::Map<const Eigen::VectorXd>(p.data(), n));
  } catch (const DomainError& e) {
    fail("initial.p", e.what());
  }
}

classical::ClassicalEnsemble parse_counts(const Json& init, int n, std::int64_t total) {
  classical::ClassicalEnsemble ens;
  if (init.contains("counts")) {
    const Json& c = init["counts"];
    if (!c.is_array() || static_cast<int>(c.size()) != n) fail("initial.counts", "expected " + std::to_string(n) + " entries");
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::int64_t v = integer(c[k], "initial.counts[" + std::to_string(k) + "]");
      if (v < 0) fail("initial.counts", "counts must be non-negative");
      ens.counts.push_back(v);
    }
    if (ens.total() != total) fail("initial.counts", "counts must sum to N");
    return ens;
  }
  const classical::ProbabilityVector p = parse_probabilities(init, n);
  for (int k = 0; k < n; ++k) {
    const double x = p[k] * static_cast<double>(total);
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-6) fail("initial.p", "p * N must be whole numbers for an ensemble");
    ens.counts.push_back(static_cast<std::int64_t>(r));
  }
  if (ens.total() != total) fail("initial.p", "p * N does not sum to N");
  return ens;
}

// Output tables ---------------------------------------------------------------

void density_rows(Table& t, const integrator::PropagationResult& r) {
  t.columns = {"t", "row", "col", "re", "im"};
  for (std::size_t s = 0; s < r.times.size(); ++s) {
    const CMatrix& m = r.states[s].matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        t.rows.push_back({r.times[s], std::int64_t{i}, std::int64_t{j}, m(i, j).real(), m(i, j).imag()});
      }
    }
  }
}

RunOutcome engine_ode(const ScenarioConfig& c) {
  const TimeLocalGenerator g = parse_generator(c.system);
  RunOutcome out;
  density_rows(out.table, integrator::propagate(g, parse_density(c.initial, g.dimension()), c.t_end, c.dt, c.stride));
  return out;
}

RunOutcome engine_mcwf(const ScenarioConfig& c) {
  const TimeLocalGenerator g = parse_generator(c.system);
  const auto r = mcwf::run_ensemble(g, parse_state(c.initial, g.dimension()), c.t_end, c.dt,
                                    static_cast<std::size_t>(c.n), c.seed, c.stride);
  RunOutcome out;
  out.max_step_probability = r.max_step_probability;
  out.table.columns = {"t", "row", "col", "re", "im", "se_re", "se_im"};
  std::size_t jumps = 0;
  for (const auto& j : r.jumps) jumps += j.size();
  out.diagnostics["jumps"] = jumps;
  for (std::size_t s = 0; s < r.average.times.size(); ++s) {
    const CMatrix& m = r.average.states[s].matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out.table.rows.push_back({r.average.times[s], std::int64_t{i}, std::int64_t{j}, m(i, j).real(),
                                  m(i, j).imag(), r.std_error_re[s](i, j), r.std_error_im[s](i, j)});
      }
    }
  }
  return out;
}

Json nmqj_diagnostics(const nmqj::EnsembleRun& r) {
  return {{"forward_jumps", r.stats.forward_jumps},
          {"reverse_jumps", r.stats.reverse_jumps},
          {"zero_target_reversals", r.stats.zero_target_reversals},
          {"unmatched_sources", r.stats.unmatched_sources},
          {"ambiguity_warnings", r.stats.ambiguity_warnings},
          {"max_members", r.max_members}};
}

RunOutcome engine_nmqj(const ScenarioConfig& c) {
  const TimeLocalGenerator g = parse_generator(c.system);
  const auto r = nmqj::run_ensemble_nm(g, parse_state(c.initial, g.dimension()), c.t_end, c.dt, c.n, c.seed, c.stride);
  RunOutcome out;
  out.max_step_probability = r.stats.max_step_probability;
  out.diagnostics = nmqj_diagnostics(r);
  if (r.stats.ambiguity_warnings > 0) {
    out.warnings.push_back("reverse jumps with several qualifying targets: " + std::to_string(r.stats.ambiguity_warnings));
  }
  density_rows(out.table, r.average);
  return out;
}

RunOutcome engine_classical_ode(const ScenarioConfig& c) {
  const auto spec = parse_rate_matrix(c.system);
  const auto series = classical::integrate(spec, parse_probabilities(c.initial, spec.n), c.t_end, c.dt, c.stride);
  RunOutcome out;
  out.table.columns = {"t", "state", "p"};
  for (std::size_t s = 0; s < series.times.size(); ++s) {
    for (int k = 0; k < spec.n; ++k) out.table.rows.push_back({series.times[s], std::int64_t{k + 1}, series.states[s][k]});
  }
  return out;
}

RunOutcome engine_classical_ensemble(const ScenarioConfig& c) {
  const auto spec = parse_rate_matrix(c.system);
  const auto series = classical::sample_ensemble(spec, parse_counts(c.initial, spec.n, c.n), c.t_end, c.dt, c.seed, c.stride);
  RunOutcome out;
  out.max_step_probability = series.max_step_probability;
  out.diagnostics["events"] = series.events.size();
  out.table.columns = {"t", "state", "count", "fraction"};
  for (std::size_t s = 0; s < series.times.size(); ++s) {
    for (int k = 0; k < spec.n; ++k) {
      const std::int64_t n = series.states[s].counts[k];
      out.table.rows.push_back({series.times[s], std::int64_t{k + 1}, n, static_cast<double>(n) / static_cast<double>(c.n)});
    }
  }
  return out;
}

std::vector<double> audit_times(const ScenarioConfig& c) {
  if (c.params.contains("times")) return numbers(c.params["times"], "params.times");
  std::vector<double> times;
  for (int k = 1; 0.5 * k <= c.t_end + 1e-12; ++k) times.push_back(0.5 * k);
  return times;
}

double min_channel_integral(const TimeLocalGenerator& g, double t) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ch : g.channels()) m = std::min(m, ch.rate.integral(0.0, t));
  return m;
}

RunOutcome engine_cp_audit(const ScenarioConfig& c) {
  const TimeLocalGenerator g = parse_generator(c.system);
  const double tol = number_or(c.params, "tolerance", integrator::kDefaultCpTolerance, "params.");
  RunOutcome out;
  out.table.columns = {"t", "rate_integral_min", "min_eigenvalue", "is_cp"};
  for (const auto& rep : integrator::cp_check(g, audit_times(c), c.dt, tol)) {
    out.table.rows.push_back({rep.time, min_channel_integral(g, rep.time), rep.min_eigenvalue, std::int64_t{rep.is_cp}});
  }
  return out;
}

// Built-in scenarios ----------------------------------------------------------

double param(const ScenarioConfig& c, const std::string& key, double fallback) {
  return number_or(c.params, key, fallback, "params.");
}

RunOutcome builtin_fig1(const ScenarioConfig& c) {
  const double gamma = param(c, "gamma", 0.4), s1 = param(c, "s1", 5.0), s2 = param(c, "s2", 10.0);
  const std::vector<double> inits =
      c.params.contains("p1_init") ? numbers(c.params["p1_init"], "params.p1_init") : std::vector<double>{1.0, 0.5, 0.0};
  const RateFunction g2 = classical::two_state_gamma2(gamma, s1, s2);
  RunOutcome out;
  out.table.columns = {"t", "variant", "p1_init", "p1", "eff_rate"};
  for (const auto variant : {TwoStateVariant::kMarkov, TwoStateVariant::kNonMarkov}) {
    const bool markov = variant == TwoStateVariant::kMarkov;
    const auto spec = classical::build_two_state(variant, gamma, s1, s2);
    for (double p1 : inits) {
      if (p1 < 0.0 || p1 > 1.0) fail("params.p1_init", "probabilities must lie in [0, 1]");
      const classical::ProbabilityVector p0(Eigen::Vector2d(p1, 1.0 - p1));
      const auto series = classical::integrate(spec, p0, c.t_end, c.dt, c.stride);
      for (std::size_t s = 0; s < series.times.size(); ++s) {
        const double t = series.times[s];
        const double a = series.states[s][0], b = series.states[s][1];
        // Markov rows carry the bare 2 -> 1 rate, non-Markov rows its
        // history-dependent counterpart gamma_2 p1 / p2.
        double eff = g2.evaluate(t);
        if (!markov) {
          if (eff == 0.0 || a == 0.0) {
            eff = 0.0;
          } else {
            eff = b > 0.0 ? eff * a / b : std::numeric_limits<double>::infinity();
          }
        }
        out.table.rows.push_back({t, std::string(markov ? "markov" : "nonmarkov"), p1, a, eff});
      }
    }
  }
  return out;
}

RunOutcome builtin_rings(const ScenarioConfig& c, const std::vector<std::pair<std::string, RingVariant>>& variants) {
  const double gamma = param(c, "gamma", 0.5);
  RunOutcome out;
  out.table.columns = {"t", "variant"};
  for (int k = 1; k <= 4; ++k) out.table.columns.push_back("p" + std::to_string(k));
  for (const auto& [name, v] : variants) {
    const auto spec = classical::build_ring(v, gamma, 4);
    const auto series = classical::integrate(spec, classical::ProbabilityVector::basis(4, 0), c.t_end, c.dt, c.stride);
    for (std::size_t s = 0; s < series.times.size(); ++s) {
      std::vector<Cell> row{series.times[s], name};
      for (int k = 0; k < 4; ++k) row.emplace_back(series.states[s][k]);
      out.table.rows.push_back(std::move(row));
    }
  }
  return out;
}

RunOutcome builtin_fig5(const ScenarioConfig& c) {
  const double gamma = param(c, "gamma", 0.5);
  const int n = 4;
  const RateFunction r = classical::ring_r(gamma);
  const RateFunction g = classical::ring_g(gamma);
  RunOutcome out;
  out.table.columns = {"t", "variant", "state", "eff_rate", "markov_rate"};
  for (const auto v : {RingVariant::kA, RingVariant::kC}) {
    const bool a = v == RingVariant::kA;
    const auto series = classical::integrate(classical::build_ring(v, gamma, n),
                                             classical::ProbabilityVector::basis(n, 0), c.t_end, c.dt, c.stride);
    for (std::size_t s = 0; s < series.times.size(); ++s) {
      const double t = series.times[s];
      const double rt = r.evaluate(t);
      const auto& p = series.states[s];
      for (int i = 0; i < n; ++i) {
        // (a): anti-clockwise i -> i-1 at |r| p_{i-1} / p_i, compared with g.
        // (c): clockwise i -> i+1 at Gamma + |r| p_{i+1} / p_i, compared with Gamma + g.
        const int other = a ? classical::ring_prev(i, n) : classical::ring_next(i, n);
        double eff = 0.0;
        if (rt < 0.0 && p[other] > 0.0) {
          eff = p[i] > 0.0 ? std::abs(rt) * p[other] / p[i] : std::numeric_limits<double>::infinity();
        }
        const double markov = a ? g.evaluate(t) : gamma + g.evaluate(t);
        if (!a) eff += gamma;
        out.table.rows.push_back({t, std::string(a ? "a" : "c"), std::int64_t{i + 1}, eff, markov});
      }
    }
  }
  return out;
}

TimeLocalGenerator two_level_memory(double gamma, double s1, double s2) {
  return quantum::two_level_decay(
      RateFunction::difference(classical::two_state_gamma1(gamma, s1, s2), classical::two_state_gamma2(gamma, s1, s2)));
}

RunOutcome builtin_two_level_q(const ScenarioConfig& c) {
  const double gamma = param(c, "gamma", 0.4), s1 = param(c, "s1", 5.0), s2 = param(c, "s2", 10.0);
  const TimeLocalGenerator g = two_level_memory(gamma, s1, s2);
  const StateVector e = StateVector::basis(2, quantum::kExcited);
  const double ode_dt = param(c, "ode_dt", 1e-3);
  const auto ode = integrator::propagate(g, DensityMatrix::pure(e), c.t_end, ode_dt);
  const auto nm = nmqj::run_ensemble_nm(g, e, c.t_end, c.dt, c.n, c.seed, c.stride);
  RunOutcome out;
  out.max_step_probability = nm.stats.max_step_probability;
  out.diagnostics = nmqj_diagnostics(nm);
  out.table.columns = {"t", "method", "rho_ee", "analytic", "sigma"};
  const RateFunction& rate = g.channels()[0].rate;
  auto ode_at = [&](double t) {
    const auto it = std::lower_bound(ode.times.begin(), ode.times.end(), t - 1e-9);
    return ode.states[static_cast<std::size_t>(it - ode.times.begin())].population(quantum::kExcited);
  };
  for (std::size_t s = 0; s < nm.average.times.size(); ++s) {
    const double t = nm.average.times[s];
    out.table.rows.push_back({t, std::string("ode"), ode_at(t), integrator::survival_factor(rate, t), 0.0});
  }
  for (std::size_t s = 0; s < nm.average.times.size(); ++s) {
    const double t = nm.average.times[s];
    const double p = nm.average.states[s].population(quantum::kExcited);
    out.table.rows.push_back({t, std::string("nmqj"), p, integrator::survival_factor(rate, t),
                              std::sqrt(p * (1.0 - p) / static_cast<double>(c.n))});
  }
  return out;
}

RunOutcome builtin_cp_demo(const ScenarioConfig& c) {
  const double gamma = param(c, "gamma", 0.4);
  const std::vector<std::pair<std::string, RateFunction>> profiles = {
      {"markov", RateFunction::constant(gamma)},
      {"memory", RateFunction::difference(classical::two_state_gamma1(gamma, 5.0, 10.0),
                                          classical::two_state_gamma2(gamma, 5.0, 10.0))},
      {"overshoot", RateFunction::piecewise({2.0, 6.0}, {gamma, -gamma, gamma})},
  };
  RunOutcome out;
  out.table.columns = {"t", "profile", "rate_integral", "min_eigenvalue", "is_cp"};
  for (const auto& [name, rate] : profiles) {
    const TimeLocalGenerator g = quantum::two_level_decay(rate);
    for (const auto& rep : integrator::cp_check(g, audit_times(c), c.dt)) {
      out.table.rows.push_back({rep.time, name, rate.integral(0.0, rep.time), rep.min_eigenvalue, std::int64_t{rep.is_cp}});
    }
  }
  return out;
}

RunOutcome builtin_mcwf_decay(const ScenarioConfig& c) {
  const double gamma = param(c, "gamma", 0.4);
  const RateFunction rate = RateFunction::constant(gamma);
  const auto r = mcwf::run_ensemble(quantum::two_level_decay(rate), StateVector::basis(2, quantum::kExcited), c.t_end,
                                    c.dt, static_cast<std::size_t>(c.n), c.seed, c.stride);
  RunOutcome out;
  out.max_step_probability = r.max_step_probability;
  out.table.columns = {"t", "rho_ee", "std_error", "analytic"};
  for (std::size_t s = 0; s < r.average.times.size(); ++s) {
    const double t = r.average.times[s];
    out.table.rows.push_back({t, r.average.states[s].population(quantum::kExcited), r.std_error_re[s](0, 0),
                              integrator::survival_factor(rate, t)});
  }
  return out;
}

struct Builtin {
  std::string description;
  Json defaults;
  RunOutcome (*run)(const ScenarioConfig&);
};

const std::map<std::string, Builtin>& builtins() {
  static const std::map<std::string, Builtin> table = {
      {"fig1",
       {"Two-state model, Markov vs memory variant, p1(0) in {1, 0.5, 0}, Gamma = 0.4, s1 = 5, s2 = 10",
        {{"t_end", 15.0}, {"dt", 1e-3}, {"stride", 50}, {"params", {{"gamma", 0.4}, {"s1", 5.0}, {"s2", 10.0}}}},
        builtin_fig1}},
      {"fig3",
       {"Four-state rings (a) and (b), Gamma = 0.5, p(0) = (1, 0, 0, 0)",
        {{"t_end", 40.0}, {"dt", 1e-3}, {"stride", 50}, {"params", {{"gamma", 0.5}}}},
        [](const ScenarioConfig& c) { return builtin_rings(c, {{"a", RingVariant::kA}, {"b", RingVariant::kB}}); }}},
      {"fig4",
       {"Four-state rings (c) and (d), Gamma = 0.5, p(0) = (1, 0, 0, 0)",
        {{"t_end", 40.0}, {"dt", 1e-3}, {"stride", 50}, {"params", {{"gamma", 0.5}}}},
        [](const ScenarioConfig& c) { return builtin_rings(c, {{"c", RingVariant::kC}, {"d", RingVariant::kD}}); }}},
      {"fig5",
       {"Effective rates of rings (a) and (c) against their Markovian counterparts",
        {{"t_end", 40.0}, {"dt", 1e-3}, {"stride", 10}, {"params", {{"gamma", 0.5}}}},
        builtin_fig5}},
      {"two_level_q",
       {"Two-level decay with a temporarily negative rate: jump ensemble vs master equation",
        {{"t_end", 10.0}, {"dt", 2e-5}, {"stride", 2500}, {"N", 10000}, {"params", {{"gamma", 0.4}, {"s1", 5.0}, {"s2", 10.0}, {"ode_dt", 1e-3}}}},
        builtin_two_level_q}},
      {"cp_demo",
       {"Choi-matrix audit of three decay profiles, CP exactly while the rate integral is non-negative",
        {{"t_end", 10.0}, {"dt", 1e-3}, {"params", {{"gamma", 0.4}}}},
        builtin_cp_demo}},
      {"mcwf_decay",
       {"Wave-function Monte Carlo for constant decay against the exact solution",
        {{"t_end", 5.0}, {"dt", 1e-3}, {"stride", 100}, {"N", 10000}, {"params", {{"gamma", 0.4}}}},
        builtin_mcwf_decay}},
  };
  return table;
}

void append_cell(std::string& out, const Cell& cell) {
  char buf[64];
  if (const double* d = std::get_if<double>(&cell)) {
    std::snprintf(buf, sizeof buf, "%.12g", *d);
    out += buf;
  } else if (const std::int64_t* i = std::get_if<std::int64_t>(&cell)) {
    out += std::to_string(*i);
  } else {
    out += std::get<std::string>(cell);
  }
}

}  // namespace

std::vector<ScenarioInfo> list_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const auto& [name, b] : builtins()) out.push_back({name, b.description});
  return out;
}

Json builtin_config(const std::string& name) {
  const auto it = builtins().find(name);
  if (it == builtins().end()) fail("scenario", "unknown built-in scenario '" + name + "'");
  Json doc = it->second.defaults;
  doc["schema"] = kSchema;
  doc["name"] = name;
  doc["scenario"] = name;
  doc["seed"] = kDefaultSeed;
  return doc;
}

ScenarioConfig parse_config(const Json& doc) {
  if (!doc.is_object()) fail("config", "expected a JSON object");
  if (text(require(doc, "schema", ""), "schema") != kSchema) fail("schema", std::string("expected '") + kSchema + "'");
  ScenarioConfig c;
  c.document = doc;
  c.name = doc.contains("name") ? text(doc["name"], "name") : "run";
  if (doc.contains("scenario")) {
    c.scenario = text(doc["scenario"], "scenario");
    if (!builtins().count(c.scenario)) fail("scenario", "unknown built-in scenario '" + c.scenario + "'");
  } else {
    c.engine = text(require(doc, "engine", ""), "engine");
    if (std::find(kEngines.begin(), kEngines.end(), c.engine) == kEngines.end()) {
      fail("engine", "unknown engine '" + c.engine + "'");
    }
    c.system = require(doc, "system", "");
    if (!c.system.is_object()) fail("system", "expected an object");
    if (c.engine != "cp-audit") {
      c.initial = require(doc, "initial", "");
      if (!c.initial.is_object()) fail("initial", "expected an object");
    }
  }
  c.params = doc.contains("params") ? doc["params"] : Json::object();
  if (!c.params.is_object()) fail("params", "expected an object");
  c.t_end = number(require(doc, "t_end", ""), "t_end");
  if (c.t_end < 0.0) fail("t_end", "must be non-negative");
  c.dt = number(require(doc, "dt", ""), "dt");
  if (!(c.dt > 0.0)) fail("dt", "must be positive");
  if (doc.contains("stride")) {
    const std::int64_t s = integer(doc["stride"], "stride");
    if (s < 1) fail("stride", "must be at least 1");
    c.stride = static_cast<std::size_t>(s);
  }
  const bool needs_n = c.engine == "mcwf" || c.engine == "nmqj" || c.engine == "classical-ensemble" ||
                       c.scenario == "two_level_q" || c.scenario == "mcwf_decay";
  if (needs_n) {
    c.n = integer(require(doc, "N", ""), "N");
    if (c.n < 1) fail("N", "must be at least 1");
  } else if (doc.contains("N")) {
    c.n = integer(doc["N"], "N");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0)) {
      fail("seed", "expected a non-negative integer");
    }
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    if (!o.is_object()) fail("output", "expected an object");
    if (o.contains("format")) c.format = text(o["format"], "output.format");
    if (o.contains("path")) c.output_path = text(o["path"], "output.path");
  }
  if (c.format != "csv" && c.format != "json") fail("output.format", "expected csv or json");
  return c;
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

RunOutcome execute(const ScenarioConfig& c) {
  RunOutcome out;
  if (!c.scenario.empty()) {
    out = builtins().at(c.scenario).run(c);
  } else if (c.engine == "ode") {
    out = engine_ode(c);
  } else if (c.engine == "mcwf") {
    out = engine_mcwf(c);
  } else if (c.engine == "nmqj") {
    out = engine_nmqj(c);
  } else if (c.engine == "classical-ode") {
    out = engine_classical_ode(c);
  } else if (c.engine == "classical-ensemble") {
    out = engine_classical_ensemble(c);
  } else {
    out = engine_cp_audit(c);
  }
  if (out.max_step_probability > mcwf::kWarnStepProbability) {
    std::ostringstream os;
    os << "largest per-step jump probability " << out.max_step_probability << " exceeds "
       << mcwf::kWarnStepProbability << "; consider a smaller dt";
    out.warnings.push_back(os.str());
  }
  return out;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t k = 0; k < table.columns.size(); ++k) {
    if (k) out += ',';
    out += table.columns[k];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      append_cell(out, row[k]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r = Json::array();
    for (const Cell& cell : row) {
      std::visit([&](const auto& v) {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, double>) {
          if (std::isfinite(v)) {
            r.push_back(v);
          } else {
            r.push_back(nullptr);
          }
        } else {
          r.push_back(v);
        }
      }, cell);
    }
    rows.push_back(std::move(r));
  }
  return Json{{"columns", table.columns}, {"rows", rows}}.dump() + "\n";
}

std::uint64_t config_hash(const Json& doc) {
  // Where the data lands does not change what is computed.
  Json canonical = doc;
  if (canonical.is_object() && canonical.contains("output") && canonical["output"].is_object()) {
    canonical["output"].erase("path");
    if (canonical["output"].empty()) canonical.erase("output");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

Json resolve(const RunRequest& req) {
  if (req.scenario.empty() == req.config_path.empty()) {
    throw ConfigError("run: give exactly one of --scenario or --config");
  }
  Json doc = req.scenario.empty() ? load_config_file(req.config_path) : builtin_config(req.scenario);
  if (!doc.is_object()) fail("config", "expected a JSON object");
  if (req.seed) doc["seed"] = *req.seed;
  if (req.dt) doc["dt"] = *req.dt;
  if (!req.format.empty()) doc["output"]["format"] = req.format;
  if (!req.out.empty()) doc["output"]["path"] = req.out;
  return doc;
}

}  // namespace

int run(const RunRequest& req, std::ostream& log) {
  try {
    const ScenarioConfig c = parse_config(resolve(req));
    const auto start = std::chrono::steady_clock::now();
    const RunOutcome out = execute(c);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& w : out.warnings) log << "warning: " << w << "\n";

    const std::string path = c.output_path.empty() ? c.name + "." + c.format : c.output_path;
    write_file(path, c.format == "csv" ? to_csv(out.table) : to_json(out.table));
    Json meta = {{"version", kVersion},
                 {"schema", kSchema},
                 {"name", c.name},
                 {"engine", c.scenario.empty() ? c.engine : "builtin:" + c.scenario},
                 {"config_hash", hex64(config_hash(c.document))},
                 {"seed", c.seed},
                 {"dt", c.dt},
                 {"N", c.n},
                 {"t_end", c.t_end},
                 {"stride", c.stride},
                 {"wall_clock_seconds", wall},
                 {"max_step_probability", out.max_step_probability},
                 {"warnings", out.warnings},
                 {"diagnostics", out.diagnostics},
                 {"config", c.document}};
    write_file(path + ".meta.json", meta.dump(2) + "\n");
    log << "wrote " << path << " (" << out.table.rows.size() << " rows)\n";
    return kOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Json::exception& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    log << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StructuralError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

int validate(const std::string& config_path, std::ostream& log) {
  try {
    const ScenarioConfig c = parse_config(load_config_file(config_path));
    // Building the system surfaces errors in rate and operator specs.
    if (c.scenario.empty()) {
      if (c.engine.rfind("classical", 0) == 0) {
        const auto spec = parse_rate_matrix(c.system);
        if (c.engine == "classical-ode") {
          parse_probabilities(c.initial, spec.n);
        } else {
          parse_counts(c.initial, spec.n, c.n);
        }
      } else {
        const auto g = parse_generator(c.system);
        if (c.engine == "ode") {
          parse_density(c.initial, g.dimension());
        } else if (c.engine != "cp-audit") {
          parse_state(c.initial, g.dimension());
        }
      }
    }
    log << "ok: " << c.name << " (hash " << hex64(config_hash(c.document)) << ")\n";
    return kOk;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Json::exception& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace tlme::scenario
