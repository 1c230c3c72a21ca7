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

#include "tlme/nmqj.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlme/errors.hpp"
#include "tlme/mcwf.hpp"
#include "tlme/time_grid.hpp"

namespace tlme::nmqj {
namespace {

using quantum::StateVector;
using quantum::TimeLocalGenerator;

constexpr double kNull = 1e-12;

double expectation(const CMatrix& op, const StateVector& psi) {
  return psi.amplitudes().dot(op * psi.amplitudes()).real();
}

std::optional<StateVector> jumped(const TimeLocalGenerator& g, const StateVector& psi,
                                  std::size_t channel) {
  const CVector out = g.channels()[channel].lindblad_operator * psi.amplitudes();
  if (out.norm() <= kNull) return std::nullopt;
  return StateVector(out);
}

void check_channel(const TimeLocalGenerator& g, const JumpEnsemble& ens, std::size_t a,
                   std::size_t channel) {
  if (channel >= g.channel_count()) throw StructuralError("channel index out of range");
  if (a >= ens.size()) throw StructuralError("member index out of range");
  if (ens.dimension() != g.dimension()) throw StructuralError("ensemble and generator dimensions differ");
}

double negative_rate(const TimeLocalGenerator& g, std::size_t channel, double t) {
  const double rate = g.channels()[channel].rate.evaluate(t);
  if (!(rate < 0.0)) {
    throw DomainError("reversed jumps need a negative rate; channel '" + g.channels()[channel].label +
                      "' is non-negative at this time");
  }
  return rate;
}

// End of the last interval on which some rate is negative, 0 if none.
double last_negative_time(const TimeLocalGenerator& g, double t_end) {
  std::vector<double> cuts{0.0};
  for (double b : g.breakpoints(0.0, t_end)) cuts.push_back(b);
  if (cuts.back() < t_end) cuts.push_back(t_end);
  double last = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (g.minimum_rate(cuts[k], cuts[k + 1]) < 0.0) last = cuts[k + 1];
  }
  return last;
}

}  // namespace

JumpEnsemble::JumpEnsemble(const StateVector& psi0, std::int64_t n) {
  if (n <= 0) throw DomainError("ensemble size must be positive");
  members_.push_back({psi0, n});
  total_ = n;
}

JumpEnsemble::JumpEnsemble(std::vector<Member> members) : members_(std::move(members)) {
  if (members_.empty()) throw StructuralError("ensemble needs at least one member");
  for (std::size_t a = 0; a < members_.size(); ++a) {
    if (members_[a].count < 0) throw DomainError("member counts must be non-negative");
    if (members_[a].state.dimension() != members_.front().state.dimension()) {
      throw StructuralError("ensemble members differ in dimension");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (quantum::same_ray(members_[a].state, members_[b].state)) {
        throw StructuralError("ensemble members must be distinct modulo global phase");
      }
    }
    total_ += members_[a].count;
  }
  if (total_ <= 0) throw DomainError("ensemble size must be positive");
}

std::optional<std::size_t> JumpEnsemble::find(const StateVector& psi) const {
  std::optional<std::size_t> best;
  double best_distance = quantum::kPhaseMatchTolerance;
  for (std::size_t a = 0; a < members_.size(); ++a) {
    const double d = quantum::phase_distance(members_[a].state, psi);
    if (d <= best_distance) {
      best = a;
      best_distance = d;
    }
  }
  return best;
}

std::size_t JumpEnsemble::find_or_add(const StateVector& psi) {
  if (auto a = find(psi)) return *a;
  members_.push_back({psi, 0});
  return members_.size() - 1;
}

void JumpEnsemble::transfer(std::size_t a, std::size_t b, std::int64_t k) {
  if (k < 0 || members_.at(a).count < k) throw DomainError("cannot move more members than present");
  members_[a].count -= k;
  members_.at(b).count += k;
}

quantum::DensityMatrix JumpEnsemble::density_matrix() const {
  const int d = dimension();
  CMatrix rho = CMatrix::Zero(d, d);
  for (const Member& m : members_) {
    if (m.count > 0) rho += (static_cast<double>(m.count) / static_cast<double>(total_)) * m.state.projector();
  }
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return quantum::DensityMatrix(rho);
}

void JumpEnsemble::set_states(std::vector<StateVector> states) {
  if (states.size() != members_.size()) throw StructuralError("state list does not match the ensemble");
  std::vector<Member> merged;
  merged.reserve(members_.size());
  for (std::size_t a = 0; a < members_.size(); ++a) {
    bool absorbed = false;
    for (Member& m : merged) {
      if (quantum::same_ray(m.state, states[a])) {
        m.count += members_[a].count;
        absorbed = true;
        break;
      }
    }
    if (!absorbed) merged.push_back({std::move(states[a]), members_[a].count});
  }
  members_ = std::move(merged);
}

void JumpEnsemble::prune_empty() {
  std::erase_if(members_, [](const Member& m) { return m.count == 0; });
}

std::vector<std::size_t> reverse_targets(const TimeLocalGenerator& g, const JumpEnsemble& ens,
                                         std::size_t source, std::size_t channel) {
  check_channel(g, ens, source, channel);
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < ens.size(); ++a) {
    const auto image = jumped(g, ens.state(a), channel);
    if (image && quantum::same_ray(*image, ens.state(source))) out.push_back(a);
  }
  return out;
}

std::optional<std::size_t> reverse_target(const TimeLocalGenerator& g, const JumpEnsemble& ens,
                                          std::size_t source, std::size_t channel, bool* ambiguous) {
  const auto all = reverse_targets(g, ens, source, channel);
  if (ambiguous) *ambiguous = all.size() > 1;
  if (all.empty()) return std::nullopt;
  return *std::max_element(all.begin(), all.end(), [&](std::size_t x, std::size_t y) {
    return ens.count(x) < ens.count(y);
  });
}

double reverse_jump_probability(const TimeLocalGenerator& g, const JumpEnsemble& ens,
                                std::size_t source, std::size_t target, std::size_t channel,
                                double t, double dt) {
  check_channel(g, ens, source, channel);
  check_channel(g, ens, target, channel);
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (ens.count(source) == 0) throw UndefinedSourceError("reverse jump from an empty source member");
  const double rate = negative_rate(g, channel, t);
  if (ens.count(target) == 0) return 0.0;
  const double ratio = static_cast<double>(ens.count(target)) / static_cast<double>(ens.count(source));
  return ratio * std::abs(rate) * dt * std::max(expectation(g.jump_product(channel), ens.state(target)), 0.0);
}

double effective_rate(const TimeLocalGenerator& g, const JumpEnsemble& ens, std::size_t source,
                      std::size_t target, std::size_t channel, double t) {
  check_channel(g, ens, source, channel);
  check_channel(g, ens, target, channel);
  if (ens.count(source) == 0) throw UndefinedSourceError("effective rate of an empty source member");
  const double rate = negative_rate(g, channel, t);
  return std::abs(rate) * static_cast<double>(ens.count(target)) / static_cast<double>(ens.count(source));
}

void StepStats::merge(const StepStats& other) {
  forward_jumps += other.forward_jumps;
  reverse_jumps += other.reverse_jumps;
  zero_target_reversals += other.zero_target_reversals;
  unmatched_sources += other.unmatched_sources;
  ambiguity_warnings += other.ambiguity_warnings;
  max_step_probability = std::max(max_step_probability, other.max_step_probability);
  events.insert(events.end(), other.events.begin(), other.events.end());
}

StepStats step(const TimeLocalGenerator& g, JumpEnsemble& ens, double t, double dt, Rng& rng,
               bool prune_empty) {
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (ens.dimension() != g.dimension()) throw StructuralError("ensemble and generator dimensions differ");
  const std::vector<double> rates = g.rates_at(t);
  const std::size_t nch = g.channel_count();

  struct Draw {
    std::size_t source;
    std::size_t target;  // reversed jumps only
    std::size_t channel;
    bool reversed;
    std::int64_t count;
  };
  std::vector<Draw> draws;
  struct Candidate {
    std::size_t target;
    std::size_t channel;
    bool reversed;
    double p;
  };
  std::vector<Candidate> cands;

  StepStats stats;
  const std::size_t m = ens.size();
  for (std::size_t a = 0; a < m; ++a) {
    const std::int64_t n_a = ens.count(a);
    if (n_a == 0) continue;
    cands.clear();
    for (std::size_t i = 0; i < nch; ++i) {
      if (rates[i] > 0.0) {
        const double p = rates[i] * dt * std::max(expectation(g.jump_product(i), ens.state(a)), 0.0);
        if (p > 0.0) cands.push_back({0, i, false, p});
      } else if (rates[i] < 0.0) {
        const auto targets = reverse_targets(g, ens, a, i);
        if (targets.empty()) ++stats.unmatched_sources;
        if (targets.size() > 1) ++stats.ambiguity_warnings;
        for (std::size_t b : targets) {
          if (ens.count(b) == 0) continue;
          const double p = reverse_jump_probability(g, ens, a, b, i, t, dt);
          if (p > 0.0) cands.push_back({b, i, true, p});
        }
      }
    }
    double total = 0.0;
    for (const Candidate& c : cands) total += c.p;
    stats.max_step_probability = std::max(stats.max_step_probability, total);
    if (total > mcwf::kMaxStepProbability) {
      std::ostringstream os;
      os << "jump probability " << total << " per member in one step exceeds "
         << mcwf::kMaxStepProbability << " at t=" << t << "; reduce dt";
      throw StepSizeError(os.str(), t, total);
    }
    // Multinomial over the candidates via conditional binomials.
    std::int64_t remaining = n_a;
    double mass = 1.0;
    for (const Candidate& c : cands) {
      if (remaining == 0) break;
      const double q = std::min(1.0, c.p / mass);
      const std::int64_t k = sample_binomial(rng, remaining, q);
      remaining -= k;
      mass -= c.p;
      if (k > 0) draws.push_back({a, c.target, c.channel, c.reversed, k});
    }
  }

  for (const Draw& d : draws) {
    JumpEvent ev{t + dt, d.channel, d.reversed, d.count};
    if (d.reversed) {
      if (ens.count(d.target) == 0) ++stats.zero_target_reversals;
      ens.transfer(d.source, d.target, d.count);
      stats.reverse_jumps += d.count;
    } else {
      const auto image = jumped(g, ens.state(d.source), d.channel);
      if (!image) throw ImpossibleJumpError("forward jump on a channel that annihilates the member");
      ens.transfer(d.source, ens.find_or_add(*image), d.count);
      stats.forward_jumps += d.count;
    }
    stats.events.push_back(ev);
  }

  const int dim = g.dimension();
  const CMatrix a = CMatrix::Identity(dim, dim) - Complex(0.0, dt) * quantum::effective_hamiltonian(g, rates);
  std::vector<StateVector> next;
  next.reserve(ens.size());
  for (const Member& mem : ens.members()) {
    const CVector phi = a * mem.state.amplitudes();
    if (!std::isfinite(phi.squaredNorm())) throw BlowupError("non-finite member state", t);
    if (phi.squaredNorm() < kNull) {
      throw StepSizeError("member state norm underflow; reduce dt", t, 0.0);
    }
    next.emplace_back(phi);
  }
  ens.set_states(std::move(next));
  if (prune_empty) ens.prune_empty();
  return stats;
}

EnsembleRun run_ensemble_nm(const TimeLocalGenerator& g, const StateVector& psi0, double t_end,
                            double dt, std::int64_t n, std::uint64_t seed, std::size_t stride) {
  if (psi0.dimension() != g.dimension()) throw StructuralError("initial state and generator dimensions differ");
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  if (stride == 0) throw DomainError("output stride must be at least 1");
  JumpEnsemble ens(psi0, n);
  Rng rng(seed, 0);
  const double last_negative = last_negative_time(g, t_end);

  EnsembleRun run;
  run.average.step = dt;
  run.average.times.push_back(0.0);
  run.average.states.push_back(ens.density_matrix());
  run.max_members = ens.size();

  StepWalker walker(t_end, dt, g.breakpoints(0.0, t_end));
  Step st;
  while (walker.next(st)) {
    const bool prune = st.t1 >= last_negative;
    run.stats.merge(step(g, ens, st.t0, st.width(), rng, prune));
    run.max_members = std::max(run.max_members, ens.size());
    if (st.on_grid() && keep_grid_point(st.grid_index, walker.grid_intervals(), stride)) {
      run.average.times.push_back(st.t1);
      run.average.states.push_back(ens.density_matrix());
    }
  }
  return run;
}

}  // namespace tlme::nmqj
