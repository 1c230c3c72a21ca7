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

#include "tlme/mcwf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlme/errors.hpp"
#include "tlme/kernels.hpp"
#include "tlme/parallel.hpp"
#include "tlme/rng.hpp"
#include "tlme/time_grid.hpp"

namespace tlme::mcwf {
namespace {

using kernels::kLanes;
using quantum::StateVector;
using quantum::TimeLocalGenerator;

constexpr double kNormUnderflow = 1e-12;
constexpr double kNullJump = 1e-12;

void require_non_negative(const TimeLocalGenerator& g, double t0, double t1) {
  const double m = g.minimum_rate(t0, t1);
  if (m < 0.0) {
    std::ostringstream os;
    os << "negative rate in Markovian engine (minimum " << m << " on [" << t0 << ", " << t1
       << "]); use the non-Markovian jump engine for temporarily negative rates";
    throw NegativeRateError(os.str());
  }
}

struct SplitMatrix {
  std::vector<double> re;
  std::vector<double> im;

  explicit SplitMatrix(const CMatrix& m) : re(m.size()), im(m.size()) {
    const auto d = m.rows();
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        re[r * d + c] = m(r, c).real();
        im[r * d + c] = m(r, c).imag();
      }
    }
  }
};

// Propagator 1 - i H_eff h for the current rates and step width.
class StepPropagator {
 public:
  explicit StepPropagator(const TimeLocalGenerator& g) : g_(g), a_(CMatrix()) {}

  const SplitMatrix& at(const std::vector<double>& rates, double h) {
    // Widths k*dt - (k-1)*dt differ in the last bits; those do not matter.
    if (!valid_ || rates != rates_ || std::abs(h - h_) > 1e-12 * h_) {
      rates_ = rates;
      h_ = h;
      const int d = g_.dimension();
      a_ = SplitMatrix(CMatrix::Identity(d, d) - Complex(0.0, h) * quantum::effective_hamiltonian(g_, rates));
      valid_ = true;
    }
    return a_;
  }

 private:
  const TimeLocalGenerator& g_;
  std::vector<double> rates_;
  double h_ = 0.0;
  SplitMatrix a_;
  bool valid_ = false;
};

struct Setup {
  const TimeLocalGenerator& g;
  const StateVector& psi0;
  double t_end;
  double dt;
  std::size_t stride;
  std::uint64_t seed;
  std::vector<double> breakpoints;
};

// Receives stored states and jumps from one lane group.
struct LaneObserver {
  virtual ~LaneObserver() = default;
  virtual void store(std::size_t slot, int lane, const double* re, const double* im) = 0;
  virtual void jump(int lane, double t, std::size_t channel) = 0;
};

// Runs kLanes trajectories side by side. Lanes with active[j] false run with
// their own stream but are never reported or guarded.
double run_lanes(const Setup& s, const std::uint64_t* ids, const bool* active, LaneObserver& obs) {
  const TimeLocalGenerator& g = s.g;
  const kernels::KernelTable& k = kernels::active_kernels();
  const int d = g.dimension();
  const std::size_t nch = g.channel_count();

  std::vector<SplitMatrix> products;
  products.reserve(nch);
  for (std::size_t i = 0; i < nch; ++i) products.emplace_back(g.jump_product(i));

  std::vector<Rng> rngs;
  rngs.reserve(kLanes);
  for (int j = 0; j < kLanes; ++j) rngs.emplace_back(s.seed, ids[j]);

  std::vector<double> psi_re(d * kLanes), psi_im(d * kLanes);
  std::vector<double> out_re(d * kLanes), out_im(d * kLanes);
  for (int c = 0; c < d; ++c) {
    for (int j = 0; j < kLanes; ++j) {
      psi_re[c * kLanes + j] = s.psi0.amplitudes()(c).real();
      psi_im[c * kLanes + j] = s.psi0.amplitudes()(c).imag();
    }
  }
  for (int j = 0; j < kLanes; ++j) {
    if (active[j]) obs.store(0, j, psi_re.data() + j, psi_im.data() + j);
  }

  StepPropagator prop(g);
  std::vector<double> rates(nch);
  std::vector<double> expect(nch * kLanes);
  std::vector<double> prob(nch * kLanes);
  double total[kLanes], norm2[kLanes], factor[kLanes];
  int jumped[kLanes];
  double max_prob = 0.0;

  StepWalker walker(s.t_end, s.dt, s.breakpoints);
  std::size_t slot = 0;
  Step st;
  while (walker.next(st)) {
    const double h = st.width();
    g.rates_at(st.t0, rates);
    for (std::size_t i = 0; i < nch; ++i) {
      k.expectation(d, products[i].re.data(), products[i].im.data(), psi_re.data(), psi_im.data(),
                    expect.data() + i * kLanes);
    }
    for (int j = 0; j < kLanes; ++j) {
      total[j] = 0.0;
      for (std::size_t i = 0; i < nch; ++i) {
        const double p = rates[i] * h * std::max(expect[i * kLanes + j], 0.0);
        prob[i * kLanes + j] = p;
        total[j] += p;
      }
      if (active[j]) {
        max_prob = std::max(max_prob, total[j]);
        if (total[j] > kMaxStepProbability) {
          std::ostringstream os;
          os << "jump probability " << total[j] << " in one step exceeds " << kMaxStepProbability
             << " at t=" << st.t0 << "; reduce dt";
          throw StepSizeError(os.str(), st.t0, total[j]);
        }
      }
    }

    const SplitMatrix& a = prop.at(rates, h);
    k.apply(d, a.re.data(), a.im.data(), psi_re.data(), psi_im.data(), out_re.data(), out_im.data(),
            norm2);

    for (int j = 0; j < kLanes; ++j) {
      const double u = rngs[j].uniform();
      jumped[j] = -1;
      factor[j] = 1.0;
      if (u < total[j]) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nch; ++i) {
          acc += prob[i * kLanes + j];
          if (prob[i * kLanes + j] > 0.0 && (u < acc || i + 1 == nch)) {
            jumped[j] = static_cast<int>(i);
            break;
          }
        }
      }
      if (jumped[j] < 0) {
        if (norm2[j] < kNormUnderflow) {
          if (active[j]) {
            std::ostringstream os;
            os << "state norm underflow (" << norm2[j] << ") at t=" << st.t0 << "; reduce dt";
            throw StepSizeError(os.str(), st.t0, total[j]);
          }
          norm2[j] = 1.0;
        }
        factor[j] = 1.0 / std::sqrt(norm2[j]);
      }
    }
    k.scale(d, out_re.data(), out_im.data(), factor);

    for (int j = 0; j < kLanes; ++j) {
      if (jumped[j] < 0) continue;
      const CMatrix& l = g.channels()[static_cast<std::size_t>(jumped[j])].lindblad_operator;
      double n2 = 0.0;
      for (int r = 0; r < d; ++r) {
        Complex y(0.0, 0.0);
        for (int c = 0; c < d; ++c) y += l(r, c) * Complex(psi_re[c * kLanes + j], psi_im[c * kLanes + j]);
        out_re[r * kLanes + j] = y.real();
        out_im[r * kLanes + j] = y.imag();
        n2 += std::norm(y);
      }
      const double n = std::sqrt(n2);
      if (n <= kNullJump) {
        if (!active[j]) continue;
        throw ImpossibleJumpError("jump selected on a channel with L psi = 0");
      }
      for (int r = 0; r < d; ++r) {
        out_re[r * kLanes + j] /= n;
        out_im[r * kLanes + j] /= n;
      }
      if (active[j]) obs.jump(j, st.t1, static_cast<std::size_t>(jumped[j]));
    }
    psi_re.swap(out_re);
    psi_im.swap(out_im);

    if (st.on_grid() && keep_grid_point(st.grid_index, walker.grid_intervals(), s.stride)) {
      ++slot;
      for (int j = 0; j < kLanes; ++j) {
        if (active[j]) obs.store(slot, j, psi_re.data() + j, psi_im.data() + j);
      }
    }
  }
  return max_prob;
}

std::vector<double> stored_times(double t_end, double dt, std::size_t stride) {
  StepWalker walker(t_end, dt);
  std::vector<double> times{0.0};
  Step st;
  while (walker.next(st)) {
    if (keep_grid_point(st.grid_index, walker.grid_intervals(), stride)) times.push_back(st.t1);
  }
  return times;
}

CVector lane_vector(int d, const double* re, const double* im) {
  CVector v(d);
  for (int c = 0; c < d; ++c) v(c) = Complex(re[c * kLanes], im[c * kLanes]);
  return v;
}

Setup make_setup(const TimeLocalGenerator& g, const StateVector& psi0, double t_end, double dt,
                 std::size_t stride, std::uint64_t seed) {
  if (psi0.dimension() != g.dimension()) throw StructuralError("initial state and generator dimensions differ");
  if (stride == 0) throw DomainError("output stride must be at least 1");
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  require_non_negative(g, 0.0, t_end);
  return Setup{g, psi0, t_end, dt, stride, seed, g.breakpoints(0.0, t_end)};
}

}  // namespace

StateVector deterministic_step(const TimeLocalGenerator& g, const StateVector& psi, double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
  const std::vector<double> rates = g.rates_at(t);
  for (double r : rates) {
    if (r < 0.0) throw NegativeRateError("negative rate in Markovian engine at deterministic step");
  }
  const CVector phi = psi.amplitudes() - Complex(0.0, dt) * (quantum::effective_hamiltonian(g, rates) * psi.amplitudes());
  if (phi.squaredNorm() < kNormUnderflow) {
    throw StepSizeError("state norm underflow in deterministic step; reduce dt", t, 0.0);
  }
  return StateVector(phi);
}

double jump_probability(const TimeLocalGenerator& g, const StateVector& psi, std::size_t channel,
                        double t, double dt) {
  if (channel >= g.channel_count()) throw StructuralError("channel index out of range");
  const double rate = g.channels()[channel].rate.evaluate(t);
  if (rate < 0.0) {
    throw NegativeRateError("negative rate in Markovian engine on channel '" +
                            g.channels()[channel].label + "'; use the non-Markovian jump engine");
  }
  const double e = psi.amplitudes().dot(g.jump_product(channel) * psi.amplitudes()).real();
  return rate * dt * std::max(e, 0.0);
}

StateVector apply_jump(const TimeLocalGenerator& g, const StateVector& psi, std::size_t channel) {
  if (channel >= g.channel_count()) throw StructuralError("channel index out of range");
  const CVector out = g.channels()[channel].lindblad_operator * psi.amplitudes();
  if (out.norm() <= kNullJump) {
    throw ImpossibleJumpError("channel '" + g.channels()[channel].label + "' annihilates the state");
  }
  return StateVector(out);
}

Trajectory run_trajectory(const TimeLocalGenerator& g, const StateVector& psi0, double t_end,
                          double dt, std::uint64_t seed, std::uint64_t index, std::size_t stride) {
  const Setup s = make_setup(g, psi0, t_end, dt, stride, seed);
  struct Obs : LaneObserver {
    const TimeLocalGenerator& g;
    Trajectory& tr;
    Obs(const TimeLocalGenerator& gen, Trajectory& t) : g(gen), tr(t) {}
    void store(std::size_t, int, const double* re, const double* im) override {
      tr.states.emplace_back(lane_vector(g.dimension(), re, im));
    }
    void jump(int, double t, std::size_t ch) override {
      tr.jump_records.push_back({t, ch, g.channels()[ch].label});
    }
  };
  Trajectory tr;
  tr.seed = seed;
  tr.index = index;
  tr.times = stored_times(t_end, dt, stride);
  Obs obs(g, tr);
  const std::uint64_t ids[kLanes] = {index, index + 1, index + 2, index + 3};
  const bool active[kLanes] = {true, false, false, false};
  run_lanes(s, ids, active, obs);
  return tr;
}

EnsembleResult run_ensemble(const TimeLocalGenerator& g, const StateVector& psi0, double t_end,
                            double dt, std::size_t n, std::uint64_t seed, std::size_t stride) {
  if (n == 0) throw DomainError("ensemble size must be at least 1");
  const Setup s = make_setup(g, psi0, t_end, dt, stride, seed);
  const int d = g.dimension();
  const std::vector<double> times = stored_times(t_end, dt, stride);
  const std::size_t slots = times.size();

  // The partition depends only on n, so the reduction order is fixed.
  const std::size_t chunk = std::max<std::size_t>(256, (n + 63) / 64);
  const std::size_t chunks = (n + chunk - 1) / chunk;

  struct Partial {
    std::vector<CMatrix> sum;
    std::vector<Eigen::MatrixXd> sq_re, sq_im;
    double max_prob = 0.0;
  };
  std::vector<Partial> partials(chunks);
  EnsembleResult result;
  result.jumps.resize(n);
  result.trajectories = n;

  parallel_for(chunks, [&](std::size_t c) {
    Partial& part = partials[c];
    part.sum.assign(slots, CMatrix::Zero(d, d));
    part.sq_re.assign(slots, Eigen::MatrixXd::Zero(d, d));
    part.sq_im.assign(slots, Eigen::MatrixXd::Zero(d, d));

    struct Obs : LaneObserver {
      Partial& part;
      std::vector<std::vector<JumpRecord>>& jumps;
      const TimeLocalGenerator& g;
      std::uint64_t first = 0;
      Obs(Partial& p, std::vector<std::vector<JumpRecord>>& j, const TimeLocalGenerator& gen)
          : part(p), jumps(j), g(gen) {}
      void store(std::size_t slot, int, const double* re, const double* im) override {
        const int dim = g.dimension();
        CMatrix& sum = part.sum[slot];
        Eigen::MatrixXd& sq_re = part.sq_re[slot];
        Eigen::MatrixXd& sq_im = part.sq_im[slot];
        Complex* s = sum.data();
        double* qr = sq_re.data();
        double* qi = sq_im.data();
        for (int c = 0; c < dim; ++c) {
          const double cr = re[c * kLanes];
          const double ci = im[c * kLanes];
          for (int r = 0; r < dim; ++r, ++s, ++qr, ++qi) {
            const double ar = re[r * kLanes];
            const double ai = im[r * kLanes];
            const double zr = ar * cr + ai * ci;
            const double zi = ai * cr - ar * ci;
            *s += Complex(zr, zi);
            *qr += zr * zr;
            *qi += zi * zi;
          }
        }
      }
      void jump(int lane, double t, std::size_t ch) override {
        jumps[first + static_cast<std::uint64_t>(lane)].push_back({t, ch, g.channels()[ch].label});
      }
    };
    Obs obs(part, result.jumps, g);
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    for (std::size_t b = begin; b < end; b += kLanes) {
      std::uint64_t ids[kLanes];
      bool active[kLanes];
      for (int j = 0; j < kLanes; ++j) {
        ids[j] = b + static_cast<std::size_t>(j);
        active[j] = b + static_cast<std::size_t>(j) < end;
      }
      obs.first = b;
      part.max_prob = std::max(part.max_prob, run_lanes(s, ids, active, obs));
    }
  });

  const double inv = 1.0 / static_cast<double>(n);
  result.average.step = dt;
  result.average.times = times;
  for (std::size_t slot = 0; slot < slots; ++slot) {
    CMatrix sum = CMatrix::Zero(d, d);
    Eigen::MatrixXd sq_re = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd sq_im = Eigen::MatrixXd::Zero(d, d);
    for (const Partial& p : partials) {
      sum += p.sum[slot];
      sq_re += p.sq_re[slot];
      sq_im += p.sq_im[slot];
    }
    const CMatrix mean = sum * inv;
    CMatrix rho = 0.5 * (mean + mean.adjoint());
    rho /= rho.trace().real();
    result.average.states.emplace_back(std::move(rho));
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    auto se = [&](const Eigen::MatrixXd& sq, const Eigen::MatrixXd& m) {
      Eigen::MatrixXd var = (sq - static_cast<double>(n) * m.cwiseAbs2()) / denom;
      return Eigen::MatrixXd(var.cwiseMax(0.0).cwiseSqrt() * std::sqrt(inv));
    };
    result.std_error_re.push_back(se(sq_re, mean.real()));
    result.std_error_im.push_back(se(sq_im, mean.imag()));
  }
  for (const Partial& p : partials) result.max_step_probability = std::max(result.max_step_probability, p.max_prob);
  return result;
}

}  // namespace tlme::mcwf
