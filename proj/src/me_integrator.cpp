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

#include "tlme/me_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tlme/errors.hpp"
#include "tlme/time_grid.hpp"

namespace tlme::integrator {
namespace {

using quantum::TimeLocalGenerator;

// Caches the Liouvillian for the last rate vector seen; rates are piecewise
// constant so it is rebuilt only at discontinuities.
class LiouvillianCache {
 public:
  explicit LiouvillianCache(const TimeLocalGenerator& g)
      : g_(g), rates_(g.channel_count()), scratch_(g.channel_count()) {}

  const CMatrix& at(double t, bool left) {
    if (left) {
      g_.left_rates_at(t, scratch_);
    } else {
      g_.rates_at(t, scratch_);
    }
    if (!valid_ || scratch_ != rates_) {
      rates_ = scratch_;
      l_ = g_.liouvillian(rates_);
      valid_ = true;
    }
    return l_;
  }

 private:
  const TimeLocalGenerator& g_;
  std::vector<double> rates_;
  std::vector<double> scratch_;
  CMatrix l_;
  bool valid_ = false;
};

// One RK4 step of dX/dt = L(t) X for a block of vectorized operators X.
void rk4_step(LiouvillianCache& cache, CMatrix& x, const Step& s) {
  const double h = s.width();
  const double tm = s.t0 + 0.5 * h;
  const CMatrix k1 = cache.at(s.t0, false) * x;
  const CMatrix& lm = cache.at(tm, false);
  const CMatrix k2 = lm * (x + (0.5 * h) * k1);
  const CMatrix k3 = lm * (x + (0.5 * h) * k2);
  const CMatrix k4 = cache.at(s.t1, true) * (x + h * k3);
  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_finite(const CMatrix& x, double t) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << "non-finite density matrix entries at t=" << t;
    throw BlowupError(os.str(), t);
  }
}

CMatrix physical_projection(const CMatrix& rho) {
  CMatrix h = 0.5 * (rho + rho.adjoint());
  const double tr = h.trace().real();
  return h / tr;
}

}  // namespace

PropagationResult propagate(const TimeLocalGenerator& g, const quantum::DensityMatrix& rho0,
                            double t_end, double dt, std::size_t stride) {
  if (rho0.dimension() != g.dimension()) {
    throw StructuralError("initial state and generator dimensions differ");
  }
  if (stride == 0) throw DomainError("output stride must be at least 1");
  StepWalker walker(t_end, dt, g.breakpoints(0.0, t_end));
  const int d = g.dimension();
  LiouvillianCache cache(g);

  PropagationResult out;
  out.step = dt;
  out.times.push_back(0.0);
  out.states.push_back(rho0);

  CMatrix x = quantum::vec(rho0.matrix());
  Step s;
  while (walker.next(s)) {
    rk4_step(cache, x, s);
    check_finite(x, s.t1);
    CMatrix rho = physical_projection(quantum::unvec(x, d));
    check_finite(rho, s.t1);
    x = quantum::vec(rho);
    if (s.on_grid() && keep_grid_point(s.grid_index, walker.grid_intervals(), stride)) {
      out.times.push_back(s.t1);
      out.states.emplace_back(std::move(rho));
    }
  }
  return out;
}

double survival_factor(const rates::RateFunction& gamma, double t) {
  return std::exp(-gamma.integral(0.0, t));
}

quantum::DensityMatrix analytic_two_level(const rates::RateFunction& gamma,
                                          const quantum::DensityMatrix& rho0, double t) {
  if (rho0.dimension() != 2) {
    throw DomainError("analytic two-level solution requires dimension 2");
  }
  using quantum::kExcited;
  using quantum::kGround;
  const double kappa = survival_factor(gamma, t);
  const double root = std::sqrt(kappa);
  CMatrix rho(2, 2);
  const double ee = kappa * rho0.population(kExcited);
  rho(kExcited, kExcited) = ee;
  rho(kGround, kGround) = 1.0 - ee;
  rho(kExcited, kGround) = root * rho0(kExcited, kGround);
  rho(kGround, kExcited) = root * rho0(kGround, kExcited);
  return quantum::DensityMatrix(std::move(rho));
}

std::vector<CMatrix> dynamical_maps(const TimeLocalGenerator& g, const std::vector<double>& times,
                                    double dt) {
  if (times.empty()) return {};
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("map times must be non-negative");
  }
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  const double horizon = times[order.back()];

  std::vector<double> stops = g.breakpoints(0.0, horizon);
  stops.insert(stops.end(), times.begin(), times.end());
  StepWalker walker(horizon, dt, std::move(stops));

  const int d2 = g.dimension() * g.dimension();
  CMatrix x = CMatrix::Identity(d2, d2);
  LiouvillianCache cache(g);
  std::vector<CMatrix> out(times.size());
  std::size_t next = 0;
  auto emit_reached = [&](double t) {
    while (next < order.size() && times[order[next]] <= t + 1e-12) {
      out[order[next++]] = x;
    }
  };
  emit_reached(0.0);
  Step s;
  while (walker.next(s)) {
    rk4_step(cache, x, s);
    check_finite(x, s.t1);
    emit_reached(s.t1);
  }
  emit_reached(horizon);
  return out;
}

CMatrix dynamical_map(const TimeLocalGenerator& g, double t, double dt) {
  return dynamical_maps(g, {t}, dt).front();
}

CMatrix apply_map(const CMatrix& map, const CMatrix& rho) {
  const auto d = rho.rows();
  if (map.rows() != d * d || map.cols() != d * d) throw StructuralError("map and state sizes differ");
  return quantum::unvec(map * quantum::vec(rho), static_cast<int>(d));
}

CMatrix choi_matrix(const CMatrix& map) {
  const auto d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(map.rows()))));
  if (map.rows() != d * d || map.cols() != d * d) throw StructuralError("map must be d^2 x d^2");
  CMatrix c(d * d, d * d);
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      c.block(k * d, l * d, d, d) = quantum::unvec(map.col(k + l * d), d);
    }
  }
  return c;
}

double min_choi_eigenvalue(const CMatrix& map) {
  const CMatrix c = choi_matrix(map);
  const CMatrix herm = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<ChoiReport> cp_check(const TimeLocalGenerator& g, const std::vector<double>& t_grid,
                                 double dt, double tol) {
  if (!(tol > 0.0)) throw DomainError("CP tolerance must be positive");
  const std::vector<CMatrix> maps = dynamical_maps(g, t_grid, dt);
  std::vector<ChoiReport> out;
  out.reserve(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const double m = min_choi_eigenvalue(maps[i]);
    out.push_back({t_grid[i], m, m >= -tol, tol});
  }
  return out;
}

}  // namespace tlme::integrator
