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

// Reference computations used only by the tests. Nothing here calls into the
// library, so agreement is a genuine cross-check.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature. Step discontinuities are resolved by
/// bisection down to 2^-depth of the interval.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-13, int depth = 60) {
  if (b <= a) return 0.0;
  // Splitting into unit panels keeps every discontinuity well inside the
  // recursion's reach.
  const int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + (b - a) * k / panels;
    const double hi = a + (b - a) * (k + 1) / panels;
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_step(f, lo, hi, fa, fm, fb, whole, tol / panels, depth);
  }
  return total;
}

/// Piecewise-constant profile: value[j] on [cuts[j], cuts[j+1]), last value
/// beyond the last cut. cuts[0] must be 0.
struct Profile {
  std::vector<double> cuts;
  std::vector<double> values;

  double at(double t) const {
    std::size_t j = 0;
    while (j + 1 < cuts.size() && t >= cuts[j + 1]) ++j;
    return values[j];
  }
  double integral(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j < cuts.size(); ++j) {
      const double lo = cuts[j];
      const double hi = j + 1 < cuts.size() ? cuts[j + 1] : t;
      if (t <= lo) break;
      s += values[j] * (std::min(t, hi) - lo);
    }
    return s;
  }
};

/// Right-hand side of the master equation written out directly.
inline CMatrix lindblad_rhs(const CMatrix& h, const std::vector<CMatrix>& ls,
                            const std::vector<double>& gammas, const CMatrix& rho) {
  const Complex i(0.0, 1.0);
  CMatrix out = -i * (h * rho - rho * h);
  for (std::size_t k = 0; k < ls.size(); ++k) {
    const CMatrix& l = ls[k];
    const CMatrix ldl = l.adjoint() * l;
    out += gammas[k] * (l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl));
  }
  return out;
}

/// Column (k + l d) of the superoperator is the flattened image of |k><l|.
inline CMatrix superoperator(const CMatrix& h, const std::vector<CMatrix>& ls,
                             const std::vector<double>& gammas) {
  const int d = static_cast<int>(h.rows());
  CMatrix s(d * d, d * d);
  for (int l = 0; l < d; ++l) {
    for (int k = 0; k < d; ++k) {
      CMatrix e = CMatrix::Zero(d, d);
      e(k, l) = 1.0;
      const CMatrix img = lindblad_rhs(h, ls, gammas, e);
      for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) s(r + c * d, k + l * d) = img(r, c);
      }
    }
  }
  return s;
}

/// Exact map for piecewise-constant rates given as one profile per channel:
/// product of matrix exponentials over the merged pieces.
inline CMatrix exact_map(const CMatrix& h, const std::vector<CMatrix>& ls,
                         const std::vector<Profile>& profiles, double t) {
  std::vector<double> cuts{0.0};
  for (const auto& p : profiles) {
    for (double c : p.cuts) {
      if (c > 0.0 && c < t) cuts.push_back(c);
    }
  }
  cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const int d = static_cast<int>(h.rows());
  CMatrix m = CMatrix::Identity(d * d, d * d);
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double mid = 0.5 * (cuts[j] + cuts[j + 1]);
    std::vector<double> g;
    for (const auto& p : profiles) g.push_back(p.at(mid));
    const CMatrix piece = (superoperator(h, ls, g) * (cuts[j + 1] - cuts[j])).exp();
    m = piece * m;
  }
  return m;
}

inline CMatrix apply(const CMatrix& map, const CMatrix& rho) {
  const int d = static_cast<int>(rho.rows());
  Eigen::VectorXcd v(d * d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) v(r + c * d) = rho(r, c);
  }
  const Eigen::VectorXcd w = map * v;
  CMatrix out(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) out(r, c) = w(r + c * d);
  }
  return out;
}

/// Amplitude damping with kappa = exp(-int gamma): the Choi spectrum is
/// {0, 1 - kappa, 0, 1 + kappa}, so the smallest eigenvalue is min(0, 1 - kappa).
inline double amplitude_damping_min_choi(double rate_integral) {
  return std::min(0.0, 1.0 - std::exp(-rate_integral));
}

/// exp(Q t) p for a constant generator.
inline Eigen::VectorXd classical_step(const Eigen::MatrixXd& q, const Eigen::VectorXd& p, double t) {
  const Eigen::MatrixXd e = (q * t).exp();
  return e * p;
}

}  // namespace oracle
