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

#include "tlme/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlme/errors.hpp"

namespace tlme {
namespace {
constexpr double kMergeTol = 1e-12;
}

StepWalker::StepWalker(double t_end, double dt, std::vector<double> stops)
    : t_end_(t_end), dt_(dt), stops_(std::move(stops)) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    std::ostringstream os;
    os << "time step dt must be positive, got " << dt;
    throw DomainError(os.str());
  }
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    std::ostringstream os;
    os << "end time must be finite and non-negative, got " << t_end;
    throw DomainError(os.str());
  }
  const double n = t_end / dt;
  intervals_ = static_cast<std::size_t>(std::ceil(n - 1e-9));
  std::sort(stops_.begin(), stops_.end());
}

double StepWalker::grid_time(std::size_t k) const {
  return k >= intervals_ ? t_end_ : static_cast<double>(k) * dt_;
}

bool StepWalker::next(Step& step) {
  if (k_ >= intervals_) return false;
  while (next_stop_ < stops_.size() && stops_[next_stop_] <= t_ + kMergeTol) ++next_stop_;

  const double grid = grid_time(k_ + 1);
  step.t0 = t_;
  step.stop = false;
  if (next_stop_ < stops_.size() && stops_[next_stop_] < grid - kMergeTol) {
    step.t1 = stops_[next_stop_++];
    step.grid_index = Step::npos;
    step.stop = true;
  } else {
    step.t1 = grid;
    step.grid_index = ++k_;
    while (next_stop_ < stops_.size() && stops_[next_stop_] <= grid + kMergeTol) {
      step.stop = true;
      ++next_stop_;
    }
  }
  t_ = step.t1;
  return true;
}

}  // namespace tlme
