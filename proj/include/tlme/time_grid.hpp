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

#include <cstddef>
#include <limits>
#include <vector>

namespace tlme {

/// One integration step [t0, t1]. grid_index is set when t1 is a nominal grid
/// point k*dt (or t_end); stop is set when t1 is one of the requested stops.
struct Step {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t grid_index = npos;
  bool stop = false;

  double width() const { return t1 - t0; }
  bool on_grid() const { return grid_index != npos; }
};

/// Walks [0, t_end] in steps of dt, splitting any step that would straddle a
/// stop time (rate discontinuities, checkpoints). Nominal points are computed
/// as k*dt, not accumulated. Stops within 1e-12 of a grid point merge into it.
class StepWalker {
 public:
  StepWalker(double t_end, double dt, std::vector<double> stops = {});

  bool next(Step& step);

  /// Number of nominal grid intervals; the last grid index equals this.
  std::size_t grid_intervals() const { return intervals_; }
  double time() const { return t_; }

 private:
  double grid_time(std::size_t k) const;

  double t_end_;
  double dt_;
  std::size_t intervals_;
  std::vector<double> stops_;
  std::size_t next_stop_ = 0;
  std::size_t k_ = 0;
  double t_ = 0.0;
};

/// True for indices that an output stride keeps (every stride-th and the last).
inline bool keep_grid_point(std::size_t k, std::size_t last, std::size_t stride) {
  return k % stride == 0 || k == last;
}

}  // namespace tlme
