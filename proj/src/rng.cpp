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

#include "tlme/rng.hpp"

#include <cmath>

#include "tlme/errors.hpp"

namespace tlme {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 base(seed);
  SplitMix64 expand(base.next() ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  for (auto& w : s_) w = expand.next();
}

std::int64_t sample_binomial(Rng& rng, std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0) || p > 1.0) throw DomainError("binomial parameters out of range");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);
  // Trials up to and including the next success are Geometric(p).
  const double log_q = std::log1p(-p);
  std::int64_t successes = 0;
  std::int64_t position = 0;
  for (;;) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double gap = std::floor(std::log(u) / log_q) + 1.0;
    if (gap > static_cast<double>(n - position)) break;
    position += static_cast<std::int64_t>(gap);
    ++successes;
  }
  return successes;
}

}  // namespace tlme
