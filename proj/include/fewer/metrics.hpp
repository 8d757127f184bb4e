// Copyright (c) 2026 The fewer authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reductions shared by training and evaluation. Sums use a fixed pairwise
// tree so results do not depend on how callers batch their data.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fewer/error.hpp"

namespace fewer {

inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw DataError("mean of an empty sequence");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

/// Mean squared difference between estimates and targets.
inline double mse_loss(std::span<const double> estimates, std::span<const double> targets) {
  if (estimates.size() != targets.size()) {
    throw DataError("mse: " + std::to_string(estimates.size()) + " estimates vs " +
                    std::to_string(targets.size()) + " targets");
  }
  if (estimates.empty()) throw DataError("mse: empty input");
  std::vector<double> sq(estimates.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = estimates[i] - targets[i];
    sq[i] = d * d;
  }
  return mean_of(sq);
}

}  // namespace fewer
