// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "ran/rng.hpp"
#include "ran/tensor.hpp"

namespace test {

inline ran::Tensor rand_tensor(ran::Rng& rng, std::vector<int64_t> shape, double lo = -1.0,
                               double hi = 1.0) {
  return rng.uniform_tensor(std::move(shape), lo, hi);
}

inline double max_abs_diff(const ran::Tensor& a, const ran::Tensor& b) {
  if (!a.same_shape(b)) return HUGE_VAL;
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a.at(i) - b.at(i)));
  return m;
}

}  // namespace test
