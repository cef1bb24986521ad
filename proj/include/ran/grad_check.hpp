// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "ran/tape.hpp"

namespace ran {

/// Builds a scalar loss from one input leaf; everything else it closes over.
using ScalarFn = std::function<Var(GradTape&, Var)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  int64_t checked = 0;
  std::vector<int64_t> skipped;  // coordinates excluded as non-differentiable
};

/// Compares the tape gradient of f at `point` against central differences
/// (f(x+eps) - f(x-eps)) / 2eps per coordinate. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-8). Coordinates flagged in
/// skip_mask (e.g. pooling ties) are reported as skipped, not failures.
GradCheckResult grad_check(const ScalarFn& f, const Tensor& point, double epsilon,
                           const std::vector<bool>* skip_mask = nullptr);

/// Marks input coordinates of a max-pool whose window has a near-tie within
/// `slack` of the maximum; perturbing those can flip the argmax.
std::vector<bool> maxpool_tie_mask(const Tensor& input, int64_t pool, double slack);

}  // namespace ran
