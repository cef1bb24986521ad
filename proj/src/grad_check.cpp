// SPDX-License-Identifier: Apache-2.0
#include "ran/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace ran {

namespace {
double eval(const ScalarFn& f, const Tensor& point) {
  GradTape t;
  Var x = t.leaf(point, true);
  Var loss = f(t, x);
  const Tensor& v = t.value(loss);
  if (v.numel() != 1) throw std::invalid_argument("grad_check: f must produce a scalar");
  return v.at(0);
}
}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const Tensor& point, double epsilon,
                           const std::vector<bool>* skip_mask) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw std::invalid_argument("grad_check: epsilon must be in [1e-7, 1e-3]");
  if (skip_mask && static_cast<int64_t>(skip_mask->size()) != point.numel())
    throw std::invalid_argument("grad_check: skip mask size mismatch");

  Tensor analytic;
  {
    GradTape t;
    Var x = t.leaf(point, true);
    Var loss = f(t, x);
    if (t.value(loss).numel() != 1)
      throw std::invalid_argument("grad_check: f must produce a scalar");
    t.backward(loss);
    analytic = t.grad(x);
  }

  GradCheckResult res;
  Tensor probe = point;
  for (int64_t i = 0; i < point.numel(); ++i) {
    if (skip_mask && (*skip_mask)[static_cast<size_t>(i)]) {
      res.skipped.push_back(i);
      continue;
    }
    const double keep = probe.at(i);
    probe.at(i) = keep + epsilon;
    const double up = eval(f, probe);
    probe.at(i) = keep - epsilon;
    const double down = eval(f, probe);
    probe.at(i) = keep;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic.at(i);
    const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    res.max_rel_error = std::max(res.max_rel_error, std::fabs(a - numeric) / denom);
    ++res.checked;
  }
  return res;
}

std::vector<bool> maxpool_tie_mask(const Tensor& input, int64_t pool, double slack) {
  const int64_t time = input.dim(0), ch = input.dim(1), out_time = time / pool;
  std::vector<bool> mask(static_cast<size_t>(input.numel()), false);
  for (int64_t t = 0; t < out_time; ++t) {
    for (int64_t c = 0; c < ch; ++c) {
      double best = input.at(t * pool, c), second = -HUGE_VAL;
      for (int64_t p = 1; p < pool; ++p) {
        const double v = input.at(t * pool + p, c);
        if (v > best) {
          second = best;
          best = v;
        } else {
          second = std::max(second, v);
        }
      }
      if (pool == 1) continue;
      for (int64_t p = 0; p < pool; ++p) {
        const double v = input.at(t * pool + p, c);
        // Unsafe if nudging this coordinate can change the window argmax:
        // a runner-up close to the max, or the max with a close runner-up.
        const bool unsafe = (v == best) ? (best - second) <= slack : (best - v) <= slack;
        if (unsafe) mask[static_cast<size_t>((t * pool + p) * ch + c)] = true;
      }
      // Remainder coordinates (dropped by pooling) never affect the output;
      // their gradient is exactly zero on both sides, so they stay unmasked.
    }
  }
  return mask;
}

}  // namespace ran
