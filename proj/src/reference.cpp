// SPDX-License-Identifier: Apache-2.0
#include "ran/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ran::reference {

Tensor conv1d_naive(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const int64_t time = input.dim(0), cin = input.dim(1);
  const int64_t k = kernels.dim(0), cout = kernels.dim(2);
  if (kernels.dim(1) != cin) throw std::invalid_argument("conv1d_naive: channel mismatch");
  const int64_t pad = (k - 1) / 2;
  Tensor out({time, cout});
  for (int64_t t = 0; t < time; ++t)
    for (int64_t j = 0; j < cout; ++j) {
      double acc = bias.at(j);
      for (int64_t kk = 0; kk < k; ++kk)
        for (int64_t ci = 0; ci < cin; ++ci) {
          const int64_t src = t + kk - pad;
          if (src >= 0 && src < time) acc += input.at(src, ci) * kernels.at(kk, ci, j);
        }
      out.at(t, j) = acc;
    }
  return out;
}

Tensor maxpool1d_naive(const Tensor& input, int64_t pool) {
  const int64_t time = input.dim(0), ch = input.dim(1);
  const int64_t out_time = time / pool;
  Tensor out({out_time, ch});
  for (int64_t t = 0; t < out_time; ++t)
    for (int64_t c = 0; c < ch; ++c) {
      double best = input.at(t * pool, c);
      for (int64_t p = 1; p < pool; ++p) best = std::max(best, input.at(t * pool + p, c));
      out.at(t, c) = best;
    }
  return out;
}

Tensor dense_naive(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  const int64_t n = input.numel(), m = weight.dim(1);
  if (weight.dim(0) != n) throw std::invalid_argument("dense_naive: dimension mismatch");
  Tensor out({m});
  for (int64_t j = 0; j < m; ++j) {
    double acc = bias.numel() ? bias.at(j) : 0.0;
    for (int64_t i = 0; i < n; ++i) acc += input.at(i) * weight.at(i, j);
    out.at(j) = acc;
  }
  return out;
}

Tensor matmul_naive(const Tensor& a, const Tensor& b) {
  const int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) throw std::invalid_argument("matmul_naive: dimension mismatch");
  Tensor out({n, m});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int64_t kk = 0; kk < k; ++kk) acc += a.at(i, kk) * b.at(kk, j);
      out.at(i, j) = acc;
    }
  return out;
}

Tensor softmax_naive(const Tensor& x) {
  Tensor y(x.shape);
  double mx = x.at(0);
  for (int64_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x.at(i));
  double z = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) z += std::exp(x.at(i) - mx);
  for (int64_t i = 0; i < x.numel(); ++i) y.at(i) = std::exp(x.at(i) - mx) / z;
  return y;
}

Tensor mean_rows_naive(const Tensor& m) {
  const int64_t rows = m.dim(0), cols = m.dim(1);
  Tensor out({cols});
  for (int64_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int64_t i = 0; i < rows; ++i) acc += m.at(i, j);
    out.at(j) = acc / static_cast<double>(rows);
  }
  return out;
}

namespace {
Tensor gate_preact(const Tensor& x, const Tensor& h, const Tensor& z, const Tensor& w,
                   const Tensor& u, const Tensor& zc, const Tensor& b) {
  const int64_t hsize = b.numel();
  Tensor out({hsize});
  for (int64_t j = 0; j < hsize; ++j) {
    double acc = b.at(j);
    for (int64_t i = 0; i < x.numel(); ++i) acc += x.at(i) * w.at(i, j);
    for (int64_t i = 0; i < h.numel(); ++i) acc += h.at(i) * u.at(i, j);
    for (int64_t i = 0; i < z.numel(); ++i) acc += z.at(i) * zc.at(i, j);
    out.at(j) = acc;
  }
  return out;
}
}  // namespace

LstmStepRef lstm_step_naive(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                            const Tensor& z, const Tensor w[4], const Tensor u[4],
                            const Tensor zc[4], const Tensor b[4]) {
  const int64_t hsize = h_prev.numel();
  LstmStepRef r;
  Tensor pre_i = gate_preact(x, h_prev, z, w[0], u[0], zc[0], b[0]);
  Tensor pre_f = gate_preact(x, h_prev, z, w[1], u[1], zc[1], b[1]);
  Tensor pre_c = gate_preact(x, h_prev, z, w[2], u[2], zc[2], b[2]);
  Tensor pre_o = gate_preact(x, h_prev, z, w[3], u[3], zc[3], b[3]);
  r.input_gate = Tensor({hsize});
  r.forget_gate = Tensor({hsize});
  r.candidate = Tensor({hsize});
  r.output_gate = Tensor({hsize});
  r.memory = Tensor({hsize});
  r.hidden = Tensor({hsize});
  for (int64_t j = 0; j < hsize; ++j) {
    r.input_gate.at(j) = 1.0 / (1.0 + std::exp(-pre_i.at(j)));
    r.forget_gate.at(j) = 1.0 / (1.0 + std::exp(-pre_f.at(j)));
    r.candidate.at(j) = std::tanh(pre_c.at(j));
    r.output_gate.at(j) = 1.0 / (1.0 + std::exp(-pre_o.at(j)));
    r.memory.at(j) = r.forget_gate.at(j) * c_prev.at(j) + r.input_gate.at(j) * r.candidate.at(j);
    r.hidden.at(j) = r.output_gate.at(j) * std::tanh(r.memory.at(j));
  }
  return r;
}

Tensor attention_scores_naive(const Tensor& features, const Tensor& h_prev,
                              const Tensor& feature_projection, const Tensor& hidden_projection,
                              const Tensor& hidden_bias, const Tensor& score_vector) {
  const int64_t length = features.dim(0), depth = features.dim(1);
  const int64_t width = feature_projection.dim(1);
  Tensor scores({length});
  for (int64_t i = 0; i < length; ++i) {
    double e = 0.0;
    for (int64_t a = 0; a < width; ++a) {
      double pre = hidden_bias.at(a);
      for (int64_t d = 0; d < depth; ++d) pre += features.at(i, d) * feature_projection.at(d, a);
      for (int64_t h = 0; h < h_prev.numel(); ++h)
        pre += h_prev.at(h) * hidden_projection.at(h, a);
      e += score_vector.at(a) * std::tanh(pre);
    }
    scores.at(i) = e;
  }
  return scores;
}

Tensor context_naive(const Tensor& alpha, const Tensor& features) {
  const int64_t length = features.dim(0), depth = features.dim(1);
  Tensor z({depth});
  for (int64_t d = 0; d < depth; ++d) {
    double acc = 0.0;
    for (int64_t i = 0; i < length; ++i) acc += alpha.at(i) * features.at(i, d);
    z.at(d) = acc;
  }
  return z;
}

double penalty_naive(const std::vector<Tensor>& alphas, double tau) {
  if (alphas.empty()) return 0.0;
  const int64_t length = alphas[0].numel();
  double total = 0.0;
  for (int64_t i = 0; i < length; ++i) {
    double mass = 0.0;
    for (const Tensor& a : alphas) mass += a.at(i);
    const double dev = tau - mass;
    total += dev * dev;
  }
  return total;
}

std::vector<double> sliding_sum_naive(const std::vector<double>& alpha, int w) {
  const int64_t n = static_cast<int64_t>(alpha.size());
  const int64_t half = w / 2;
  std::vector<double> s(alpha.size(), 0.0);
  // 1-based index math from the definition, clamped at both borders.
  for (int64_t i = 1; i <= n; ++i) {
    const int64_t lo = std::max<int64_t>(1, i - half);
    const int64_t hi = std::min<int64_t>(n, i + half);
    double acc = 0.0;
    for (int64_t j = lo; j <= hi; ++j) acc += alpha[static_cast<size_t>(j - 1)];
    s[static_cast<size_t>(i - 1)] = acc;
  }
  return s;
}

}  // namespace ran::reference
