// SPDX-License-Identifier: Apache-2.0
#include "ran/ops.hpp"

#include <cmath>
#include <memory>

#include "ran/kernels.hpp"

namespace ran::ops {

namespace k = ran::kernels;

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Id the next node() call will return; lets backward lambdas read their own
// output gradient.
Var next_var(const GradTape& t) { return Var{static_cast<int32_t>(t.size())}; }

}  // namespace

Var conv1d(GradTape& t, Var input, Var kernels, Var bias) {
  const Tensor& in = t.value(input);
  const Tensor& ker = t.value(kernels);
  const Tensor& b = t.value(bias);
  require(in.rank() == 2, "conv1d: input must be [time, channels]");
  require(ker.rank() == 3, "conv1d: kernels must be [k, cin, cout]");
  require(ker.dim(0) % 2 == 1, "conv1d: kernel size must be odd");
  require(ker.dim(1) == in.dim(1), "conv1d: input/kernel channel mismatch");
  require(b.rank() == 1 && b.dim(0) == ker.dim(2), "conv1d: bias/kernel mismatch");
  const int64_t time = in.dim(0), cin = in.dim(1), ks = ker.dim(0), cout = ker.dim(2);

  Tensor out({time, cout});
  k::conv1d_forward(in.data.data(), time, cin, ker.data.data(), ks, cout, b.data.data(),
                    out.data.data());
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(input))
      k::conv1d_backward_input(g.data.data(), time, cout, tp.value(kernels).data.data(), ks, cin,
                               tp.grad_slot(input).data.data());
    if (tp.needs_grad(kernels) || tp.needs_grad(bias))
      k::conv1d_backward_params(tp.value(input).data.data(), time, cin, g.data.data(), cout, ks,
                                tp.grad_slot(kernels).data.data(),
                                tp.grad_slot(bias).data.data());
  });
}

Var maxpool1d(GradTape& t, Var input, int64_t pool) {
  const Tensor& in = t.value(input);
  require(in.rank() == 2, "maxpool1d: input must be [time, channels]");
  require(pool >= 1, "maxpool1d: pool must be >= 1");
  require(pool <= in.dim(0), "maxpool1d: pool larger than time");
  const int64_t time = in.dim(0), ch = in.dim(1), out_time = time / pool;

  Tensor out({out_time, ch});
  auto argmax = std::make_shared<std::vector<int32_t>>(static_cast<size_t>(out_time * ch));
  k::maxpool1d_forward(in.data.data(), time, ch, pool, out.data.data(), argmax->data());
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(input)) return;
    k::maxpool1d_backward(tp.grad(out_v).data.data(), out_time, ch, argmax->data(), pool,
                          tp.grad_slot(input).data.data());
  });
}

Var dense(GradTape& t, Var input, Var weight, Var bias) {
  const Tensor& x = t.value(input);
  const Tensor& w = t.value(weight);
  require(x.rank() == 1, "dense: input must be rank 1");
  require(w.rank() == 2 && w.dim(0) == x.dim(0), "dense: weight/input dimension mismatch");
  const int64_t n = x.dim(0), m = w.dim(1);
  const bool with_bias = bias.valid();
  if (with_bias)
    require(t.value(bias).rank() == 1 && t.value(bias).dim(0) == m,
            "dense: bias/weight dimension mismatch");

  Tensor out({m});
  if (with_bias) out.data = t.value(bias).data;
  k::matmul_nn(x.data.data(), w.data.data(), out.data.data(), 1, n, m, with_bias);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(input))
      k::matmul_nt(g.data.data(), tp.value(weight).data.data(),
                   tp.grad_slot(input).data.data(), 1, m, n, true);
    if (tp.needs_grad(weight))
      k::matmul_tn(tp.value(input).data.data(), g.data.data(),
                   tp.grad_slot(weight).data.data(), n, 1, m, true);
    if (with_bias && tp.needs_grad(bias))
      k::axpy(1.0, g.data.data(), tp.grad_slot(bias).data.data(), m);
  });
}

Var matvec(GradTape& t, Var m_in, Var v_in) {
  const Tensor& m = t.value(m_in);
  const Tensor& v = t.value(v_in);
  require(m.rank() == 2 && v.rank() == 1 && m.dim(1) == v.dim(0),
          "matvec: dimension mismatch");
  const int64_t rows = m.dim(0), cols = m.dim(1);

  Tensor out({rows});
  k::matmul_nn(m.data.data(), v.data.data(), out.data.data(), rows, cols, 1, false);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(m_in))
      k::matmul_nn(g.data.data(), tp.value(v_in).data.data(),
                   tp.grad_slot(m_in).data.data(), rows, 1, cols, true);
    if (tp.needs_grad(v_in))
      k::matmul_tn(tp.value(m_in).data.data(), g.data.data(),
                   tp.grad_slot(v_in).data.data(), cols, rows, 1, true);
  });
}

Var matmul(GradTape& t, Var a_in, Var b_in) {
  const Tensor& a = t.value(a_in);
  const Tensor& b = t.value(b_in);
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: dimension mismatch");
  const int64_t n = a.dim(0), kk = a.dim(1), m = b.dim(1);

  Tensor out({n, m});
  k::matmul_nn(a.data.data(), b.data.data(), out.data.data(), n, kk, m, false);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(a_in))
      k::matmul_nt(g.data.data(), tp.value(b_in).data.data(), tp.grad_slot(a_in).data.data(), n,
                   m, kk, true);
    if (tp.needs_grad(b_in))
      k::matmul_tn(tp.value(a_in).data.data(), g.data.data(), tp.grad_slot(b_in).data.data(), kk,
                   n, m, true);
  });
}

Var add(GradTape& t, Var a_in, Var b_in) {
  const Tensor& a = t.value(a_in);
  const Tensor& b = t.value(b_in);
  require(a.same_shape(b), "add: shape mismatch");
  Tensor out(a.shape);
  k::add(a.data.data(), b.data.data(), out.data.data(), a.numel());
  const int64_t n = a.numel();
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(a_in)) k::axpy(1.0, g.data.data(), tp.grad_slot(a_in).data.data(), n);
    if (tp.needs_grad(b_in)) k::axpy(1.0, g.data.data(), tp.grad_slot(b_in).data.data(), n);
  });
}

Var add_rowvec(GradTape& t, Var m_in, Var v_in) {
  const Tensor& m = t.value(m_in);
  const Tensor& v = t.value(v_in);
  require(m.rank() == 2 && v.rank() == 1 && m.dim(1) == v.dim(0),
          "add_rowvec: dimension mismatch");
  const int64_t rows = m.dim(0), cols = m.dim(1);
  Tensor out(m.shape);
  for (int64_t i = 0; i < rows; ++i)
    k::add(m.data.data() + i * cols, v.data.data(), out.data.data() + i * cols, cols);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(m_in))
      k::axpy(1.0, g.data.data(), tp.grad_slot(m_in).data.data(), rows * cols);
    if (tp.needs_grad(v_in)) {
      double* dv = tp.grad_slot(v_in).data.data();
      for (int64_t i = 0; i < rows; ++i) k::axpy(1.0, g.data.data() + i * cols, dv, cols);
    }
  });
}

Var mul(GradTape& t, Var a_in, Var b_in) {
  const Tensor& a = t.value(a_in);
  const Tensor& b = t.value(b_in);
  require(a.same_shape(b), "mul: shape mismatch");
  Tensor out(a.shape);
  k::mul(a.data.data(), b.data.data(), out.data.data(), a.numel());
  const int64_t n = a.numel();
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    const Tensor& g = tp.grad(out_v);
    if (tp.needs_grad(a_in)) {
      const double* bv = tp.value(b_in).data.data();
      double* da = tp.grad_slot(a_in).data.data();
      for (int64_t i = 0; i < n; ++i) da[i] += g.data[static_cast<size_t>(i)] * bv[i];
    }
    if (tp.needs_grad(b_in)) {
      const double* av = tp.value(a_in).data.data();
      double* db = tp.grad_slot(b_in).data.data();
      for (int64_t i = 0; i < n; ++i) db[i] += g.data[static_cast<size_t>(i)] * av[i];
    }
  });
}

Var scale(GradTape& t, Var x_in, double c) {
  const Tensor& x = t.value(x_in);
  Tensor out(x.shape);
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) out.at(i) = c * x.at(i);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (tp.needs_grad(x_in))
      k::axpy(c, tp.grad(out_v).data.data(), tp.grad_slot(x_in).data.data(), n);
  });
}

Var sum(GradTape& t, Var x_in) {
  const Tensor& x = t.value(x_in);
  const int64_t n = x.numel();
  Tensor out = Tensor::scalar(k::sum(x.data.data(), n));
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    const double g = tp.grad(out_v).at(0);
    double* dx = tp.grad_slot(x_in).data.data();
    for (int64_t i = 0; i < n; ++i) dx[i] += g;
  });
}

Var sigmoid(GradTape& t, Var x_in) {
  const Tensor& x = t.value(x_in);
  Tensor out(x.shape);
  const int64_t n = x.numel();
  k::sigmoid_forward(x.data.data(), out.data.data(), n);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    k::sigmoid_backward(tp.value(out_v).data.data(), tp.grad(out_v).data.data(),
                        tp.grad_slot(x_in).data.data(), n);
  });
}

Var tanh(GradTape& t, Var x_in) {
  const Tensor& x = t.value(x_in);
  Tensor out(x.shape);
  const int64_t n = x.numel();
  k::tanh_forward(x.data.data(), out.data.data(), n);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    k::tanh_backward(tp.value(out_v).data.data(), tp.grad(out_v).data.data(),
                     tp.grad_slot(x_in).data.data(), n);
  });
}

Var softmax(GradTape& t, Var x_in) {
  const Tensor& x = t.value(x_in);
  require(x.numel() >= 1, "softmax: empty input");
  Tensor out(x.shape);
  const int64_t n = x.numel();
  k::softmax(x.data.data(), out.data.data(), n);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    const Tensor& y = tp.value(out_v);
    const Tensor& g = tp.grad(out_v);
    const double inner = k::dot(g.data.data(), y.data.data(), n);
    double* dx = tp.grad_slot(x_in).data.data();
    for (int64_t i = 0; i < n; ++i)
      dx[i] += y.at(i) * (g.at(i) - inner);
  });
}

Var mean_rows(GradTape& t, Var m_in) {
  const Tensor& m = t.value(m_in);
  require(m.rank() == 2 && m.dim(0) >= 1, "mean_rows: input must be non-empty [rows, cols]");
  const int64_t rows = m.dim(0), cols = m.dim(1);
  Tensor out({cols});
  for (int64_t i = 0; i < rows; ++i)
    k::axpy(1.0, m.data.data() + i * cols, out.data.data(), cols);
  const double inv = 1.0 / static_cast<double>(rows);
  for (int64_t j = 0; j < cols; ++j) out.at(j) *= inv;
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(m_in)) return;
    const Tensor& g = tp.grad(out_v);
    double* dm = tp.grad_slot(m_in).data.data();
    for (int64_t i = 0; i < rows; ++i)
      k::axpy(inv, g.data.data(), dm + i * cols, cols);
  });
}

Var embed_row(GradTape& t, Var table_in, int64_t row) {
  const Tensor& e = t.value(table_in);
  require(e.rank() == 2, "embed_row: table must be rank 2");
  require(row >= 0 && row < e.dim(0), "embed_row: unknown token index");
  const int64_t width = e.dim(1);
  Tensor out({width});
  std::copy_n(e.data.data() + row * width, width, out.data.data());
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(table_in)) return;
    k::axpy(1.0, tp.grad(out_v).data.data(),
            tp.grad_slot(table_in).data.data() + row * width, width);
  });
}

Var cross_entropy(GradTape& t, Var logits_in, int64_t target) {
  const Tensor& x = t.value(logits_in);
  require(x.rank() == 1 && x.numel() >= 1, "cross_entropy: logits must be rank 1");
  require(target >= 0 && target < x.numel(), "cross_entropy: target out of range");
  const int64_t n = x.numel();
  auto probs = std::make_shared<Tensor>(x.shape);
  k::softmax(x.data.data(), probs->data.data(), n);
  // loss = logsumexp(x) - x[target], evaluated stably.
  double mx = x.at(0);
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x.at(i));
  double z = 0.0;
  for (int64_t i = 0; i < n; ++i) z += std::exp(x.at(i) - mx);
  Tensor out = Tensor::scalar(mx + std::log(z) - x.at(target));
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(logits_in)) return;
    const double g = tp.grad(out_v).at(0);
    double* dx = tp.grad_slot(logits_in).data.data();
    for (int64_t i = 0; i < n; ++i) dx[i] += g * probs->at(i);
    dx[target] -= g;
  });
}

Var sumsq_dev(GradTape& t, Var x_in, double tau) {
  const Tensor& x = t.value(x_in);
  const int64_t n = x.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = tau - x.at(i);
    acc += d * d;
  }
  Tensor out = Tensor::scalar(acc);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    const double g = tp.grad(out_v).at(0);
    const Tensor& xv = tp.value(x_in);
    double* dx = tp.grad_slot(x_in).data.data();
    for (int64_t i = 0; i < n; ++i) dx[i] += g * 2.0 * (xv.at(i) - tau);
  });
}

Var flatten(GradTape& t, Var x_in) {
  const Tensor& x = t.value(x_in);
  const int64_t n = x.numel();
  Tensor out({n}, x.data);
  const Var out_v = next_var(t);
  return t.node(std::move(out), [=](GradTape& tp) {
    if (!tp.needs_grad(x_in)) return;
    k::axpy(1.0, tp.grad(out_v).data.data(), tp.grad_slot(x_in).data.data(), n);
  });
}

}  // namespace ran::ops
