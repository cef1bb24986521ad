// SPDX-License-Identifier: Apache-2.0
#include "ran/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#if defined(__AVX512F__) || defined(__AVX__)
#include <immintrin.h>
#endif

namespace ran::kernels {

namespace {

// Below this many inner flops a parallel region costs more than it saves.
constexpr int64_t kParallelCutoff = 1 << 15;

// Register-blocked column width for the matmul accumulators.
constexpr int64_t kBlock = 32;

// Vectorized exp through libmvec where available; bit-for-bit deterministic
// per build since the lane split is fixed.
#if defined(__AVX512F__)
extern "C" __m512d _ZGVeN8v_exp(__m512d);
void vec_exp(const double* __restrict x, double* __restrict y, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) _mm512_storeu_pd(y + i, _ZGVeN8v_exp(_mm512_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = std::exp(x[i]);
}
#elif defined(__AVX__)
extern "C" __m256d _ZGVdN4v_exp(__m256d);
void vec_exp(const double* __restrict x, double* __restrict y, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _ZGVdN4v_exp(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = std::exp(x[i]);
}
#else
void vec_exp(const double* __restrict x, double* __restrict y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}
#endif

thread_local std::vector<double> tls_im2col;
thread_local std::vector<double> tls_transpose;
thread_local std::vector<double> tls_colgrad;
thread_local std::vector<double> tls_unary;

double* scratch(std::vector<double>& buf, int64_t n) {
  if (static_cast<int64_t>(buf.size()) < n) buf.resize(static_cast<size_t>(n));
  return buf.data();
}

void transpose(const double* __restrict src, double* __restrict dst, int64_t rows,
               int64_t cols) {
  // dst[c][r] = src[r][c]
  constexpr int64_t T = 32;
  for (int64_t r0 = 0; r0 < rows; r0 += T)
    for (int64_t c0 = 0; c0 < cols; c0 += T) {
      const int64_t r1 = std::min(rows, r0 + T), c1 = std::min(cols, c0 + T);
      for (int64_t r = r0; r < r1; ++r)
        for (int64_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
    }
}

}  // namespace

void matmul_nn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate) {
#pragma omp parallel for schedule(static) if (n * k * m > kParallelCutoff)
  for (int64_t i = 0; i < n; ++i) {
    const double* __restrict ai = a + i * k;
    double* __restrict ci = c + i * m;
    int64_t j0 = 0;
    for (; j0 + kBlock <= m; j0 += kBlock) {
      double acc[kBlock];
      if (accumulate)
        std::memcpy(acc, ci + j0, sizeof(acc));
      else
        std::memset(acc, 0, sizeof(acc));
      for (int64_t kk = 0; kk < k; ++kk) {
        const double av = ai[kk];
        const double* __restrict bk = b + kk * m + j0;
        for (int64_t jb = 0; jb < kBlock; ++jb) acc[jb] += av * bk[jb];
      }
      std::memcpy(ci + j0, acc, sizeof(acc));
    }
    if (j0 < m) {
      const int64_t rem = m - j0;
      double acc[kBlock];
      if (accumulate)
        std::memcpy(acc, ci + j0, static_cast<size_t>(rem) * sizeof(double));
      else
        std::memset(acc, 0, static_cast<size_t>(rem) * sizeof(double));
      for (int64_t kk = 0; kk < k; ++kk) {
        const double av = ai[kk];
        const double* __restrict bk = b + kk * m + j0;
        for (int64_t jb = 0; jb < rem; ++jb) acc[jb] += av * bk[jb];
      }
      std::memcpy(ci + j0, acc, static_cast<size_t>(rem) * sizeof(double));
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate) {
  if (n == 1) {
    // Row vector times B^T: each output is a dot of two contiguous rows.
    for (int64_t j = 0; j < m; ++j) {
      const double* __restrict bj = b + j * k;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (int64_t kk = 0; kk < k; ++kk) acc += a[kk] * bj[kk];
      if (accumulate)
        c[j] += acc;
      else
        c[j] = acc;
    }
    return;
  }
  double* bt = scratch(tls_transpose, k * m);
  transpose(b, bt, m, k);  // bt is [k, m]
  matmul_nn(a, bt, c, n, k, m, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate) {
#pragma omp parallel for schedule(static) if (n * k * m > kParallelCutoff)
  for (int64_t i = 0; i < n; ++i) {
    double* __restrict ci = c + i * m;
    int64_t j0 = 0;
    for (; j0 + kBlock <= m; j0 += kBlock) {
      double acc[kBlock];
      if (accumulate)
        std::memcpy(acc, ci + j0, sizeof(acc));
      else
        std::memset(acc, 0, sizeof(acc));
      for (int64_t kk = 0; kk < k; ++kk) {
        const double av = a[kk * n + i];
        const double* __restrict bk = b + kk * m + j0;
        for (int64_t jb = 0; jb < kBlock; ++jb) acc[jb] += av * bk[jb];
      }
      std::memcpy(ci + j0, acc, sizeof(acc));
    }
    if (j0 < m) {
      const int64_t rem = m - j0;
      double acc[kBlock];
      if (accumulate)
        std::memcpy(acc, ci + j0, static_cast<size_t>(rem) * sizeof(double));
      else
        std::memset(acc, 0, static_cast<size_t>(rem) * sizeof(double));
      for (int64_t kk = 0; kk < k; ++kk) {
        const double av = a[kk * n + i];
        const double* __restrict bk = b + kk * m + j0;
        for (int64_t jb = 0; jb < rem; ++jb) acc[jb] += av * bk[jb];
      }
      std::memcpy(ci + j0, acc, static_cast<size_t>(rem) * sizeof(double));
    }
  }
}

namespace {

// Zero-padded patch matrix: row t holds in[t-pad .. t+pad] across channels,
// matching the kernel layout [k, cin, cout] flattened to [k*cin, cout].
void im2col(const double* __restrict in, int64_t time, int64_t cin, int64_t k, double* __restrict x) {
  const int64_t pad = (k - 1) / 2;
  const int64_t width = k * cin;
#pragma omp parallel for schedule(static) if (time * width > kParallelCutoff)
  for (int64_t t = 0; t < time; ++t) {
    double* xt = x + t * width;
    for (int64_t kk = 0; kk < k; ++kk) {
      const int64_t src = t + kk - pad;
      if (src < 0 || src >= time)
        std::memset(xt + kk * cin, 0, static_cast<size_t>(cin) * sizeof(double));
      else
        std::memcpy(xt + kk * cin, in + src * cin, static_cast<size_t>(cin) * sizeof(double));
    }
  }
}

}  // namespace

void conv1d_forward(const double* in, int64_t time, int64_t cin, const double* ker, int64_t k,
                    int64_t cout, const double* bias, double* out) {
  double* x = scratch(tls_im2col, time * k * cin);
  im2col(in, time, cin, k, x);
  for (int64_t t = 0; t < time; ++t)
    std::memcpy(out + t * cout, bias, static_cast<size_t>(cout) * sizeof(double));
  matmul_nn(x, ker, out, time, k * cin, cout, true);
}

void conv1d_backward_input(const double* dout, int64_t time, int64_t cout, const double* ker,
                           int64_t k, int64_t cin, double* din) {
  const int64_t pad = (k - 1) / 2;
  const int64_t width = k * cin;
  // dX = dOut * Ker^T, then fold the patch columns back onto the input.
  double* kt = scratch(tls_transpose, width * cout);
  transpose(ker, kt, width, cout);  // kt is [cout, width]
  double* dx = scratch(tls_colgrad, time * width);
  matmul_nn(dout, kt, dx, time, cout, width, false);
#pragma omp parallel for schedule(static) if (time * width > kParallelCutoff)
  for (int64_t u = 0; u < time; ++u) {
    double* __restrict du = din + u * cin;
    for (int64_t kk = 0; kk < k; ++kk) {
      const int64_t t = u - kk + pad;
      if (t < 0 || t >= time) continue;
      const double* __restrict col = dx + t * width + kk * cin;
      for (int64_t ci = 0; ci < cin; ++ci) du[ci] += col[ci];
    }
  }
}

void conv1d_backward_params(const double* in, int64_t time, int64_t cin, const double* dout,
                            int64_t cout, int64_t k, double* dker, double* dbias) {
  double* x = scratch(tls_im2col, time * k * cin);
  im2col(in, time, cin, k, x);
  matmul_tn(x, dout, dker, k * cin, time, cout, true);
  for (int64_t t = 0; t < time; ++t) {
    const double* __restrict dt = dout + t * cout;
    for (int64_t j = 0; j < cout; ++j) dbias[j] += dt[j];
  }
}

void maxpool1d_forward(const double* in, int64_t time, int64_t ch, int64_t pool, double* out,
                       int32_t* argmax) {
  const int64_t out_time = time / pool;
#pragma omp parallel for schedule(static) if (time * ch > kParallelCutoff)
  for (int64_t t = 0; t < out_time; ++t) {
    const int64_t base = t * pool;
    for (int64_t c = 0; c < ch; ++c) {
      double best = in[base * ch + c];
      int32_t best_pos = 0;
      for (int64_t p = 1; p < pool; ++p) {
        const double v = in[(base + p) * ch + c];
        if (v > best) {
          best = v;
          best_pos = static_cast<int32_t>(p);
        }
      }
      out[t * ch + c] = best;
      argmax[t * ch + c] = best_pos;
    }
  }
}

void maxpool1d_backward(const double* dout, int64_t out_time, int64_t ch, const int32_t* argmax,
                        int64_t pool, double* din) {
#pragma omp parallel for schedule(static) if (out_time * ch > kParallelCutoff)
  for (int64_t t = 0; t < out_time; ++t) {
    for (int64_t c = 0; c < ch; ++c) {
      const int64_t src = (t * pool + argmax[t * ch + c]) * ch + c;
      din[src] += dout[t * ch + c];
    }
  }
}

void tanh_forward(const double* x, double* y, int64_t n) {
  // tanh(x) = sign(x) * (1 - e^{-2|x|}) / (1 + e^{-2|x|}); the exponent is
  // always <= 0 so nothing overflows, and underflow saturates at +-1.
  double* e = scratch(tls_unary, n);
  for (int64_t i = 0; i < n; ++i) e[i] = -2.0 * std::fabs(x[i]);
  vec_exp(e, e, n);
  for (int64_t i = 0; i < n; ++i)
    y[i] = std::copysign((1.0 - e[i]) / (1.0 + e[i]), x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
}

void sigmoid_forward(const double* x, double* y, int64_t n) {
  // 1 / (1 + e^{-x}); e^{-x} may legitimately reach inf, 1/inf is 0.
  double* e = scratch(tls_unary, n);
  for (int64_t i = 0; i < n; ++i) e[i] = -x[i];
  vec_exp(e, e, n);
  for (int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + e[i]);
}

void sigmoid_backward(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

void softmax(const double* x, double* y, int64_t n) {
  double mx = x[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] - mx;
  vec_exp(y, y, n);
  double z = 0.0;
  for (int64_t i = 0; i < n; ++i) z += y[i];
  const double inv = 1.0 / z;
  for (int64_t i = 0; i < n; ++i) y[i] *= inv;
}

void add(const double* a, const double* b, double* c, int64_t n) {
  for (int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void mul(const double* a, const double* b, double* c, int64_t n) {
  for (int64_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace ran::kernels
