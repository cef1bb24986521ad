// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

// OpenMP-parallel compute kernels. Every kernel assigns each output element
// to exactly one iteration and accumulates it in a fixed serial order, so
// results are bit-identical across runs and thread counts. Gradient kernels
// are written in gather form for the same reason. The serial counterparts
// used as test oracles live in ran::reference.
namespace ran::kernels {

// c[n,m] (+)= a[n,k] * b[k,m]
void matmul_nn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate);
// c[n,m] (+)= a[n,k] * b[m,k]^T
void matmul_nt(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate);
// c[n,m] (+)= a[k,n]^T * b[k,m]
void matmul_tn(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate);

// Same-padded 1D convolution along time; kernel layout [k, cin, cout], k odd.
void conv1d_forward(const double* in, int64_t time, int64_t cin, const double* ker, int64_t k,
                    int64_t cout, const double* bias, double* out);
void conv1d_backward_input(const double* dout, int64_t time, int64_t cout, const double* ker,
                           int64_t k, int64_t cin, double* din);
void conv1d_backward_params(const double* in, int64_t time, int64_t cin, const double* dout,
                            int64_t cout, int64_t k, double* dker, double* dbias);

// Disjoint-window max pooling; trailing remainder dropped; argmax records the
// first maximal position inside each window (tie rule for the backward pass).
void maxpool1d_forward(const double* in, int64_t time, int64_t ch, int64_t pool, double* out,
                       int32_t* argmax);
void maxpool1d_backward(const double* dout, int64_t out_time, int64_t ch, const int32_t* argmax,
                        int64_t pool, double* din);

void tanh_forward(const double* x, double* y, int64_t n);
void tanh_backward(const double* y, const double* dy, double* dx, int64_t n);  // dx += dy*(1-y^2)
void sigmoid_forward(const double* x, double* y, int64_t n);
void sigmoid_backward(const double* y, const double* dy, double* dx, int64_t n);  // dx += dy*y*(1-y)

// Max-subtracted softmax over a flat vector.
void softmax(const double* x, double* y, int64_t n);

void add(const double* a, const double* b, double* c, int64_t n);
void mul(const double* a, const double* b, double* c, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);
double dot(const double* a, const double* b, int64_t n);
double sum(const double* x, int64_t n);

}  // namespace ran::kernels
