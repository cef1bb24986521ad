// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ran/tape.hpp"

// Differentiable primitives. Each op validates shapes (rejected input throws
// std::invalid_argument), computes the forward value through ran::kernels and
// records a closed-form backward rule on the tape.
namespace ran::ops {

/// Same-padded 1D convolution. input [time, cin], kernels [k, cin, cout]
/// (k odd), bias [cout] -> [time, cout].
Var conv1d(GradTape& t, Var input, Var kernels, Var bias);

/// Disjoint max pooling, remainder dropped; gradient goes to the first
/// maximal element of each window. input [time, ch] -> [time/pool, ch].
Var maxpool1d(GradTape& t, Var input, int64_t pool);

/// input^T * weight + bias. input [n], weight [n, m], bias [m] -> [m].
/// Pass an invalid Var to skip the bias.
Var dense(GradTape& t, Var input, Var weight, Var bias = {});

/// m [n, k] * v [k] -> [n].
Var matvec(GradTape& t, Var m, Var v);

/// a [n, k] * b [k, m] -> [n, m].
Var matmul(GradTape& t, Var a, Var b);

Var add(GradTape& t, Var a, Var b);            // same shape
Var add_rowvec(GradTape& t, Var m, Var v);     // m [n, k] + v [k] per row
Var mul(GradTape& t, Var a, Var b);            // elementwise
Var scale(GradTape& t, Var x, double c);
Var sum(GradTape& t, Var x);                   // -> scalar

Var sigmoid(GradTape& t, Var x);
Var tanh(GradTape& t, Var x);

/// Max-subtracted softmax over a flat vector.
Var softmax(GradTape& t, Var x);

/// Row mean of m [rows, cols] -> [cols].
Var mean_rows(GradTape& t, Var m);

/// Row lookup table [vocab, width] -> [width]; gradient scatters to the row.
Var embed_row(GradTape& t, Var table, int64_t row);

/// Fused softmax + negative log likelihood: -log softmax(logits)[target].
Var cross_entropy(GradTape& t, Var logits, int64_t target);

/// sum_i (tau - x_i)^2 -> scalar.
Var sumsq_dev(GradTape& t, Var x, double tau);

/// Reshape to rank 1.
Var flatten(GradTape& t, Var x);

}  // namespace ran::ops
