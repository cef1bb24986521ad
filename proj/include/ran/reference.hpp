// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ran/tensor.hpp"

// Serial brute-force implementations, kept as the independent oracle for the
// OpenMP kernels and the tape ops. Nothing in the production path may call
// into this namespace; tests and the benchmark do.
namespace ran::reference {

Tensor conv1d_naive(const Tensor& input, const Tensor& kernels, const Tensor& bias);
Tensor maxpool1d_naive(const Tensor& input, int64_t pool);
Tensor dense_naive(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor matmul_naive(const Tensor& a, const Tensor& b);
Tensor softmax_naive(const Tensor& x);
Tensor mean_rows_naive(const Tensor& m);

struct LstmStepRef {
  Tensor input_gate, forget_gate, candidate, output_gate;
  Tensor memory, hidden;
};

/// Scalar-loop transcription of the LSTM cell: gate g = act(W_g x + U_g h +
/// Z_g z + b_g), c' = f*c + i*cand, h' = o*tanh(c'). Order of the packed
/// arrays is input, forget, candidate, output.
LstmStepRef lstm_step_naive(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                            const Tensor& z, const Tensor w[4], const Tensor u[4],
                            const Tensor zc[4], const Tensor b[4]);

/// Additive attention scores e_i = w_score . tanh(U_a^T a_i + W_h^T h + b_h),
/// computed with explicit loops.
Tensor attention_scores_naive(const Tensor& features, const Tensor& h_prev,
                              const Tensor& feature_projection, const Tensor& hidden_projection,
                              const Tensor& hidden_bias, const Tensor& score_vector);

/// Context vector sum_i alpha_i * a_i via explicit loops.
Tensor context_naive(const Tensor& alpha, const Tensor& features);

/// Doubly stochastic penalty sum_i (tau - sum_t alpha_ti)^2 as a double loop.
double penalty_naive(const std::vector<Tensor>& alphas, double tau);

/// Variable-width sliding sum with clamped borders, O(n*w) double loop.
std::vector<double> sliding_sum_naive(const std::vector<double>& alpha, int w);

}  // namespace ran::reference
