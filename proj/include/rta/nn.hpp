#pragma once

#include "rta/tape.hpp"

#include <cmath>

namespace rta::nn {

// Multi-head self-attention over a (tokens x D) sequence; returns the output
// projection (no residual). Head h reads the h-th column block of the fused
// wq/wk/wv projections. The inference overload mirrors the tape computation.
ad::Var multi_head_attention(ad::Tape& t, ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv,
                             ad::Var wo, ad::Var bo, int heads, bool causal);

Mat multi_head_attention_infer(const Mat& x, const Mat& wq, const Mat& wk, const Mat& wv,
                               const Mat& wo, const RowVec& bo, int heads, bool causal);

Mat layer_norm_infer(const Mat& x, const RowVec& gain, const RowVec& bias, float eps = 1e-5f);

// tanh-approximation gelu, shared by the tape op and the inference mirrors.
inline float gelu_scalar(float x) {
  constexpr float c = 0.79788456080286535588f;  // sqrt(2/pi)
  float u = c * (x + 0.044715f * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(u));
}

// Gaussian init scaled by 1/sqrt(fan_in).
Mat gaussian_init(Eigen::Index rows, Eigen::Index cols, Rng& rng, float scale);

}  // namespace rta::nn
