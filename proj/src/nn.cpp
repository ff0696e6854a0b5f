#include "rta/nn.hpp"

#include <cmath>

namespace rta::nn {

using ad::Var;

Var multi_head_attention(ad::Tape& t, Var x, Var wq, Var wk, Var wv, Var wo, Var bo,
                         int heads, bool causal) {
  const Eigen::Index d = x.cols();
  if (heads < 1 || d % heads != 0)
    throw ConfigError("multi_head_attention: head count " + std::to_string(heads) +
                      " must divide dim " + std::to_string(d));
  const Eigen::Index dh = d / heads;
  const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

  Var q = ad::matmul(x, wq);
  Var k = ad::matmul(x, wk);
  Var v = ad::matmul(x, wv);
  std::vector<Var> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var qh = ad::slice_cols(q, h * dh, dh);
    Var kh = ad::slice_cols(k, h * dh, dh);
    Var vh = ad::slice_cols(v, h * dh, dh);
    Var logits = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt_dh);
    Var weights = causal ? ad::causal_softmax(logits) : ad::softmax_rows(logits);
    outs.push_back(ad::matmul(weights, vh));
  }
  Var merged = heads == 1 ? outs[0] : ad::concat_cols(outs);
  return ad::add_rowvec(ad::matmul(merged, wo), bo);
}

Mat multi_head_attention_infer(const Mat& x, const Mat& wq, const Mat& wk, const Mat& wv,
                               const Mat& wo, const RowVec& bo, int heads, bool causal) {
  const Eigen::Index d = x.cols();
  if (heads < 1 || d % heads != 0)
    throw ConfigError("multi_head_attention: head count " + std::to_string(heads) +
                      " must divide dim " + std::to_string(d));
  const Eigen::Index dh = d / heads;
  const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));
  const Eigen::Index n = x.rows();

  Mat q = x * wq;
  Mat k = x * wk;
  Mat v = x * wv;
  Mat merged(n, d);
  for (int h = 0; h < heads; ++h) {
    Mat logits = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * inv_sqrt_dh;
    Mat weights = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index span = causal ? i + 1 : n;
      float m = logits.row(i).head(span).maxCoeff();
      Eigen::Array<float, 1, Eigen::Dynamic> e = (logits.row(i).head(span).array() - m).exp();
      weights.row(i).head(span) = (e / e.sum()).matrix();
    }
    merged.middleCols(h * dh, dh) = weights * v.middleCols(h * dh, dh);
  }
  return (merged * wo).rowwise() + bo;
}

Mat layer_norm_infer(const Mat& x, const RowVec& gain, const RowVec& bias, float eps) {
  Mat out(x.rows(), x.cols());
  const auto d = static_cast<float>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    float mu = x.row(i).mean();
    float var = (x.row(i).array() - mu).square().sum() / d;
    float is = 1.0f / std::sqrt(var + eps);
    out.row(i) = (((x.row(i).array() - mu) * is) * gain.array() + bias.array()).matrix();
  }
  return out;
}

Mat gaussian_init(Eigen::Index rows, Eigen::Index cols, Rng& rng, float scale) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.gaussian() * scale;
  return m;
}

}  // namespace rta::nn
