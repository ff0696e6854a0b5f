#pragma once

#include "rta/common.hpp"
#include "rta/params.hpp"
#include "rta/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rta::ad {

class Tape;

// Handle into a tape node. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  Eigen::Index rows() const;
  Eigen::Index cols() const;
  const Mat& value() const;
};

// Reverse-mode autodiff over a dynamically recorded tape of dense 2-D
// float32 nodes. Sequences are (time x dim) matrices. Backward closures for
// each primitive add into their inputs' gradient buffers; parameter leaves
// flush into Parameter::grad (dense) or Parameter::sparse_grad (embedding
// tables) when the reverse sweep reaches them.
class Tape {
 public:
  Var constant(Mat value);
  // Dense parameter leaf. Frozen parameters are recorded as constants.
  Var leaf(Parameter& p);
  // Embedding gather: value is p.value(ids, :); backward scatters row grads.
  Var gather(Parameter& p, std::vector<int> ids);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  float scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Runs the reverse sweep from a 1x1 node, seeding with `seed_scale`.
  // Parameter gradients accumulate across calls until ParamSet::zero_grads.
  void backward(Var loss, float seed_scale = 1.0f);

  size_t num_nodes() const { return nodes_.size(); }

  // For primitive implementations: allocate a node, then attach its pullback.
  Var emit(Mat value, bool needs_grad);
  void set_backward(Var v, std::function<void(Tape&)> fn);
  // Zero-initialized gradient accumulator of v (allocated on first use).
  Mat& grad_accum(Var v);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape&)> backward_fn;
  };
  std::vector<Node> nodes_;
};

// --- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);     // (m x k) * (k x n)
Var matmul_nt(Var a, Var b);  // (m x k) * (n x k)^T -> m x n
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_rowvec(Var a, Var b);  // broadcast a 1 x n bias over rows of a
Var cmul(Var a, Var b);        // elementwise
Var scale(Var a, float s);
Var sigmoid(Var a);
Var tanh_fn(Var a);
Var relu(Var a);
Var gelu(Var a);      // tanh approximation; smooth, so fd checks converge
Var softplus(Var a);  // log(1 + e^x), overflow-stable
Var softmax_rows(Var a);
// Row i is a softmax over columns 0..i; strictly-future columns get exact 0.
Var causal_softmax(Var a);
Var layer_norm_rows(Var x, Var gain, Var bias, float eps = 1e-5f);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
// Row t of the result is row t - j of the input (zeros for t < j).
Var shift_rows_down(Var a, Eigen::Index j);
Var mean_rows(Var a);        // 1 x D
Var prefix_mean(Var a);      // row i = mean of rows 0..i
Var rows_dot(Var a, Var b);  // m x 1, sum_j a_ij * b_ij
Var sum_all(Var a);          // 1 x 1, accumulated in double

// Inverted dropout: scales kept entries by 1/(1-rate) at train time, so
// inference applies no rescaling. rate 0 or !training is the identity.
Var dropout(Var a, float rate, Rng& rng, bool training);

}  // namespace rta::ad
