#include "rta/tape.hpp"

#include <cmath>
#include <initializer_list>
#include <utility>

namespace rta::ad {

namespace {

void check_finite(const Mat& m, const char* op) {
#ifndef NDEBUG
  if (!m.allFinite()) throw DomainError(std::string("non-finite values after ") + op);
#else
  (void)m;
  (void)op;
#endif
}

[[noreturn]] void shape_fail(const char* op, const Mat& a, const Mat& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.rows(), a.cols()) + " and " + shape_str(b.rows(), b.cols()));
}

bool needs(Tape& t, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (t.requires_grad(v)) return true;
  return false;
}

}  // namespace

Eigen::Index Var::rows() const { return tape->value(*this).rows(); }
Eigen::Index Var::cols() const { return tape->value(*this).cols(); }
const Mat& Var::value() const { return tape->value(*this); }

Var Tape::emit(Mat value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::set_backward(Var v, std::function<void(Tape&)> fn) {
  nodes_[v.id].backward_fn = std::move(fn);
}

Mat& Tape::grad_accum(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols())
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Mat value) {
  check_finite(value, "constant");
  return emit(std::move(value), false);
}

Var Tape::leaf(Parameter& p) {
  if (p.frozen) return constant(p.value);
  p.ensure_grad();
  Parameter* pp = &p;
  Var out = emit(p.value, true);
  set_backward(out, [pp, out](Tape& t) { pp->grad += t.grad(out); });
  return out;
}

Var Tape::gather(Parameter& p, std::vector<int> ids) {
  const Eigen::Index d = p.value.cols();
  Mat v(static_cast<Eigen::Index>(ids.size()), d);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= p.value.rows())
      throw LookupError("gather: row " + std::to_string(ids[i]) + " out of range for " +
                        p.name + " " + shape_str(p.value.rows(), p.value.cols()));
    v.row(static_cast<Eigen::Index>(i)) = p.value.row(ids[i]);
  }
  if (p.frozen) return constant(std::move(v));

  Parameter* pp = &p;
  Var out = emit(std::move(v), true);
  set_backward(out, [pp, out, ids = std::move(ids)](Tape& t) {
    const Mat& g = t.grad(out);
    if (pp->sparse) {
      pp->sparse_grad.emplace_back(ids, g);
    } else {
      pp->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i)
        pp->grad.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  });
  return out;
}

float Tape::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.rows() != 1 || m.cols() != 1)
    throw ShapeError("scalar: node is " + shape_str(m.rows(), m.cols()));
  return m(0, 0);
}

void Tape::backward(Var loss, float seed_scale) {
  const Mat& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss must be 1x1, got " + shape_str(lv.rows(), lv.cols()));
  grad_accum(loss)(0, 0) += seed_scale;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0 || !n.backward_fn) continue;
    n.backward_fn(*this);
  }
}

// --- primitives -----------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.cols() != B.rows()) shape_fail("matmul", A, B);
  Mat v = A * B;
  check_finite(v, "matmul");
  bool ng = needs(t, {a, b});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a).noalias() += g * b.value().transpose();
      if (t2.requires_grad(b)) t2.grad_accum(b).noalias() += a.value().transpose() * g;
    });
  return out;
}

Var matmul_nt(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.cols() != B.cols()) shape_fail("matmul_nt", A, B);
  Mat v = A * B.transpose();
  check_finite(v, "matmul_nt");
  bool ng = needs(t, {a, b});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a).noalias() += g * b.value();
      if (t2.requires_grad(b)) t2.grad_accum(b).noalias() += g.transpose() * a.value();
    });
  return out;
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("add", A, B);
  bool ng = needs(t, {a, b});
  Var out = t.emit(A + B, ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a) += g;
      if (t2.requires_grad(b)) t2.grad_accum(b) += g;
    });
  return out;
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("sub", A, B);
  bool ng = needs(t, {a, b});
  Var out = t.emit(A - B, ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a) += g;
      if (t2.requires_grad(b)) t2.grad_accum(b) -= g;
    });
  return out;
}

Var add_rowvec(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (B.rows() != 1 || A.cols() != B.cols()) shape_fail("add_rowvec", A, B);
  Mat v = A.rowwise() + B.row(0);
  bool ng = needs(t, {a, b});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a) += g;
      if (t2.requires_grad(b)) t2.grad_accum(b).row(0) += g.colwise().sum();
    });
  return out;
}

Var cmul(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("cmul", A, B);
  bool ng = needs(t, {a, b});
  Var out = t.emit(A.cwiseProduct(B), ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(a)) t2.grad_accum(a) += g.cwiseProduct(b.value());
      if (t2.requires_grad(b)) t2.grad_accum(b) += g.cwiseProduct(a.value());
    });
  return out;
}

Var scale(Var a, float s) {
  Tape& t = *a.tape;
  bool ng = needs(t, {a});
  Var out = t.emit(a.value() * s, ng);
  if (ng)
    t.set_backward(out, [a, s, out](Tape& t2) { t2.grad_accum(a) += t2.grad(out) * s; });
  return out;
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  Mat v = a.value().unaryExpr([](float x) { return 1.0f / (1.0f + std::exp(-x)); });
  check_finite(v, "sigmoid");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      const Mat& y = t2.value(out);
      t2.grad_accum(a) += t2.grad(out).cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
    });
  return out;
}

Var tanh_fn(Var a) {
  Tape& t = *a.tape;
  Mat v = a.value().array().tanh().matrix();
  check_finite(v, "tanh");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      const Mat& y = t2.value(out);
      t2.grad_accum(a) += t2.grad(out).cwiseProduct((1.0f - y.array().square()).matrix());
    });
  return out;
}

Var relu(Var a) {
  Tape& t = *a.tape;
  Mat v = a.value().cwiseMax(0.0f);
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      const Mat& x = a.value();
      Mat mask = (x.array() > 0.0f).cast<float>().matrix();
      t2.grad_accum(a) += t2.grad(out).cwiseProduct(mask);
    });
  return out;
}

namespace {

constexpr float kGeluC = 0.79788456080286535588f;  // sqrt(2/pi)

inline float gelu_value(float x) {
  float u = kGeluC * (x + 0.044715f * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_derivative(float x) {
  float u = kGeluC * (x + 0.044715f * x * x * x);
  float t = std::tanh(u);
  float du = kGeluC * (1.0f + 3.0f * 0.044715f * x * x);
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

}  // namespace

Var gelu(Var a) {
  Tape& t = *a.tape;
  Mat v = a.value().unaryExpr(&gelu_value);
  check_finite(v, "gelu");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      Mat d = a.value().unaryExpr([](float x) { return gelu_derivative(x); });
      t2.grad_accum(a) += t2.grad(out).cwiseProduct(d);
    });
  return out;
}

Var softplus(Var a) {
  Tape& t = *a.tape;
  Mat v = a.value().unaryExpr(
      [](float x) { return std::max(x, 0.0f) + std::log1p(std::exp(-std::abs(x))); });
  check_finite(v, "softplus");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      Mat sig = a.value().unaryExpr([](float x) { return 1.0f / (1.0f + std::exp(-x)); });
      t2.grad_accum(a) += t2.grad(out).cwiseProduct(sig);
    });
  return out;
}

namespace {

// Shared pullback of (causal) softmax rows: dx = y ⊙ (g - rowsum(g ⊙ y)).
// Masked positions have y = 0, so they receive zero gradient automatically.
void softmax_backward(Tape& t2, Var a, Var out) {
  const Mat& y = t2.value(out);
  const Mat& g = t2.grad(out);
  Mat gy = g.cwiseProduct(y);
  Vec rowsums = gy.rowwise().sum();
  Mat dx = y.cwiseProduct(g - rowsums.replicate(1, y.cols()));
  t2.grad_accum(a) += dx;
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = *a.tape;
  const Mat& X = a.value();
  Mat v(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    float m = X.row(i).maxCoeff();
    Eigen::Array<float, 1, Eigen::Dynamic> e = (X.row(i).array() - m).exp();
    v.row(i) = (e / e.sum()).matrix();
  }
  check_finite(v, "softmax_rows");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng) t.set_backward(out, [a, out](Tape& t2) { softmax_backward(t2, a, out); });
  return out;
}

Var causal_softmax(Var a) {
  Tape& t = *a.tape;
  const Mat& X = a.value();
  if (X.rows() != X.cols())
    throw ShapeError("causal_softmax: expected square logits, got " + shape_str(X.rows(), X.cols()));
  Mat v = Mat::Zero(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::Index n = i + 1;
    float m = X.row(i).head(n).maxCoeff();
    Eigen::Array<float, 1, Eigen::Dynamic> e = (X.row(i).head(n).array() - m).exp();
    v.row(i).head(n) = (e / e.sum()).matrix();
  }
  check_finite(v, "causal_softmax");
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng) t.set_backward(out, [a, out](Tape& t2) { softmax_backward(t2, a, out); });
  return out;
}

Var layer_norm_rows(Var x, Var gain, Var bias, float eps) {
  Tape& t = *x.tape;
  const Mat& X = x.value();
  const Mat& G = gain.value();
  const Mat& B = bias.value();
  if (G.rows() != 1 || B.rows() != 1 || G.cols() != X.cols() || B.cols() != X.cols())
    throw ShapeError("layer_norm_rows: gain/bias must be 1 x " + std::to_string(X.cols()));
  const auto d = static_cast<float>(X.cols());

  Mat xhat(X.rows(), X.cols());
  Vec inv_sigma(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    float mu = X.row(i).mean();
    float var = (X.row(i).array() - mu).square().sum() / d;
    float is = 1.0f / std::sqrt(var + eps);
    inv_sigma(i) = is;
    xhat.row(i) = ((X.row(i).array() - mu) * is).matrix();
  }
  Mat v = (xhat.array().rowwise() * G.row(0).array()).rowwise() + B.row(0).array();
  check_finite(v, "layer_norm_rows");
  bool ng = needs(t, {x, gain, bias});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [x, gain, bias, out, xhat = std::move(xhat),
                         inv_sigma = std::move(inv_sigma), d](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (t2.requires_grad(bias)) t2.grad_accum(bias).row(0) += g.colwise().sum();
      if (t2.requires_grad(gain))
        t2.grad_accum(gain).row(0) += g.cwiseProduct(xhat).colwise().sum();
      if (t2.requires_grad(x)) {
        Mat gx(g.rows(), g.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          Eigen::Array<float, 1, Eigen::Dynamic> gh =
              g.row(i).array() * gain.value().row(0).array();
          float m1 = gh.sum() / d;
          float m2 = (gh * xhat.row(i).array()).sum() / d;
          gx.row(i) = ((gh - m1 - xhat.row(i).array() * m2) * inv_sigma(i)).matrix();
        }
        t2.grad_accum(x) += gx;
      }
    });
  return out;
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty input");
  Tape& t = *parts[0].tape;
  Eigen::Index total = 0;
  const Eigen::Index cols = parts[0].cols();
  bool ng = false;
  for (Var p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    total += p.rows();
    ng = ng || t.requires_grad(p);
  }
  Mat v(total, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [parts, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      Eigen::Index r2 = 0;
      for (Var p : parts) {
        if (t2.requires_grad(p)) t2.grad_accum(p) += g.middleRows(r2, p.rows());
        r2 += p.rows();
      }
    });
  return out;
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty input");
  Tape& t = *parts[0].tape;
  Eigen::Index total = 0;
  const Eigen::Index rows = parts[0].rows();
  bool ng = false;
  for (Var p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    total += p.cols();
    ng = ng || t.requires_grad(p);
  }
  Mat v(rows, total);
  Eigen::Index c = 0;
  for (Var p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [parts, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      Eigen::Index c2 = 0;
      for (Var p : parts) {
        if (t2.requires_grad(p)) t2.grad_accum(p) += g.middleCols(c2, p.cols());
        c2 += p.cols();
      }
    });
  return out;
}

Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  if (r0 < 0 || n < 0 || r0 + n > A.rows())
    throw ShapeError("slice_rows: [" + std::to_string(r0) + ", " + std::to_string(r0 + n) +
                     ") out of " + shape_str(A.rows(), A.cols()));
  bool ng = needs(t, {a});
  Var out = t.emit(A.middleRows(r0, n), ng);
  if (ng)
    t.set_backward(out, [a, r0, n, out](Tape& t2) {
      t2.grad_accum(a).middleRows(r0, n) += t2.grad(out);
    });
  return out;
}

Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  if (c0 < 0 || n < 0 || c0 + n > A.cols())
    throw ShapeError("slice_cols: [" + std::to_string(c0) + ", " + std::to_string(c0 + n) +
                     ") out of " + shape_str(A.rows(), A.cols()));
  bool ng = needs(t, {a});
  Var out = t.emit(A.middleCols(c0, n), ng);
  if (ng)
    t.set_backward(out, [a, c0, n, out](Tape& t2) {
      t2.grad_accum(a).middleCols(c0, n) += t2.grad(out);
    });
  return out;
}

Var shift_rows_down(Var a, Eigen::Index j) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  if (j < 0) throw ShapeError("shift_rows_down: negative shift");
  Mat v = Mat::Zero(A.rows(), A.cols());
  if (j < A.rows()) v.bottomRows(A.rows() - j) = A.topRows(A.rows() - j);
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, j, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      if (j < g.rows())
        t2.grad_accum(a).topRows(g.rows() - j) += g.bottomRows(g.rows() - j);
    });
  return out;
}

Var mean_rows(Var a) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  if (A.rows() == 0) throw DomainError("mean_rows: empty input");
  Mat v = A.colwise().mean();
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      const Mat& g = t2.grad(out);
      const float inv = 1.0f / static_cast<float>(a.rows());
      t2.grad_accum(a) += (g * inv).replicate(a.rows(), 1);
    });
  return out;
}

Var prefix_mean(Var a) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  if (A.rows() == 0) throw DomainError("prefix_mean: empty input");
  Mat v(A.rows(), A.cols());
  RowVec run = RowVec::Zero(A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    run += A.row(i);
    v.row(i) = run / static_cast<float>(i + 1);
  }
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      // x_j receives sum_{i >= j} g_i / (i+1): reverse running sum.
      const Mat& g = t2.grad(out);
      Mat& ga = t2.grad_accum(a);
      RowVec acc = RowVec::Zero(g.cols());
      for (Eigen::Index i = g.rows() - 1; i >= 0; --i) {
        acc += g.row(i) / static_cast<float>(i + 1);
        ga.row(i) += acc;
      }
    });
  return out;
}

Var rows_dot(Var a, Var b) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  const Mat& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("rows_dot", A, B);
  Mat v = A.cwiseProduct(B).rowwise().sum();
  bool ng = needs(t, {a, b});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, b, out](Tape& t2) {
      const Mat& g = t2.grad(out);  // m x 1
      if (t2.requires_grad(a))
        t2.grad_accum(a) += b.value().cwiseProduct(g.replicate(1, b.cols()));
      if (t2.requires_grad(b))
        t2.grad_accum(b) += a.value().cwiseProduct(g.replicate(1, a.cols()));
    });
  return out;
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  const Mat& A = a.value();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) acc += static_cast<double>(A(i, j));
  Mat v(1, 1);
  v(0, 0) = static_cast<float>(acc);
  bool ng = needs(t, {a});
  Var out = t.emit(std::move(v), ng);
  if (ng)
    t.set_backward(out, [a, out](Tape& t2) {
      const float g = t2.grad(out)(0, 0);
      t2.grad_accum(a).array() += g;
    });
  return out;
}

Var dropout(Var a, float rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0f) return a;
  if (rate >= 1.0f) throw DomainError("dropout: rate must be < 1");
  Tape& t = *a.tape;
  const float keep_scale = 1.0f / (1.0f - rate);
  Mat mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.uniform() < rate ? 0.0f : keep_scale;
  return cmul(a, t.constant(std::move(mask)));
}

}  // namespace rta::ad
