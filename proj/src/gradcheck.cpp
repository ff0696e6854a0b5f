#include "rta/gradcheck.hpp"

#include <cmath>
#include <unordered_map>

namespace rta {

namespace {

double eval_loss(ParamSet& params, const LossBuilder& build) {
  ad::Tape tape;
  ad::Var loss = build(tape);
  float v = tape.scalar(loss);
  if (!std::isfinite(v)) throw DomainError("grad_check: non-finite loss");
  return static_cast<double>(v);
}

}  // namespace

double grad_check(ParamSet& params, const LossBuilder& build, float epsilon, double atol) {
  params.zero_grads();
  ad::Tape tape;
  ad::Var loss = build(tape);
  if (!std::isfinite(tape.scalar(loss))) throw DomainError("grad_check: non-finite loss");
  tape.backward(loss);

  // Snapshot analytic gradients (sparse ones densified).
  std::unordered_map<const Parameter*, Mat> analytic;
  for (auto& pp : params.all()) {
    Parameter& p = *pp;
    if (p.frozen) continue;
    Mat g = Mat::Zero(p.value.rows(), p.value.cols());
    if (p.sparse) {
      for (auto& [ids, gm] : p.sparse_grad)
        for (size_t i = 0; i < ids.size(); ++i)
          g.row(ids[i]) += gm.row(static_cast<Eigen::Index>(i));
    } else if (p.grad.size() > 0) {
      g = p.grad;
    }
    analytic.emplace(&p, std::move(g));
  }

  double worst = 0.0;
  for (auto& pp : params.all()) {
    Parameter& p = *pp;
    if (p.frozen) continue;
    const Mat& ga = analytic.at(&p);
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        const float saved = p.value(i, j);
        p.value(i, j) = saved + epsilon;
        double fp = eval_loss(params, build);
        p.value(i, j) = saved - epsilon;
        double fm = eval_loss(params, build);
        p.value(i, j) = saved;
        double numeric = (fp - fm) / (2.0 * static_cast<double>(epsilon));
        double a = static_cast<double>(ga(i, j));
        diff_sq += (a - numeric) * (a - numeric);
        a_sq += a * a;
        n_sq += numeric * numeric;
      }
    }
    const double floor = atol * std::sqrt(static_cast<double>(p.value.size()));
    if (std::sqrt(a_sq) <= floor && std::sqrt(n_sq) <= floor) continue;
    double rel = std::sqrt(diff_sq) / std::max(1e-8, std::sqrt(a_sq) + std::sqrt(n_sq));
    worst = std::max(worst, rel);
  }
  params.zero_grads();
  return worst;
}

}  // namespace rta
