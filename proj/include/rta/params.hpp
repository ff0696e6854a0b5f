#pragma once

#include "rta/common.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rta {

// A named learnable tensor. Embedding tables set `sparse`: their gradients
// are collected as (row ids, rows) blocks instead of a dense accumulator, so
// a step touches only the gathered rows.
struct Parameter {
  std::string name;
  Mat value;
  bool weight_decay_exempt = false;
  bool frozen = false;
  bool sparse = false;

  Mat grad;  // dense accumulator; empty for sparse parameters
  std::vector<std::pair<std::vector<int>, Mat>> sparse_grad;

  void ensure_grad() {
    if (!sparse && (grad.rows() != value.rows() || grad.cols() != value.cols()))
      grad = Mat::Zero(value.rows(), value.cols());
  }

  void zero_grad() {
    if (sparse) {
      sparse_grad.clear();
    } else if (grad.size() > 0) {
      grad.setZero();
    }
  }
};

// Owning, ordered registry. Iteration order is insertion order, which keeps
// every gradient reduction and optimizer sweep deterministic.
class ParamSet {
 public:
  Parameter& add(std::string name, Mat value, bool decay_exempt = false, bool sparse = false);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  size_t size() const { return params_.size(); }

  void zero_grads() {
    for (auto& p : params_) p->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// p <- p - lr * (grad + weight_decay * p). Decay-exempt and frozen parameters
// skip the decay term / the whole update. For sparse parameters the decay is
// applied only to rows that received gradient this step.
void sgd_step(ParamSet& params, float lr, float weight_decay);

}  // namespace rta
