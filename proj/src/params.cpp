#include "rta/params.hpp"

#include <unordered_map>

namespace rta {

Parameter& ParamSet::add(std::string name, Mat value, bool decay_exempt, bool sparse) {
  for (auto& p : params_)
    if (p->name == name) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->weight_decay_exempt = decay_exempt;
  p->sparse = sparse;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamSet::at(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw LookupError("no such parameter: " + name);
}

const Parameter& ParamSet::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw LookupError("no such parameter: " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return true;
  return false;
}

void sgd_step(ParamSet& params, float lr, float weight_decay) {
  if (lr < 0.0f) throw DomainError("sgd_step: negative learning rate");
  for (auto& pp : params.all()) {
    Parameter& p = *pp;
    if (p.frozen) continue;
    const float wd = p.weight_decay_exempt ? 0.0f : weight_decay;
    if (!p.sparse) {
      if (p.grad.size() == 0) continue;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
        throw ShapeError("sgd_step: grad " + shape_str(p.grad.rows(), p.grad.cols()) +
                         " vs value " + shape_str(p.value.rows(), p.value.cols()) + " for " + p.name);
      if (wd != 0.0f)
        p.value -= lr * (p.grad + wd * p.value);
      else
        p.value -= lr * p.grad;
    } else {
      // Consolidate row updates in first-touched order so repeated rows get
      // one combined update (and exactly one decay application).
      std::unordered_map<int, int> slot;
      std::vector<int> order;
      for (auto& [ids, g] : p.sparse_grad)
        for (int id : ids)
          if (slot.emplace(id, static_cast<int>(order.size())).second) order.push_back(id);
      if (order.empty()) continue;
      Mat acc = Mat::Zero(static_cast<Eigen::Index>(order.size()), p.value.cols());
      for (auto& [ids, g] : p.sparse_grad)
        for (size_t i = 0; i < ids.size(); ++i)
          acc.row(slot[ids[i]]) += g.row(static_cast<Eigen::Index>(i));
      for (size_t s = 0; s < order.size(); ++s) {
        const int row = order[s];
        if (wd != 0.0f)
          p.value.row(row) -= lr * (acc.row(static_cast<Eigen::Index>(s)) + wd * p.value.row(row));
        else
          p.value.row(row) -= lr * acc.row(static_cast<Eigen::Index>(s));
      }
    }
  }
}

}  // namespace rta
