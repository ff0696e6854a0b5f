#pragma once

#include "rta/common.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace rta {

// One declarative JSON config per run, with dotted-path overrides from the
// command line ("train.lr0=0.1"). Every run writes the resolved tree next to
// its outputs so results reproduce from the snapshot alone.
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path,
                             const std::vector<std::string>& overrides = {});
  static RunConfig from_json(nlohmann::json j,
                             const std::vector<std::string>& overrides = {});

  const nlohmann::json& tree() const { return tree_; }

  template <typename T>
  T get(const std::string& dotted, T fallback) const {
    const nlohmann::json* node = find(dotted);
    if (node == nullptr || node->is_null()) return fallback;
    return node->get<T>();
  }

  template <typename T>
  T require(const std::string& dotted) const {
    const nlohmann::json* node = find(dotted);
    if (node == nullptr || node->is_null())
      throw ConfigError("missing required config key: " + dotted);
    return node->get<T>();
  }

  bool has(const std::string& dotted) const { return find(dotted) != nullptr; }

  // FNV-1a over the canonical dump; names run directories.
  std::string hash8() const;

  void write_snapshot(const std::string& path) const;

 private:
  const nlohmann::json* find(const std::string& dotted) const;
  void apply_override(const std::string& kv);

  nlohmann::json tree_;
};

}  // namespace rta
