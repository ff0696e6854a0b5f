#include "rta/runconfig.hpp"

#include <fstream>
#include <sstream>

namespace rta {

using nlohmann::json;

RunConfig RunConfig::from_file(const std::string& path,
                               const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  return from_json(std::move(j), overrides);
}

RunConfig RunConfig::from_json(json j, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  cfg.tree_ = std::move(j);
  for (const auto& kv : overrides) cfg.apply_override(kv);
  return cfg;
}

const json* RunConfig::find(const std::string& dotted) const {
  const json* node = &tree_;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
  }
  return node;
}

void RunConfig::apply_override(const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key.path=value, got: " + kv);
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);  // numbers, booleans, arrays, quoted strings
  } catch (const json::exception&) {
    value = raw;  // bare string
  }

  json* node = &tree_;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override key in: " + kv);
  for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
  (*node)[parts.back()] = std::move(value);
}

std::string RunConfig::hash8() const {
  const std::string dump = tree_.dump();
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf).substr(0, 8);
}

void RunConfig::write_snapshot(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config snapshot: " + path);
  out << tree_.dump(2) << "\n";
}

}  // namespace rta
