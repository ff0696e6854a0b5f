#pragma once

#include "rta/corpus.hpp"
#include "rta/evalsuite.hpp"
#include "rta/model.hpp"
#include "rta/rank.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace rta {

struct ServeConfig {
  std::string artifact_dir;  // checkpoint.rtak + catalog.rtap + corpus.rtac
  std::string bind_address = "127.0.0.1:8080";
  int worker_threads = 4;
  int default_n_reco = 100;
  int max_seed_len = 250;
};

// Immutable once loaded; requests share it read-only. Reload builds a fresh
// engine and swaps the shared pointer.
class Engine {
 public:
  static std::shared_ptr<Engine> load(const ServeConfig& cfg);

  struct Continuation {
    std::vector<std::string> recommendations;  // external track uris
    std::vector<float> scores;
    double embed_ms = 0.0, score_ms = 0.0;
    std::vector<std::string> warnings;  // dropped unknown seeds
  };

  // Resolves external ids (track uri, or a decimal dense id), drops unknown
  // ones with a warning, and continues on the known subset.
  Continuation continue_from(const std::vector<std::string>& seed_tracks, int n_reco) const;

  int catalog_size() const { return static_cast<int>(catalog_.rows()); }
  const std::string& model_name() const { return model_name_; }
  const Mat& catalog() const { return catalog_; }
  const Aggregator& aggregator() const { return model_->aggregator(); }
  int threads() const { return threads_; }

 private:
  std::unique_ptr<RtaModel> model_;
  Mat catalog_;
  Corpus corpus_;
  std::unordered_map<std::string, int> uri_to_id_;
  std::string model_name_;
  int threads_ = 1;
  int max_seed_len_ = 250;
};

// Blocking HTTP server exposing /v1/continue, /v1/health, /v1/reload.
// Returns the bound port (useful when the config asks for port 0).
class ServeHandle;
class Server {
 public:
  explicit Server(ServeConfig cfg);
  ~Server();

  // Starts listening on a background thread; returns the bound port.
  int start();
  void stop();
  void wait();

 private:
  ServeConfig cfg_;
  std::unique_ptr<ServeHandle> impl_;
};

}  // namespace rta
