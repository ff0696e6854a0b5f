#include "rta/serve.hpp"

#include "rta/binio.hpp"
#include "rta/represent.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <thread>

namespace rta {

using nlohmann::json;

std::shared_ptr<Engine> Engine::load(const ServeConfig& cfg) {
  namespace fs = std::filesystem;
  const std::string checkpoint_path = cfg.artifact_dir + "/checkpoint.rtak";
  const std::string catalog_path = cfg.artifact_dir + "/catalog.rtap";
  const std::string corpus_path = cfg.artifact_dir + "/corpus.rtac";
  for (const auto& p : {checkpoint_path, catalog_path, corpus_path})
    if (!fs::exists(p)) throw IoError("missing artifact: " + p);

  auto engine = std::make_shared<Engine>();
  engine->model_ = RtaModel::load_checkpoint(checkpoint_path);
  engine->model_name_ = engine->model_->name();

  CatalogMatrix cat = load_catalog_matrix(catalog_path);
  const uint64_t checkpoint_hash = file_fnv1a(checkpoint_path);
  if (cat.checkpoint_hash != checkpoint_hash)
    throw ConfigError("stale artifacts: catalog matrix was built from checkpoint hash " +
                      std::to_string(cat.checkpoint_hash) + " but " + checkpoint_path +
                      " hashes to " + std::to_string(checkpoint_hash));
  engine->catalog_ = std::move(cat.matrix);
  engine->corpus_ = Corpus::load(corpus_path);
  if (engine->corpus_.num_songs() != engine->catalog_.rows())
    throw ConfigError("artifact mismatch: corpus has " +
                      std::to_string(engine->corpus_.num_songs()) + " songs, catalog matrix " +
                      std::to_string(engine->catalog_.rows()) + " rows");
  engine->uri_to_id_.reserve(engine->corpus_.songs.size());
  for (const auto& s : engine->corpus_.songs)
    if (!s.track_uri.empty()) engine->uri_to_id_.emplace(s.track_uri, s.song_id);
  engine->threads_ = std::max(1, cfg.worker_threads);
  engine->max_seed_len_ = cfg.max_seed_len;

  // Warm-up request touches the whole scoring path once.
  RankRequest warm;
  warm.seed_song_ids = {0};
  warm.n_reco = std::min(10, engine->catalog_size() - 1);
  if (warm.n_reco > 0)
    continue_playlist(warm, engine->catalog_, engine->model_->aggregator(), nullptr,
                      engine->threads_);
  return engine;
}

Engine::Continuation Engine::continue_from(const std::vector<std::string>& seed_tracks,
                                           int n_reco) const {
  Continuation out;
  std::vector<int> seed;
  for (const auto& tok : seed_tracks) {
    auto it = uri_to_id_.find(tok);
    if (it != uri_to_id_.end()) {
      seed.push_back(it->second);
      continue;
    }
    int id = -1;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec == std::errc() && p == tok.data() + tok.size() && id >= 0 &&
        id < static_cast<int>(catalog_.rows())) {
      seed.push_back(id);
    } else {
      out.warnings.push_back("unknown seed id: " + tok);
    }
  }
  if (seed.empty()) throw LookupError("unknown_seed");
  if (static_cast<int>(seed.size()) > max_seed_len_)
    seed.erase(seed.begin(), seed.end() - max_seed_len_);

  RankRequest req;
  req.seed_song_ids = std::move(seed);
  std::unordered_set<int> uniq(req.seed_song_ids.begin(), req.seed_song_ids.end());
  req.n_reco = std::min(n_reco, catalog_size() - static_cast<int>(uniq.size()));
  RankTiming timing;
  RankedList ranked = continue_playlist(req, catalog_, model_->aggregator(), &timing, threads_);

  out.embed_ms = timing.embed_ms;
  out.score_ms = timing.score_ms;
  out.recommendations.reserve(ranked.song_ids.size());
  for (size_t i = 0; i < ranked.song_ids.size(); ++i) {
    const Song& s = corpus_.songs[ranked.song_ids[i]];
    out.recommendations.push_back(s.track_uri.empty() ? std::to_string(s.song_id) : s.track_uri);
    out.scores.push_back(ranked.scores[i]);
  }
  return out;
}

// --- HTTP ---------------------------------------------------------------------

struct ServeHandle {
  httplib::Server http;
  std::shared_ptr<Engine> engine;  // swapped atomically under mutex
  std::mutex engine_mutex;
  std::atomic<bool> reloading{false};
  std::thread listener;
  int port = 0;
};

namespace {

std::pair<std::string, int> split_bind(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind_address must be host:port, got " + addr);
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

}  // namespace

Server::Server(ServeConfig cfg) : cfg_(std::move(cfg)), impl_(std::make_unique<ServeHandle>()) {}

Server::~Server() { stop(); }

int Server::start() {
  impl_->engine = Engine::load(cfg_);
  auto get_engine = [this]() {
    std::lock_guard<std::mutex> lock(impl_->engine_mutex);
    return impl_->engine;
  };

  impl_->http.Post("/v1/continue", [this, get_engine](const httplib::Request& req,
                                                      httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", std::string("bad_json: ") + e.what()}}.dump(), "application/json");
      return;
    }
    if (!body.contains("seed_tracks") || !body["seed_tracks"].is_array()) {
      res.status = 400;
      res.set_content(json{{"error", "missing seed_tracks"}}.dump(), "application/json");
      return;
    }
    std::vector<std::string> seeds;
    for (const auto& s : body["seed_tracks"]) {
      if (s.is_string())
        seeds.push_back(s.get<std::string>());
      else if (s.is_number_integer())
        seeds.push_back(std::to_string(s.get<int64_t>()));
    }
    auto engine = get_engine();
    const int n_reco = body.value("n_reco", cfg_.default_n_reco);
    if (n_reco < 1) {
      res.status = 400;
      res.set_content(json{{"error", "n_reco must be >= 1"}}.dump(), "application/json");
      return;
    }
    try {
      Engine::Continuation c = engine->continue_from(seeds, n_reco);
      json resp{{"recommendations", c.recommendations},
                {"latency_ms", {{"embed", c.embed_ms}, {"score", c.score_ms}}},
                {"warnings", c.warnings}};
      res.set_content(resp.dump(), "application/json");
    } catch (const LookupError&) {
      res.status = 400;
      res.set_content(json{{"error", "unknown_seed"}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });

  impl_->http.Get("/v1/health", [get_engine](const httplib::Request&, httplib::Response& res) {
    auto engine = get_engine();
    json resp{{"status", "ok"},
              {"catalog_size", engine->catalog_size()},
              {"model", engine->model_name()}};
    res.set_content(resp.dump(), "application/json");
  });

  impl_->http.Post("/v1/reload", [this](const httplib::Request&, httplib::Response& res) {
    bool expected = false;
    if (!impl_->reloading.compare_exchange_strong(expected, true)) {
      res.status = 409;
      res.set_content(json{{"error", "reload_in_progress"}}.dump(), "application/json");
      return;
    }
    try {
      auto fresh = Engine::load(cfg_);
      {
        std::lock_guard<std::mutex> lock(impl_->engine_mutex);
        impl_->engine = std::move(fresh);
      }
      res.set_content(json{{"status", "reloaded"}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
    impl_->reloading = false;
  });

  auto [host, port] = split_bind(cfg_.bind_address);
  if (port == 0) {
    impl_->port = impl_->http.bind_to_any_port(host);
  } else {
    if (!impl_->http.bind_to_port(host, port)) throw IoError("cannot bind " + cfg_.bind_address);
    impl_->port = port;
  }
  impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return impl_->port;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void Server::wait() {
  if (impl_ && impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace rta
