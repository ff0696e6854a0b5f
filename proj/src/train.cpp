#include "rta/train.hpp"

#include "rta/metrics.hpp"
#include "rta/rank.hpp"
#include "rta/represent.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace rta {

using nlohmann::json;

ad::Var build_playlist_loss(ad::Tape& tape, RtaModel& model, const std::vector<int>& songs,
                            const std::vector<int>& negatives, const Corpus& corpus,
                            float dropout, Rng* rng, bool training) {
  const int l = static_cast<int>(songs.size());
  if (l < 2) throw DomainError("playlist_loss: need length >= 2");
  if (negatives.empty()) throw DomainError("playlist_loss: need at least one negative");
#ifndef NDEBUG
  {
    std::unordered_set<int> in_playlist(songs.begin(), songs.end());
    for (int n : negatives)
      if (in_playlist.count(n)) throw DomainError("playlist_loss: negative inside playlist");
  }
#endif

  ad::Var h_songs = model.representer().build(tape, songs, corpus, dropout, rng, training);
  ad::Var h_neg = model.representer().build(tape, negatives, corpus, dropout, rng, training);
  ad::Var states =
      model.aggregator().build_prefix_states(tape, h_songs, dropout, rng, training);

  ad::Var prefixes = ad::slice_rows(states, 0, l - 1);      // g(p_:1) .. g(p_:l-1)
  ad::Var targets = ad::slice_rows(h_songs, 1, l - 1);      // h of s_2 .. s_l
  ad::Var pos_scores = ad::rows_dot(prefixes, targets);     // (l-1) x 1
  ad::Var neg_scores = ad::matmul_nt(prefixes, h_neg);      // (l-1) x n_neg

  // -log s(x) = softplus(-x); -log(1 - s(x)) = softplus(x)
  ad::Var loss_pos = ad::sum_all(ad::softplus(ad::scale(pos_scores, -1.0f)));
  ad::Var loss_neg = ad::sum_all(ad::softplus(neg_scores));
  return ad::add(loss_pos, loss_neg);
}

double playlist_loss(RtaModel& model, const std::vector<int>& songs,
                     const std::vector<int>& negatives, const Corpus& corpus) {
  ad::Tape tape;
  return static_cast<double>(tape.scalar(build_playlist_loss(tape, model, songs, negatives, corpus)));
}

EpochStats train_epoch(RtaModel& model, const Corpus& corpus, const std::vector<int>& train_ids,
                       const TrainConfig& cfg, float lr, Rng& rng) {
  if (cfg.batch_playlists < 1 || cfg.n_negatives < 1 || cfg.lr0 <= 0.0f)
    throw ConfigError("train_epoch: invalid config");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<int> order = train_ids;
  rng.shuffle(order);

  // Cumulative popularity weights, lazily built for the weighted sampler.
  std::vector<int64_t> pop_cum;
  if (cfg.popularity_weighted_negatives) {
    pop_cum.reserve(corpus.songs.size());
    int64_t acc = 0;
    for (const auto& s : corpus.songs) {
      acc += s.popularity + 1;
      pop_cum.push_back(acc);
    }
  }

  EpochStats stats;
  double loss_acc = 0.0;
  int in_batch = 0;
  model.params().zero_grads();

  auto flush = [&](int batch_size) {
    if (batch_size == 0) return;
    sgd_step(model.params(), lr, cfg.weight_decay);
    model.params().zero_grads();
  };

  for (int pid : order) {
    const auto& songs = corpus.playlists[pid].songs;
    if (songs.size() < 2) {
      stats.skipped_short++;
      continue;
    }
    std::unordered_set<int> exclude(songs.begin(), songs.end());
    std::vector<int> negatives =
        cfg.popularity_weighted_negatives
            ? sample_negatives_by_popularity(pop_cum, exclude, cfg.n_negatives, rng)
            : sample_negatives(corpus.num_songs(), exclude, cfg.n_negatives, rng);

    ad::Tape tape;
    ad::Var loss = build_playlist_loss(tape, model, songs, negatives, corpus, cfg.dropout, &rng,
                                       /*training=*/true);
    const float value = tape.scalar(loss);
    if (!std::isfinite(value))
      throw DomainError("train_epoch: non-finite loss at playlist " +
                        std::to_string(corpus.playlists[pid].playlist_id));
    // Seed 1/B so a step applies the batch-mean gradient.
    tape.backward(loss, 1.0f / static_cast<float>(cfg.batch_playlists));
    loss_acc += static_cast<double>(value);
    stats.playlists_used++;
    if (++in_batch == cfg.batch_playlists) {
      flush(in_batch);
      in_batch = 0;
    }
  }
  flush(in_batch);

  stats.mean_loss = stats.playlists_used > 0 ? loss_acc / stats.playlists_used : 0.0;
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

double validation_ndcg(RtaModel& model, const Corpus& corpus, const std::vector<int>& val_ids,
                       int n_reco, uint64_t rng_seed, int threads) {
  if (val_ids.empty()) throw ConfigError("validation_ndcg: empty validation set");
  Mat catalog = precompute_catalog(model.representer(), corpus, threads);
  const uint64_t base = derive_seed(rng_seed, 0x7a1);

  double acc = 0.0;
  int used = 0;
  for (int pid : val_ids) {
    const auto& p = corpus.playlists[pid];
    const int l = static_cast<int>(p.songs.size());
    if (l < 2) continue;
    int n_seed = 1 + static_cast<int>(derive_seed(base, static_cast<uint64_t>(p.playlist_id)) % 10);
    n_seed = std::min(n_seed, l - 1);
    MaskedPlaylist m = mask_playlist(p, n_seed, corpus);

    RankRequest req;
    req.seed_song_ids = m.seed;
    req.n_reco = std::min(n_reco, corpus.num_songs() - static_cast<int>(std::unordered_set<int>(
                                      m.seed.begin(), m.seed.end()).size()));
    RankedList ranked = continue_playlist(req, catalog, model.aggregator(), nullptr, threads);
    acc += metric_ndcg(ranked.song_ids, m.ground_truth);
    ++used;
  }
  if (used == 0) throw ConfigError("validation_ndcg: no playlist of length >= 2");
  return acc / used;
}

FitResult fit(RtaModel& model, const Corpus& corpus, const TrainConfig& cfg,
              const std::string& run_dir, bool resume) {
  if (corpus.val_ids.empty()) throw ConfigError("fit: corpus has no validation split");
  if (corpus.train_ids.empty()) throw ConfigError("fit: corpus has no train split");
  std::filesystem::create_directories(run_dir);
  const std::string last_path = run_dir + "/last.rtak";
  const std::string best_path = run_dir + "/best.rtak";

  TrainProgress progress;
  json history = json::array();
  if (resume) {
    TrainProgress loaded;
    auto restored = RtaModel::load_checkpoint(last_path, &loaded);
    // Swap restored tensors into the live model (same architecture).
    if (restored->config().name() != model.config().name())
      throw ConfigError("fit --resume: checkpoint model " + restored->config().name() +
                        " does not match configured model " + model.config().name());
    for (auto& p : model.params().all()) p->value = restored->params().at(p->name).value;
    progress = loaded;
    history = json::parse(progress.history_json);
  }

  std::ofstream log(run_dir + "/train_log.jsonl", resume ? std::ios::app : std::ios::trunc);

  FitResult result;
  result.best_val_ndcg = progress.best_val_ndcg;
  result.last_checkpoint = last_path;
  result.best_checkpoint = best_path;

  for (int epoch = progress.epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
    const float lr = cfg.lr0 / static_cast<float>(1 << (epoch - 1));
    Rng rng(derive_seed(cfg.rng_seed, static_cast<uint64_t>(epoch)));
    EpochStats stats = train_epoch(model, corpus, corpus.train_ids, cfg, lr, rng);
    const double val = validation_ndcg(model, corpus, corpus.val_ids, cfg.val_n_reco,
                                       cfg.rng_seed, cfg.threads);

    history.push_back({{"epoch", epoch},
                       {"mean_loss", stats.mean_loss},
                       {"val_ndcg", val},
                       {"lr", lr}});
    log << json({{"epoch", epoch},
                 {"mean_loss", stats.mean_loss},
                 {"val_ndcg", val},
                 {"lr", lr},
                 {"playlists", stats.playlists_used},
                 {"wall_seconds", stats.wall_seconds}})
               .dump()
        << "\n";
    log.flush();

    progress.epoch = epoch;
    progress.rng_state = rng.state();
    progress.rng_inc = rng.inc();
    if (val > progress.best_val_ndcg) {
      progress.best_val_ndcg = val;
      progress.epochs_since_improve = 0;
      progress.history_json = history.dump();
      model.save_checkpoint(best_path, progress);
    } else {
      progress.epochs_since_improve++;
    }
    progress.history_json = history.dump();
    model.save_checkpoint(last_path, progress);

    result.epochs_run = epoch;
    result.best_val_ndcg = progress.best_val_ndcg;
    if (progress.epochs_since_improve >= cfg.patience) break;
  }
  return result;
}

}  // namespace rta
