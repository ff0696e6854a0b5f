#pragma once

#include "rta/corpus.hpp"
#include "rta/model.hpp"
#include "rta/sampling.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rta {

struct TrainConfig {
  int batch_playlists = 128;
  int n_negatives = 100;
  float lr0 = 0.05f;
  float weight_decay = 1e-6f;
  float dropout = 0.1f;
  int max_epochs = 20;
  int patience = 2;
  uint64_t rng_seed = 1;
  bool popularity_weighted_negatives = false;
  // validation protocol during fit
  int val_n_reco = 500;
  int threads = 1;
};

// One playlist's term of the training objective, on the given tape:
//   L(p) = -sum_i log s(f(p_:i, s_{i+1})) - sum_i sum_neg log(1 - s(f(p_:i, s-)))
// over prefixes i = 1..l-1, with all prefix scores from one causal pass.
// Requires length >= 2 and negatives disjoint from the playlist.
ad::Var build_playlist_loss(ad::Tape& tape, RtaModel& model, const std::vector<int>& songs,
                            const std::vector<int>& negatives, const Corpus& corpus,
                            float dropout = 0.0f, Rng* rng = nullptr, bool training = false);

// Forward-only evaluation of the loss (no dropout).
double playlist_loss(RtaModel& model, const std::vector<int>& songs,
                     const std::vector<int>& negatives, const Corpus& corpus);

struct EpochStats {
  double mean_loss = 0.0;
  int playlists_used = 0;
  int skipped_short = 0;  // length < 2: no positive pair exists
  double wall_seconds = 0.0;
};

// One pass over the (shuffled) train split: fresh negatives per playlist,
// one SGD step per batch of batch_playlists. Deterministic given `rng`.
EpochStats train_epoch(RtaModel& model, const Corpus& corpus, const std::vector<int>& train_ids,
                       const TrainConfig& cfg, float lr, Rng& rng);

// Mean NDCG@n_reco over the validation split under the fixed masking rule
// (n_seed per playlist derived from rng_seed and the playlist id).
double validation_ndcg(RtaModel& model, const Corpus& corpus, const std::vector<int>& val_ids,
                       int n_reco, uint64_t rng_seed, int threads = 1);

struct FitResult {
  std::string best_checkpoint;  // path
  std::string last_checkpoint;
  double best_val_ndcg = -1.0;
  int epochs_run = 0;
};

// Epoch loop with halved learning rate per epoch and early stopping on
// validation NDCG. Writes last.rtak / best.rtak under run_dir plus a
// train_log.jsonl with per-epoch records. Resumes from run_dir/last.rtak
// when `resume` is set; a resumed run reproduces the uninterrupted one.
FitResult fit(RtaModel& model, const Corpus& corpus, const TrainConfig& cfg,
              const std::string& run_dir, bool resume = false);

}  // namespace rta
