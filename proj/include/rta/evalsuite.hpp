#pragma once

#include "rta/corpus.hpp"
#include "rta/metrics.hpp"
#include "rta/rank.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rta {

// Anything that can answer a masked-continuation query: the trained models,
// the nearest-neighbor baselines, and the test oracles all conform.
class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual std::string name() const = 0;
  virtual RankedList recommend(const std::vector<int>& seed, int n_reco,
                               RankTiming* timing) = 0;
};

struct EvalConfig {
  std::vector<int> n_seed_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int playlists_per_bucket = 1000;
  int n_reco = 500;
  uint64_t rng_seed = 1;
  NdcgVariant ndcg_variant = NdcgVariant::standard;
  int threads = 1;
};

struct MetricStats {
  double mean = 0.0;
  double ci = 0.0;  // 95% normal-approximation half-width
};

struct BucketReport {
  int n_seed = 0;  // 0 marks the aggregate row
  int n_playlists = 0;
  MetricStats precision, recall, r_precision, ndcg, clicks, popularity;  // percent except clicks
  double coverage_pct = 0.0;
  double embed_ms_mean = 0.0, score_ms_mean = 0.0;
  double total_ms_p50 = 0.0, total_ms_p99 = 0.0;
};

struct EvalReport {
  std::string model;
  uint64_t rng_seed = 0;
  int n_reco = 0;
  std::vector<BucketReport> buckets;
  BucketReport aggregate;

  // The JSON report carries metrics only (bytes reproduce across runs);
  // timing lives in the CSV and in write_timing_json.
  void write_json(const std::string& path) const;
  void write_csv(const std::string& path) const;         // Table-style, incl. timing
  void write_series_csv(const std::string& path) const;  // per-n_seed rows only
  void write_timing_json(const std::string& path) const;
};

// Masks each selected test playlist to its bucket's n_seed, queries the
// recommender, and aggregates the full metric suite. Every evaluated playlist
// lands in exactly one bucket; selection is fixed by cfg.rng_seed.
EvalReport evaluate_model(Recommender& recommender, const Corpus& corpus, const EvalConfig& cfg);

}  // namespace rta
