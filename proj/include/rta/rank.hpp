#pragma once

#include "rta/aggregate.hpp"
#include "rta/common.hpp"

#include <unordered_set>
#include <vector>

namespace rta {

struct RankRequest {
  std::vector<int> seed_song_ids;  // ordered, nonempty
  int n_reco = 500;
  bool exclude_seed = true;
};

struct RankedList {
  std::vector<int> song_ids;   // nonincreasing score, ties by ascending id
  std::vector<float> scores;
};

struct RankTiming {
  double embed_ms = 0.0;
  double score_ms = 0.0;
};

// h_p for a seed sequence: gathers precomputed h_s rows, applies g. No work
// proportional to the catalog happens here.
Vec playlist_embedding(const std::vector<int>& seed_song_ids, const Mat& catalog,
                       const Aggregator& aggregator);

// Exact top-k of <query, row_i> over all catalog rows minus `exclude`,
// deterministic ties (ascending id). Scans shards in parallel with one
// bounded heap per shard; no catalog-sized scratch is ever allocated.
RankedList score_and_top_k(const Vec& query, const Mat& catalog, int n_reco,
                           const std::unordered_set<int>& exclude, int threads = 1);

// playlist_embedding + score_and_top_k with per-stage wall times.
RankedList continue_playlist(const RankRequest& request, const Mat& catalog,
                             const Aggregator& aggregator, RankTiming* timing = nullptr,
                             int threads = 1);

}  // namespace rta
