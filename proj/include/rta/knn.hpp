#pragma once

#include "rta/corpus.hpp"
#include "rta/rank.hpp"

#include <vector>

namespace rta {

struct KnnResult {
  RankedList ranked;
  bool popularity_fallback = false;  // no neighbor shared any seed song
};

struct KnnIndex;

// Session-style nearest neighbors over train playlists. Similarity is the
// cosine over binary incidence, |seed ∩ q| / sqrt(|seed| * |q|); candidate
// score is the similarity sum over the k nearest neighbors containing it.
class SknnRecommender {
 public:
  SknnRecommender(const Corpus& corpus, const std::vector<int>& train_ids, int k_neighbors,
                  bool vsknn = false);
  ~SknnRecommender();

  // Seeds are excluded from results. Falls back to a popularity ranking when
  // no train playlist overlaps the seed.
  KnnResult recommend(const std::vector<int>& seed_songs, int n_reco) const;

  int k_neighbors() const { return k_; }
  bool is_vsknn() const { return vsknn_; }

 private:
  const Corpus& corpus_;
  int k_;
  bool vsknn_;
  std::unique_ptr<KnnIndex> index_;
};

}  // namespace rta
