#pragma once

#include "rta/evalsuite.hpp"
#include "rta/knn.hpp"
#include "rta/model.hpp"

#include <chrono>

namespace rta {

// Trained model + precomputed catalog matrix behind the Recommender interface.
class RtaRecommender : public Recommender {
 public:
  RtaRecommender(const RtaModel& model, Mat catalog, int threads = 1)
      : model_(model), catalog_(std::move(catalog)), threads_(threads) {}

  std::string name() const override { return model_.name(); }

  RankedList recommend(const std::vector<int>& seed, int n_reco, RankTiming* timing) override {
    RankRequest req;
    req.seed_song_ids = seed;
    req.n_reco = n_reco;
    return continue_playlist(req, catalog_, model_.aggregator(), timing, threads_);
  }

  const Mat& catalog() const { return catalog_; }

 private:
  const RtaModel& model_;
  Mat catalog_;
  int threads_;
};

class KnnRecommender : public Recommender {
 public:
  KnnRecommender(const Corpus& corpus, const std::vector<int>& train_ids, int k_neighbors,
                 bool vsknn)
      : impl_(corpus, train_ids, k_neighbors, vsknn), vsknn_(vsknn) {}

  std::string name() const override { return vsknn_ ? "vsknn" : "sknn"; }

  RankedList recommend(const std::vector<int>& seed, int n_reco, RankTiming* timing) override {
    auto t0 = std::chrono::steady_clock::now();
    KnnResult r = impl_.recommend(seed, n_reco);
    if (timing) {
      timing->embed_ms = 0.0;
      timing->score_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return std::move(r.ranked);
  }

 private:
  SknnRecommender impl_;
  bool vsknn_;
};

}  // namespace rta
