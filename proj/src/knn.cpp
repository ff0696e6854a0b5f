#include "rta/knn.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace rta {

// Inverted index song -> train playlists, plus per-playlist unique sizes.
struct KnnIndex {
  std::vector<std::vector<int>> playlists_of_song;  // values are slots into train
  std::vector<std::vector<int>> unique_songs;       // per train slot, sorted unique
  std::vector<int> train_ids;                       // slot -> corpus playlist index
  std::vector<int> popularity_order;                // fallback ranking
};

SknnRecommender::SknnRecommender(const Corpus& corpus, const std::vector<int>& train_ids,
                                 int k_neighbors, bool vsknn)
    : corpus_(corpus), k_(k_neighbors), vsknn_(vsknn), index_(std::make_unique<KnnIndex>()) {
  if (k_neighbors < 1) throw ConfigError("sknn: k_neighbors must be >= 1");
  index_->train_ids = train_ids;
  index_->playlists_of_song.resize(static_cast<size_t>(corpus.num_songs()));
  index_->unique_songs.resize(train_ids.size());
  for (size_t slot = 0; slot < train_ids.size(); ++slot) {
    std::vector<int> uniq = corpus.playlists[train_ids[slot]].songs;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (int s : uniq) index_->playlists_of_song[static_cast<size_t>(s)].push_back(static_cast<int>(slot));
    index_->unique_songs[slot] = std::move(uniq);
  }
  index_->popularity_order.resize(static_cast<size_t>(corpus.num_songs()));
  for (int i = 0; i < corpus.num_songs(); ++i) index_->popularity_order[static_cast<size_t>(i)] = i;
  std::sort(index_->popularity_order.begin(), index_->popularity_order.end(), [&](int a, int b) {
    if (corpus.songs[a].popularity != corpus.songs[b].popularity)
      return corpus.songs[a].popularity > corpus.songs[b].popularity;
    return a < b;
  });
}

SknnRecommender::~SknnRecommender() = default;

KnnResult SknnRecommender::recommend(const std::vector<int>& seed_songs, int n_reco) const {
  if (seed_songs.empty()) throw DomainError("sknn: empty seed");
  const auto& idx = *index_;

  // Seed incidence: position weight of the LAST occurrence of each distinct
  // song (later seeds weigh more under vsknn; plain sknn weighs all 1).
  std::unordered_map<int, double> seed_weight;
  const double inv_len = 1.0 / static_cast<double>(seed_songs.size());
  for (size_t i = 0; i < seed_songs.size(); ++i) {
    double w = vsknn_ ? static_cast<double>(i + 1) * inv_len : 1.0;
    seed_weight[seed_songs[i]] = std::max(seed_weight[seed_songs[i]], w);
  }

  // Accumulate similarity numerators over candidate neighbors.
  std::unordered_map<int, double> numer;  // train slot -> sum of weights
  for (const auto& [song, w] : seed_weight) {
    if (song < 0 || song >= corpus_.num_songs())
      throw LookupError("sknn: unknown song id " + std::to_string(song));
    for (int slot : idx.playlists_of_song[static_cast<size_t>(song)]) numer[slot] += w;
  }

  std::unordered_set<int> seed_set(seed_songs.begin(), seed_songs.end());
  KnnResult out;

  if (numer.empty()) {
    out.popularity_fallback = true;
    for (int id : idx.popularity_order) {
      if (seed_set.count(id)) continue;
      out.ranked.song_ids.push_back(id);
      out.ranked.scores.push_back(static_cast<float>(corpus_.songs[id].popularity));
      if (static_cast<int>(out.ranked.song_ids.size()) == n_reco) break;
    }
    return out;
  }

  const double sqrt_seed = std::sqrt(static_cast<double>(seed_set.size()));
  std::vector<std::pair<double, int>> sims;  // (similarity, slot)
  sims.reserve(numer.size());
  for (const auto& [slot, num] : numer) {
    double denom = sqrt_seed * std::sqrt(static_cast<double>(idx.unique_songs[slot].size()));
    sims.emplace_back(num / denom, slot);
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(sims.size()) > k_) sims.resize(static_cast<size_t>(k_));

  std::unordered_map<int, double> score;
  for (const auto& [sim, slot] : sims)
    for (int song : idx.unique_songs[static_cast<size_t>(slot)])
      if (!seed_set.count(song)) score[song] += sim;

  std::vector<std::pair<double, int>> cand;
  cand.reserve(score.size());
  for (auto& [song, sc] : score) {
    double s = sc;
    if (vsknn_) s /= std::log(1.0 + static_cast<double>(corpus_.songs[song].popularity));
    cand.emplace_back(s, song);
  }
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(cand.size()) > n_reco) cand.resize(static_cast<size_t>(n_reco));
  for (const auto& [s, song] : cand) {
    out.ranked.song_ids.push_back(song);
    out.ranked.scores.push_back(static_cast<float>(s));
  }
  return out;
}

}  // namespace rta
