#include "rta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace rta {

std::pair<double, double> metric_precision_recall(const std::vector<int>& ranked,
                                                  const std::vector<int>& ground_truth,
                                                  int n_reco) {
  if (ground_truth.empty()) throw DomainError("metric_precision_recall: empty ground truth");
  if (n_reco <= 0) throw DomainError("metric_precision_recall: n_reco must be positive");
  std::unordered_set<int> truth(ground_truth.begin(), ground_truth.end());
  int hits = 0;
  for (int id : ranked)
    if (truth.count(id)) ++hits;
  return {static_cast<double>(hits) / n_reco,
          static_cast<double>(hits) / static_cast<double>(truth.size())};
}

double metric_r_precision(const std::vector<int>& ranked,
                          const std::vector<int>& ground_truth_songs,
                          const std::vector<int>& ground_truth_artists,
                          const std::function<int(int)>& artist_of) {
  const size_t g = ground_truth_songs.size();
  if (g == 0) throw DomainError("metric_r_precision: empty ground truth");
  std::unordered_set<int> truth(ground_truth_songs.begin(), ground_truth_songs.end());
  std::unordered_map<int, int> artist_budget;
  for (int a : ground_truth_artists) artist_budget[a]++;

  const size_t head = std::min(g, ranked.size());
  int song_matches = 0;
  std::vector<int> misses;
  for (size_t i = 0; i < head; ++i) {
    if (truth.count(ranked[i])) {
      ++song_matches;
      auto it = artist_budget.find(artist_of(ranked[i]));
      if (it != artist_budget.end() && it->second > 0) it->second--;
    } else {
      misses.push_back(ranked[i]);
    }
  }
  int artist_matches = 0;
  for (int id : misses) {
    auto it = artist_budget.find(artist_of(id));
    if (it != artist_budget.end() && it->second > 0) {
      it->second--;
      ++artist_matches;
    }
  }
  return (static_cast<double>(song_matches) + 0.25 * static_cast<double>(artist_matches)) /
         static_cast<double>(g);
}

namespace {

double ndcg_discount(size_t pos_1based, NdcgVariant variant) {
  if (variant == NdcgVariant::challenge && pos_1based < 2) return 1.0;
  const double p = variant == NdcgVariant::challenge ? static_cast<double>(pos_1based)
                                                     : static_cast<double>(pos_1based) + 1.0;
  return std::log2(p);
}

}  // namespace

double metric_ndcg(const std::vector<int>& ranked, const std::vector<int>& ground_truth,
                   NdcgVariant variant) {
  if (ground_truth.empty()) throw DomainError("metric_ndcg: empty ground truth");
  std::unordered_set<int> truth(ground_truth.begin(), ground_truth.end());
  double dcg = 0.0;
  for (size_t i = 0; i < ranked.size(); ++i)
    if (truth.count(ranked[i])) dcg += 1.0 / ndcg_discount(i + 1, variant);
  const size_t ideal = std::min(truth.size(), ranked.size());
  double idcg = 0.0;
  for (size_t i = 0; i < ideal; ++i) idcg += 1.0 / ndcg_discount(i + 1, variant);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double metric_clicks(const std::vector<int>& ranked, const std::vector<int>& ground_truth,
                     int n_reco) {
  if (ground_truth.empty()) throw DomainError("metric_clicks: empty ground truth");
  std::unordered_set<int> truth(ground_truth.begin(), ground_truth.end());
  for (size_t i = 0; i < ranked.size(); ++i)
    if (truth.count(ranked[i])) return std::floor(static_cast<double>(i) / 10.0);
  return std::floor(static_cast<double>(n_reco) / 10.0) + 1.0;
}

std::pair<double, double> metric_coverage_popularity(
    const std::vector<std::vector<int>>& all_ranked_lists, const Corpus& corpus) {
  if (all_ranked_lists.empty())
    throw DomainError("metric_coverage_popularity: no ranked lists");
  int64_t pop_min = 0, pop_max = 0;
  bool first = true;
  for (const auto& s : corpus.songs) {
    if (first) {
      pop_min = pop_max = s.popularity;
      first = false;
    } else {
      pop_min = std::min(pop_min, s.popularity);
      pop_max = std::max(pop_max, s.popularity);
    }
  }
  const double denom = static_cast<double>(pop_max - pop_min);

  std::unordered_set<int> seen;
  double pop_acc = 0.0;
  int64_t slots = 0;
  for (const auto& list : all_ranked_lists) {
    for (int id : list) {
      seen.insert(id);
      if (denom > 0.0)
        pop_acc += static_cast<double>(corpus.songs[id].popularity - pop_min) / denom;
      ++slots;
    }
  }
  double coverage =
      100.0 * static_cast<double>(seen.size()) / static_cast<double>(corpus.num_songs());
  double popularity = slots > 0 && denom > 0.0 ? 100.0 * pop_acc / static_cast<double>(slots) : 0.0;
  return {coverage, popularity};
}

}  // namespace rta
