#pragma once

#include "rta/corpus.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace rta {

enum class NdcgVariant {
  standard,   // discount log2(i + 1) at 1-based position i
  challenge,  // positions 1 and 2 undiscounted: log2(max(i, 2))
};

// hits = |ranked ∩ truth|; precision = hits / n_reco, recall = hits / |truth|.
std::pair<double, double> metric_precision_recall(const std::vector<int>& ranked,
                                                  const std::vector<int>& ground_truth,
                                                  int n_reco);

// Over the first G = |truth| entries: (song matches + 0.25 * artist-only
// matches) / G. Artist credit is capped by the artist's multiplicity in the
// ground truth, with song matches consuming their artist's budget first.
double metric_r_precision(const std::vector<int>& ranked,
                          const std::vector<int>& ground_truth_songs,
                          const std::vector<int>& ground_truth_artists,
                          const std::function<int(int)>& artist_of);

double metric_ndcg(const std::vector<int>& ranked, const std::vector<int>& ground_truth,
                   NdcgVariant variant = NdcgVariant::standard);

// Ten-song pages before the first hit: floor((rank - 1) / 10); no hit within
// n_reco costs the penalty value floor(n_reco / 10) + 1.
double metric_clicks(const std::vector<int>& ranked, const std::vector<int>& ground_truth,
                     int n_reco);

// coverage: percent of the catalog recommended at least once across lists.
// popularity: mean over every recommended slot of min-max-normalized train
// popularity, in percent.
std::pair<double, double> metric_coverage_popularity(
    const std::vector<std::vector<int>>& all_ranked_lists, const Corpus& corpus);

}  // namespace rta
