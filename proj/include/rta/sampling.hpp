#pragma once

#include "rta/common.hpp"
#include "rta/rng.hpp"

#include <unordered_set>
#include <vector>

namespace rta {

// `count` ids drawn uniformly without replacement from [0, catalog_size)
// minus exclude. Rejection sampling when the target is sparse relative to the
// catalog, complement shuffle otherwise.
std::vector<int> sample_negatives(int catalog_size, const std::unordered_set<int>& exclude,
                                  int count, Rng& rng);

// Popularity-proportional variant (weight pop + 1 so zero-popularity songs
// stay reachable), still without replacement and excluding `exclude`.
std::vector<int> sample_negatives_by_popularity(const std::vector<int64_t>& cumulative_weights,
                                                const std::unordered_set<int>& exclude, int count,
                                                Rng& rng);

}  // namespace rta
