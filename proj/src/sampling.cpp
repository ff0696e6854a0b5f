#include "rta/sampling.hpp"

#include <algorithm>

namespace rta {

std::vector<int> sample_negatives(int catalog_size, const std::unordered_set<int>& exclude,
                                  int count, Rng& rng) {
  const int available = catalog_size - static_cast<int>(exclude.size());
  if (count < 0 || count > available)
    throw DomainError("sample_negatives: requested " + std::to_string(count) + " from " +
                      std::to_string(available) + " available songs");
  std::vector<int> out;
  out.reserve(count);

  if (count * 4 <= available) {
    std::unordered_set<int> chosen;
    chosen.reserve(count * 2);
    while (static_cast<int>(out.size()) < count) {
      int c = static_cast<int>(rng.bounded(static_cast<uint32_t>(catalog_size)));
      if (exclude.count(c) || !chosen.insert(c).second) continue;
      out.push_back(c);
    }
  } else {
    // Dense request: shuffle the explicit complement.
    std::vector<int> pool;
    pool.reserve(available);
    for (int i = 0; i < catalog_size; ++i)
      if (!exclude.count(i)) pool.push_back(i);
    rng.shuffle(pool);
    out.assign(pool.begin(), pool.begin() + count);
  }
  return out;
}

std::vector<int> sample_negatives_by_popularity(const std::vector<int64_t>& cumulative_weights,
                                                const std::unordered_set<int>& exclude, int count,
                                                Rng& rng) {
  const int n = static_cast<int>(cumulative_weights.size());
  if (count > n - static_cast<int>(exclude.size()))
    throw DomainError("sample_negatives_by_popularity: infeasible count");
  const int64_t total = cumulative_weights.back();
  std::unordered_set<int> chosen;
  std::vector<int> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    int64_t x = static_cast<int64_t>(rng.uniform_double() * static_cast<double>(total));
    if (x >= total) x = total - 1;
    int idx = static_cast<int>(
        std::upper_bound(cumulative_weights.begin(), cumulative_weights.end(), x) -
        cumulative_weights.begin());
    if (idx >= n) idx = n - 1;
    if (exclude.count(idx) || !chosen.insert(idx).second) continue;
    out.push_back(idx);
  }
  return out;
}

}  // namespace rta
