#include "rta/rank.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace rta {

namespace {

struct Entry {
  float score;
  int id;
};

// a ranks ahead of b
inline bool better(const Entry& a, const Entry& b) {
  return a.score > b.score || (a.score == b.score && a.id < b.id);
}

// Streaming bounded selection over a row range. Keeps the k best entries;
// `worst` (heap top) is the entry that would be evicted first.
void scan_shard(const Mat& catalog, const Vec& query, int begin, int end, int k,
                const std::unordered_set<int>& exclude, std::vector<Entry>& out) {
  auto cmp = [](const Entry& a, const Entry& b) { return better(a, b); };  // min-heap on rank
  out.clear();
  out.reserve(static_cast<size_t>(k) + 1);
  for (int i = begin; i < end; ++i) {
    if (!exclude.empty() && exclude.count(i)) continue;
    Entry e{catalog.row(i).dot(query), i};
    if (static_cast<int>(out.size()) < k) {
      out.push_back(e);
      std::push_heap(out.begin(), out.end(), cmp);
    } else if (better(e, out.front())) {
      std::pop_heap(out.begin(), out.end(), cmp);
      out.back() = e;
      std::push_heap(out.begin(), out.end(), cmp);
    }
  }
}

}  // namespace

Vec playlist_embedding(const std::vector<int>& seed_song_ids, const Mat& catalog,
                       const Aggregator& aggregator) {
  if (seed_song_ids.empty()) throw DomainError("playlist_embedding: empty seed");
  Mat rows(static_cast<Eigen::Index>(seed_song_ids.size()), catalog.cols());
  for (size_t i = 0; i < seed_song_ids.size(); ++i) {
    int id = seed_song_ids[i];
    if (id < 0 || id >= catalog.rows())
      throw LookupError("playlist_embedding: unknown song id " + std::to_string(id));
    rows.row(static_cast<Eigen::Index>(i)) = catalog.row(id);
  }
  return aggregator.forward(rows);
}

RankedList score_and_top_k(const Vec& query, const Mat& catalog, int n_reco,
                           const std::unordered_set<int>& exclude, int threads) {
  const int n = static_cast<int>(catalog.rows());
  if (query.size() != catalog.cols())
    throw ShapeError("score_and_top_k: query dim " + std::to_string(query.size()) +
                     " != catalog dim " + std::to_string(catalog.cols()));
  if (n_reco < 0 || n_reco > n - static_cast<int>(exclude.size()))
    throw DomainError("score_and_top_k: n_reco " + std::to_string(n_reco) +
                      " infeasible for catalog of " + std::to_string(n) + " minus " +
                      std::to_string(exclude.size()) + " exclusions");

  std::vector<std::vector<Entry>> shard_top;
  if (threads <= 1 || n < 4 * threads) {
    shard_top.resize(1);
    scan_shard(catalog, query, 0, n, n_reco, exclude, shard_top[0]);
  } else {
    shard_top.resize(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk;
      const int e = std::min(n, b + chunk);
      if (b >= e) break;
      pool.emplace_back([&, t, b, e] {
        scan_shard(catalog, query, b, e, n_reco, exclude, shard_top[static_cast<size_t>(t)]);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Shard results merge in shard order, then one final deterministic sort.
  std::vector<Entry> all;
  for (const auto& s : shard_top) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return better(a, b); });
  if (static_cast<int>(all.size()) > n_reco) all.resize(static_cast<size_t>(n_reco));

  RankedList out;
  out.song_ids.reserve(all.size());
  out.scores.reserve(all.size());
  for (const Entry& e : all) {
    out.song_ids.push_back(e.id);
    out.scores.push_back(e.score);
  }
  return out;
}

RankedList continue_playlist(const RankRequest& request, const Mat& catalog,
                             const Aggregator& aggregator, RankTiming* timing, int threads) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  Vec h_p = playlist_embedding(request.seed_song_ids, catalog, aggregator);
  auto t1 = clock::now();

  std::unordered_set<int> exclude;
  if (request.exclude_seed)
    exclude.insert(request.seed_song_ids.begin(), request.seed_song_ids.end());
  RankedList out = score_and_top_k(h_p, catalog, request.n_reco, exclude, threads);
  auto t2 = clock::now();

  if (timing) {
    timing->embed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    timing->score_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  }
  return out;
}

}  // namespace rta
