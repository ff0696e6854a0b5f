#pragma once

#include "rta/corpus.hpp"
#include "rta/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace rta::testsupport {

struct SyntheticSpec {
  int n_songs = 500;
  int n_clusters = 20;
  int n_playlists = 2000;
  int min_len = 15;
  int max_len = 30;
  int min_segment = 5;
  int max_segment = 12;
  uint64_t seed = 42;
};

// Clustered playlists with session drift: each playlist walks 2-4 cluster
// segments, so the most recent songs predict the continuation better than
// the overall mix. Artists coincide with clusters; albums split clusters.
inline Corpus make_synthetic_corpus(const SyntheticSpec& spec = {}) {
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.max_playlist_len = spec.max_len + 10;

  const int per_cluster = spec.n_songs / spec.n_clusters;
  corpus.songs.resize(static_cast<size_t>(spec.n_songs));
  for (int i = 0; i < spec.n_songs; ++i) {
    Song& s = corpus.songs[static_cast<size_t>(i)];
    s.song_id = i;
    const int cluster = i / per_cluster;
    s.artist_id = std::min(cluster, spec.n_clusters - 1);
    s.album_id = i / std::max(1, per_cluster / 2);
    s.duration_s = 120.0 + static_cast<double>(rng.bounded(300));
    s.dur_bucket = bucket_duration(s.duration_s);
    s.track_uri = "synthetic:track:" + std::to_string(i);
  }

  auto cluster_song = [&](int cluster) {
    int lo = cluster * per_cluster;
    int span = cluster == spec.n_clusters - 1 ? spec.n_songs - lo : per_cluster;
    return lo + static_cast<int>(rng.bounded(static_cast<uint32_t>(span)));
  };

  for (int p = 0; p < spec.n_playlists; ++p) {
    Playlist pl;
    pl.playlist_id = p;
    const int target_len =
        spec.min_len + static_cast<int>(rng.bounded(
                           static_cast<uint32_t>(spec.max_len - spec.min_len + 1)));
    int cluster = static_cast<int>(rng.bounded(static_cast<uint32_t>(spec.n_clusters)));
    while (static_cast<int>(pl.songs.size()) < target_len) {
      int seg = spec.min_segment +
                static_cast<int>(rng.bounded(
                    static_cast<uint32_t>(spec.max_segment - spec.min_segment + 1)));
      for (int i = 0; i < seg && static_cast<int>(pl.songs.size()) < target_len; ++i) {
        int s = cluster_song(cluster);
        if (!pl.songs.empty() && pl.songs.back() == s) continue;
        pl.songs.push_back(s);
      }
      cluster = (cluster + 1 + static_cast<int>(rng.bounded(
                                   static_cast<uint32_t>(spec.n_clusters - 1)))) %
                spec.n_clusters;
    }
    corpus.playlists.push_back(std::move(pl));
  }

  std::vector<int> all(corpus.playlists.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  corpus.recompute_popularity(all);
  corpus.train_ids = std::move(all);
  return corpus;
}

inline void split_synthetic(Corpus& corpus, int n_val, int n_test, uint64_t seed = 7,
                            int min_len = 12) {
  SplitSpec spec;
  spec.rng_seed = seed;
  spec.n_val = n_val;
  spec.n_test = n_test;
  spec.min_len = min_len;
  SplitResult s = split_dataset(corpus, spec);
  corpus.train_ids = s.train_ids;
  corpus.val_ids = s.val_ids;
  corpus.test_ids = s.test_ids;
  corpus.split_seed = seed;
  corpus.recompute_popularity(corpus.train_ids);
}

}  // namespace rta::testsupport
