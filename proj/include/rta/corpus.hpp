#pragma once

#include "rta/common.hpp"
#include "rta/rng.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace rta {

struct Song {
  int song_id = -1;
  int artist_id = -1;
  int album_id = -1;
  double duration_s = 0.0;
  int64_t popularity = 0;  // occurrence count over train playlists
  int dur_bucket = 1;      // [1, 40]
  int pop_bucket = 1;      // [1, 100]
  std::string track_uri;   // external id
};

struct Playlist {
  int64_t playlist_id = 0;  // external pid
  std::vector<int> songs;   // dense song ids, in playlist order
};

// dur bucket = max(1, min(40, ceil(duration_s / 30))). Zero duration clamps
// to the lowest bucket.
int bucket_duration(double duration_s);

// pop bucket = min(100, 1 + 100 * floor(log(pop) / log(alpha))) for pop >= 1,
// bucket 1 for pop = 0. alpha must exceed 1.
int bucket_popularity(int64_t popularity, double alpha);

struct IngestStats {
  int64_t files_read = 0;
  int64_t rejected_tracks = 0;      // missing artist/album uri
  int64_t dropped_playlists = 0;    // empty after rejection
  int64_t truncated_playlists = 0;  // longer than L
  int64_t metadata_conflicts = 0;   // same uri, different metadata
};

// Immutable after construction; shareable across threads.
class Corpus {
 public:
  std::vector<Song> songs;
  std::vector<Playlist> playlists;
  int max_playlist_len = 250;  // L
  double alpha_pop = 0.0;      // popularity normalizer; 0 = derive from max
  IngestStats ingest_stats;

  // Split by playlist index (positions in `playlists`), disjoint.
  std::vector<int> train_ids, val_ids, test_ids;
  uint64_t split_seed = 0;

  int num_songs() const { return static_cast<int>(songs.size()); }
  int num_playlists() const { return static_cast<int>(playlists.size()); }

  int num_artists() const;
  int num_albums() const;

  // Recounts song popularity over the given playlists (typically the train
  // split) and refreshes pop buckets. With alpha_pop = 0 the normalizer
  // becomes the max observed count.
  void recompute_popularity(const std::vector<int>& playlist_ids);

  int64_t total_interactions(const std::vector<int>& playlist_ids) const;

  void save(const std::string& path) const;  // "RTAC" container
  static Corpus load(const std::string& path);
  void write_manifest(const std::string& path) const;
};

// Walks `directory_path` for MPD-style slice files (every *.json), parses the
// top-level "playlists" array, assigns dense ids in lexicographic URI order,
// and counts popularity over everything ingested (the caller re-counts over
// the train split after splitting).
Corpus load_mpd_slices(const std::string& directory_path, int max_playlist_len = 250);

struct SplitSpec {
  uint64_t rng_seed = 1;
  int n_val = 10000;
  int n_test = 10000;
  int min_len = 20;  // eligibility for val/test
};

struct SplitResult {
  std::vector<int> train_ids, val_ids, test_ids;
};

// Uniform sample of eligible playlists into val/test; everything else trains.
// Fully determined by spec.rng_seed.
SplitResult split_dataset(const Corpus& corpus, const SplitSpec& spec);

struct MaskedPlaylist {
  std::vector<int> seed;                // first n_seed songs, in order
  std::vector<int> ground_truth;        // masked tail, deduplicated, sorted
  std::vector<int> ground_truth_artists;  // artist of each ground-truth song
};

MaskedPlaylist mask_playlist(const Playlist& p, int n_seed, const Corpus& corpus);

}  // namespace rta
