#pragma once

#include "rta/common.hpp"
#include "rta/corpus.hpp"

#include <string>
#include <vector>

namespace rta {

// One embedding table per id family. `present` marks rows that were backed by
// at least one song when the table was built; absent rows cannot be queried
// and callers fall back per their own cold-value policy.
struct EmbeddingTable {
  Mat rows;                      // count x D
  std::vector<uint8_t> present;  // same length as rows
  bool has(int id) const {
    return id >= 0 && id < rows.rows() && present[static_cast<size_t>(id)] != 0;
  }
};

// The learned state of the representation side: one vector per song plus one
// table per metadata family (artist, album, duration bucket, popularity
// bucket). Duration/popularity tables are indexed by bucket - 1.
struct EmbeddingStore {
  int dim = 0;
  Mat song_vectors;  // N x D
  EmbeddingTable artist, album, dur_bucket, pop_bucket;

  void save(const std::string& path) const;  // "RTAE" container
  static EmbeddingStore load(const std::string& path);
};

struct WrmfConfig {
  int dim = 128;
  double confidence_alpha = 10.0;
  double lambda = 0.1;
  int iterations = 15;
  uint64_t rng_seed = 1;
};

struct WrmfResult {
  Mat playlist_vectors;  // K x D, over the given train playlists
  Mat song_vectors;      // N x D
  std::vector<double> objective;  // after each sweep
};

// Alternating least squares on the binary playlist-song occurrence matrix
// with confidence 1 + alpha * r, r in {0,1}. Deterministic given rng_seed.
// `on_sweep`, when set, observes factors after every sweep (test hook).
WrmfResult wrmf_factorize(
    const Corpus& corpus, const std::vector<int>& train_playlists, const WrmfConfig& config,
    const std::function<void(int, const Mat&, const Mat&)>& on_sweep = nullptr);

// Weighted-regularized objective of the factorization, evaluated exactly.
double wrmf_objective(const Corpus& corpus, const std::vector<int>& train_playlists,
                      const Mat& playlist_vectors, const Mat& song_vectors,
                      const WrmfConfig& config);

// e_m = mean of e_s over songs carrying metadata value m; values backed by a
// single song copy that song's vector, unobserved values are absent.
EmbeddingStore init_metadata_embeddings(const Mat& song_vectors, const Corpus& corpus);

}  // namespace rta
