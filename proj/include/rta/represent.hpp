#pragma once

#include "rta/corpus.hpp"
#include "rta/embeddings.hpp"
#include "rta/tape.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rta {

enum class RepresenterKind { direct, fm, attention };

std::string to_string(RepresenterKind k);
RepresenterKind representer_kind_from_string(const std::string& s);

struct RepresenterConfig {
  RepresenterKind kind = RepresenterKind::direct;
  int dim = 128;
  // attention variant
  int layers = 1;
  int heads = 4;
  bool include_song_token = true;
  uint64_t init_seed = 1;
  bool freeze_song_embeddings = false;
};

// Song representation h_s. Depends only on the song id and its metadata, so
// the whole catalog can be represented offline; playlists never enter here.
class Representer {
 public:
  explicit Representer(RepresenterConfig cfg) : cfg_(std::move(cfg)) {}

  // Creates parameters (seeded from the store) and binds to them.
  void register_params(ParamSet& ps, const EmbeddingStore& store);
  // Binds to already-existing parameters (checkpoint load path).
  void bind_params(ParamSet& ps);

  const RepresenterConfig& config() const { return cfg_; }

  // Inference path. Metadata values without a table row (cold at inference)
  // are skipped: the song falls back to the mean of its available fields,
  // and to the zero vector when none remain.
  Vec forward(int song_id, const Corpus& corpus) const;
  Mat forward_batch(const std::vector<int>& ids, const Corpus& corpus) const;

  // Training path: representation rows for `ids` on the tape. All metadata
  // of the given songs must be present (always true for catalog songs).
  ad::Var build(ad::Tape& t, const std::vector<int>& ids, const Corpus& corpus,
                float dropout_rate = 0.0f, Rng* rng = nullptr, bool training = false) const;

  // Presence masks travel with checkpoints; the store is not needed there.
  struct Presence {
    std::vector<uint8_t> artist, album, dur_bucket, pop_bucket;
  };
  const Presence& presence() const { return presence_; }
  void set_presence(Presence p) { presence_ = std::move(p); }

 private:
  Mat attention_tokens(int song_id, const Corpus& corpus) const;
  Vec attention_forward(const Mat& tokens) const;

  RepresenterConfig cfg_;
  Presence presence_;

  Parameter* song_emb_ = nullptr;
  Parameter* meta_[4] = {nullptr, nullptr, nullptr, nullptr};  // artist, album, dur, pop
  struct AttnLayer {
    Parameter *wq, *wk, *wv, *wo, *bo, *ln_g, *ln_b;
  };
  std::vector<AttnLayer> attn_;
};

// Row i = phi(song i); embarrassingly parallel with deterministic output.
Mat precompute_catalog(const Representer& rep, const Corpus& corpus, int threads = 1);

// "RTAP" container, keyed by the hash of the checkpoint it was derived from.
void save_catalog_matrix(const std::string& path, const Mat& matrix, uint64_t checkpoint_hash);
struct CatalogMatrix {
  Mat matrix;
  uint64_t checkpoint_hash = 0;
};
CatalogMatrix load_catalog_matrix(const std::string& path);

}  // namespace rta
