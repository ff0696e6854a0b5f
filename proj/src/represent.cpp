#include "rta/represent.hpp"

#include "rta/binio.hpp"
#include "rta/nn.hpp"

#include <cmath>
#include <thread>

namespace rta {

std::string to_string(RepresenterKind k) {
  switch (k) {
    case RepresenterKind::direct: return "mf";
    case RepresenterKind::fm: return "fm";
    case RepresenterKind::attention: return "nn";
  }
  return "?";
}

RepresenterKind representer_kind_from_string(const std::string& s) {
  if (s == "mf" || s == "direct") return RepresenterKind::direct;
  if (s == "fm") return RepresenterKind::fm;
  if (s == "nn" || s == "attention") return RepresenterKind::attention;
  throw ConfigError("unknown representer kind: " + s);
}

namespace {

std::vector<uint8_t> table_presence(const EmbeddingTable& t) { return t.present; }

}  // namespace

void Representer::register_params(ParamSet& ps, const EmbeddingStore& store) {
  if (store.dim != cfg_.dim)
    throw ConfigError("representer dim " + std::to_string(cfg_.dim) +
                      " != embedding store dim " + std::to_string(store.dim));
  const int d = cfg_.dim;
  const bool needs_song = cfg_.kind == RepresenterKind::direct ||
                          (cfg_.kind == RepresenterKind::attention && cfg_.include_song_token);
  const bool needs_meta = cfg_.kind != RepresenterKind::direct;

  if (needs_song) {
    song_emb_ = &ps.add("song_emb", store.song_vectors, false, true);
    song_emb_->frozen = cfg_.freeze_song_embeddings;
  }
  if (needs_meta) {
    meta_[0] = &ps.add("meta.artist", store.artist.rows, false, true);
    meta_[1] = &ps.add("meta.album", store.album.rows, false, true);
    meta_[2] = &ps.add("meta.dur", store.dur_bucket.rows, false, true);
    meta_[3] = &ps.add("meta.pop", store.pop_bucket.rows, false, true);
    presence_.artist = table_presence(store.artist);
    presence_.album = table_presence(store.album);
    presence_.dur_bucket = table_presence(store.dur_bucket);
    presence_.pop_bucket = table_presence(store.pop_bucket);
  } else {
    presence_ = {};
  }

  if (cfg_.kind == RepresenterKind::attention) {
    if (cfg_.heads < 1 || d % cfg_.heads != 0)
      throw ConfigError("phi_nn: head count must divide dim");
    Rng rng(derive_seed(cfg_.init_seed, 0x9e11));
    const float s = 1.0f / std::sqrt(static_cast<float>(d));
    attn_.clear();
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string base = "phi_nn.l" + std::to_string(l) + ".";
      AttnLayer layer;
      layer.wq = &ps.add(base + "wq", nn::gaussian_init(d, d, rng, s));
      layer.wk = &ps.add(base + "wk", nn::gaussian_init(d, d, rng, s));
      layer.wv = &ps.add(base + "wv", nn::gaussian_init(d, d, rng, s));
      layer.wo = &ps.add(base + "wo", nn::gaussian_init(d, d, rng, s));
      layer.bo = &ps.add(base + "bo", Mat::Zero(1, d), true);
      layer.ln_g = &ps.add(base + "ln.g", Mat::Ones(1, d), true);
      layer.ln_b = &ps.add(base + "ln.b", Mat::Zero(1, d), true);
      attn_.push_back(layer);
    }
  }
}

void Representer::bind_params(ParamSet& ps) {
  const bool needs_song = cfg_.kind == RepresenterKind::direct ||
                          (cfg_.kind == RepresenterKind::attention && cfg_.include_song_token);
  if (needs_song) song_emb_ = &ps.at("song_emb");
  if (cfg_.kind != RepresenterKind::direct) {
    meta_[0] = &ps.at("meta.artist");
    meta_[1] = &ps.at("meta.album");
    meta_[2] = &ps.at("meta.dur");
    meta_[3] = &ps.at("meta.pop");
  }
  if (cfg_.kind == RepresenterKind::attention) {
    attn_.clear();
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string base = "phi_nn.l" + std::to_string(l) + ".";
      attn_.push_back(AttnLayer{&ps.at(base + "wq"), &ps.at(base + "wk"), &ps.at(base + "wv"),
                                &ps.at(base + "wo"), &ps.at(base + "bo"), &ps.at(base + "ln.g"),
                                &ps.at(base + "ln.b")});
    }
  }
}

namespace {

// Metadata ids of a song in table order, with -1 for values the store cannot
// serve (cold at inference).
std::array<int, 4> metadata_ids(const Song& s, const Representer::Presence& pres) {
  auto ok = [](const std::vector<uint8_t>& mask, int id) {
    return id >= 0 && id < static_cast<int>(mask.size()) && mask[static_cast<size_t>(id)] != 0;
  };
  std::array<int, 4> ids{};
  ids[0] = ok(pres.artist, s.artist_id) ? s.artist_id : -1;
  ids[1] = ok(pres.album, s.album_id) ? s.album_id : -1;
  ids[2] = ok(pres.dur_bucket, s.dur_bucket - 1) ? s.dur_bucket - 1 : -1;
  ids[3] = ok(pres.pop_bucket, s.pop_bucket - 1) ? s.pop_bucket - 1 : -1;
  return ids;
}

}  // namespace

Vec Representer::forward(int song_id, const Corpus& corpus) const {
  if (song_id < 0 || song_id >= corpus.num_songs())
    throw LookupError("representer: unknown song id " + std::to_string(song_id));
  const int d = cfg_.dim;
  switch (cfg_.kind) {
    case RepresenterKind::direct:
      return song_emb_->value.row(song_id).transpose();
    case RepresenterKind::fm: {
      const auto ids = metadata_ids(corpus.songs[song_id], presence_);
      Vec acc = Vec::Zero(d);
      int n = 0;
      for (int f = 0; f < 4; ++f) {
        if (ids[f] < 0) continue;
        acc += meta_[f]->value.row(ids[f]).transpose();
        ++n;
      }
      if (n > 0) acc /= static_cast<float>(n);
      return acc;
    }
    case RepresenterKind::attention: {
      Mat tokens = attention_tokens(song_id, corpus);
      if (tokens.rows() == 0) return Vec::Zero(d);
      return attention_forward(tokens);
    }
  }
  throw ConfigError("representer: bad kind");
}

Mat Representer::attention_tokens(int song_id, const Corpus& corpus) const {
  const Song& s = corpus.songs[song_id];
  const auto ids = metadata_ids(s, presence_);
  Mat tokens(5, cfg_.dim);
  Eigen::Index r = 0;
  if (cfg_.include_song_token && song_id < song_emb_->value.rows())
    tokens.row(r++) = song_emb_->value.row(song_id);
  for (int f = 0; f < 4; ++f)
    if (ids[f] >= 0) tokens.row(r++) = meta_[f]->value.row(ids[f]);
  return tokens.topRows(r);
}

Vec Representer::attention_forward(const Mat& tokens) const {
  Mat x = tokens;
  for (const auto& l : attn_) {
    Mat normed = nn::layer_norm_infer(x, l.ln_g->value.row(0), l.ln_b->value.row(0));
    x += nn::multi_head_attention_infer(normed, l.wq->value, l.wk->value, l.wv->value,
                                        l.wo->value, l.bo->value.row(0), cfg_.heads,
                                        /*causal=*/false);
  }
  return x.colwise().mean().transpose();
}

Mat Representer::forward_batch(const std::vector<int>& ids, const Corpus& corpus) const {
  Mat out(static_cast<Eigen::Index>(ids.size()), cfg_.dim);
  for (size_t i = 0; i < ids.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = forward(ids[i], corpus).transpose();
  return out;
}

ad::Var Representer::build(ad::Tape& t, const std::vector<int>& ids, const Corpus& corpus,
                           float dropout_rate, Rng* rng, bool training) const {
  switch (cfg_.kind) {
    case RepresenterKind::direct:
      return t.gather(*song_emb_, ids);
    case RepresenterKind::fm: {
      std::vector<int> a, b, du, po;
      a.reserve(ids.size());
      b.reserve(ids.size());
      du.reserve(ids.size());
      po.reserve(ids.size());
      for (int sid : ids) {
        const auto m = metadata_ids(corpus.songs[sid], presence_);
        for (int f = 0; f < 4; ++f)
          if (m[f] < 0)
            throw LookupError("phi_fm: cold metadata for song " + std::to_string(sid) +
                              " on the training path");
        a.push_back(m[0]);
        b.push_back(m[1]);
        du.push_back(m[2]);
        po.push_back(m[3]);
      }
      ad::Var sum = ad::add(ad::add(t.gather(*meta_[0], a), t.gather(*meta_[1], b)),
                            ad::add(t.gather(*meta_[2], du), t.gather(*meta_[3], po)));
      return ad::scale(sum, 0.25f);
    }
    case RepresenterKind::attention: {
      std::vector<ad::Var> rows;
      rows.reserve(ids.size());
      for (int sid : ids) {
        const auto m = metadata_ids(corpus.songs[sid], presence_);
        std::vector<ad::Var> toks;
        if (cfg_.include_song_token) toks.push_back(t.gather(*song_emb_, {sid}));
        for (int f = 0; f < 4; ++f) {
          if (m[f] < 0)
            throw LookupError("phi_nn: cold metadata for song " + std::to_string(sid) +
                              " on the training path");
          toks.push_back(t.gather(*meta_[f], {m[f]}));
        }
        ad::Var x = ad::concat_rows(toks);
        for (const auto& l : attn_) {
          ad::Var normed = ad::layer_norm_rows(x, t.leaf(*l.ln_g), t.leaf(*l.ln_b));
          ad::Var attn = nn::multi_head_attention(t, normed, t.leaf(*l.wq), t.leaf(*l.wk),
                                                  t.leaf(*l.wv), t.leaf(*l.wo), t.leaf(*l.bo),
                                                  cfg_.heads, /*causal=*/false);
          if (training && rng) attn = ad::dropout(attn, dropout_rate, *rng, training);
          x = ad::add(x, attn);
        }
        rows.push_back(ad::mean_rows(x));
      }
      return rows.size() == 1 ? rows[0] : ad::concat_rows(rows);
    }
  }
  throw ConfigError("representer: bad kind");
}

Mat precompute_catalog(const Representer& rep, const Corpus& corpus, int threads) {
  const int n = corpus.num_songs();
  Mat out(n, rep.config().dim);
  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) out.row(i) = rep.forward(i, corpus).transpose();
  };
  if (threads <= 1 || n < 2 * threads) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int b = t * chunk;
      int e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

namespace {
constexpr char kCatalogMagic[4] = {'R', 'T', 'A', 'P'};
constexpr uint32_t kCatalogVersion = 1;
}  // namespace

void save_catalog_matrix(const std::string& path, const Mat& matrix, uint64_t checkpoint_hash) {
  BinWriter w(path + ".tmp");
  w.magic(kCatalogMagic);
  w.u32(kCatalogVersion);
  w.u64(checkpoint_hash);
  w.mat(matrix);
  w.close();
  commit_tmp_file(path);
}

CatalogMatrix load_catalog_matrix(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kCatalogMagic, "catalog matrix");
  uint32_t version = r.u32();
  if (version != kCatalogVersion) throw IoError("unsupported catalog matrix version in " + path);
  CatalogMatrix c;
  c.checkpoint_hash = r.u64();
  c.matrix = r.mat();
  return c;
}

}  // namespace rta
