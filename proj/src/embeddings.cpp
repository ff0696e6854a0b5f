#include "rta/embeddings.hpp"

#include "rta/binio.hpp"
#include "rta/rng.hpp"

#include <Eigen/Cholesky>

#include <functional>

namespace rta {

namespace {

using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

constexpr char kStoreMagic[4] = {'R', 'T', 'A', 'E'};
constexpr uint32_t kStoreVersion = 1;

void write_table(BinWriter& w, const EmbeddingTable& t) {
  w.mat(t.rows);
  w.vec_pod(t.present);
}

EmbeddingTable read_table(BinReader& r) {
  EmbeddingTable t;
  t.rows = r.mat();
  t.present = r.vec_pod<uint8_t>();
  return t;
}

}  // namespace

void EmbeddingStore::save(const std::string& path) const {
  BinWriter w(path + ".tmp");
  w.magic(kStoreMagic);
  w.u32(kStoreVersion);
  w.u32(static_cast<uint32_t>(dim));
  w.mat(song_vectors);
  write_table(w, artist);
  write_table(w, album);
  write_table(w, dur_bucket);
  write_table(w, pop_bucket);
  w.close();
  commit_tmp_file(path);
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kStoreMagic, "embedding store");
  uint32_t version = r.u32();
  if (version != kStoreVersion)
    throw IoError("unsupported embedding store version in " + path);
  EmbeddingStore s;
  s.dim = static_cast<int>(r.u32());
  s.song_vectors = r.mat();
  s.artist = read_table(r);
  s.album = read_table(r);
  s.dur_bucket = read_table(r);
  s.pop_bucket = read_table(r);
  return s;
}

WrmfResult wrmf_factorize(const Corpus& corpus, const std::vector<int>& train_playlists,
                          const WrmfConfig& config,
                          const std::function<void(int, const Mat&, const Mat&)>& on_sweep) {
  if (corpus.num_songs() == 0 || train_playlists.empty())
    throw ConfigError("wrmf_factorize: empty corpus or train set");
  if (config.iterations < 1) throw ConfigError("wrmf_factorize: iterations must be >= 1");
  if (config.lambda <= 0.0) throw ConfigError("wrmf_factorize: lambda must be > 0");
  if (config.dim < 1) throw ConfigError("wrmf_factorize: dim must be >= 1");

  const int K = static_cast<int>(train_playlists.size());
  const int N = corpus.num_songs();
  const int D = config.dim;
  const double alpha = config.confidence_alpha;
  const double lambda = config.lambda;

  // Occurrence lists both ways (binary: duplicates within a playlist collapse).
  std::vector<std::vector<int>> items_of(K);
  std::vector<std::vector<int>> users_of(N);
  for (int u = 0; u < K; ++u) {
    const auto& songs = corpus.playlists[train_playlists[u]].songs;
    std::vector<int> uniq(songs);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    items_of[u] = std::move(uniq);
    for (int i : items_of[u]) users_of[i].push_back(u);
  }

  Rng rng(config.rng_seed);
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(D));
  DMat X(K, D), Y(N, D);
  for (int u = 0; u < K; ++u)
    for (int d = 0; d < D; ++d) X(u, d) = rng.gaussian() * init_scale;
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) Y(i, d) = rng.gaussian() * init_scale;

  // For observed cells, confidence is 1 + alpha against preference 1:
  //   solve (G^T G + alpha * sum y y^T + lambda I) x = (1 + alpha) * sum y
  // where G is the full factor matrix of the other side.
  auto sweep_side = [&](DMat& target, const DMat& other,
                        const std::vector<std::vector<int>>& obs) {
    DMat gram = other.transpose() * other;
    gram.diagonal().array() += lambda;
    for (int row = 0; row < target.rows(); ++row) {
      DMat A = gram;
      DVec b = DVec::Zero(D);
      for (int j : obs[row]) {
        A.noalias() += alpha * other.row(j).transpose() * other.row(j);
        b.noalias() += (1.0 + alpha) * other.row(j).transpose();
      }
      target.row(row) = A.ldlt().solve(b).transpose();
    }
  };

  WrmfResult out;
  Mat Xf, Yf;
  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    sweep_side(X, Y, items_of);
    sweep_side(Y, X, users_of);
    Xf = X.cast<float>();
    Yf = Y.cast<float>();
    out.objective.push_back(wrmf_objective(corpus, train_playlists, Xf, Yf, config));
    if (on_sweep) on_sweep(sweep, Xf, Yf);
  }
  out.playlist_vectors = std::move(Xf);
  out.song_vectors = std::move(Yf);
  return out;
}

double wrmf_objective(const Corpus& corpus, const std::vector<int>& train_playlists,
                      const Mat& playlist_vectors, const Mat& song_vectors,
                      const WrmfConfig& config) {
  const DMat X = playlist_vectors.cast<double>();
  const DMat Y = song_vectors.cast<double>();
  const double alpha = config.confidence_alpha;

  // sum_{u,i} (x_u . y_i)^2 = trace((X^T X)(Y^T Y)); observed cells then swap
  // their c=1, p=0 contribution for the confident one.
  DMat xtx = X.transpose() * X;
  DMat yty = Y.transpose() * Y;
  double obj = xtx.cwiseProduct(yty).sum();
  for (size_t u = 0; u < train_playlists.size(); ++u) {
    const auto& songs = corpus.playlists[train_playlists[u]].songs;
    std::vector<int> uniq(songs);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (int i : uniq) {
      double pred = X.row(static_cast<Eigen::Index>(u)).dot(Y.row(i));
      double err = 1.0 - pred;
      obj += (1.0 + alpha) * err * err - pred * pred;
    }
  }
  obj += config.lambda * (X.squaredNorm() + Y.squaredNorm());
  return obj;
}

EmbeddingStore init_metadata_embeddings(const Mat& song_vectors, const Corpus& corpus) {
  if (song_vectors.rows() != corpus.num_songs())
    throw ShapeError("init_metadata_embeddings: song_vectors rows " +
                     std::to_string(song_vectors.rows()) + " != catalog size " +
                     std::to_string(corpus.num_songs()));
  EmbeddingStore store;
  store.dim = static_cast<int>(song_vectors.cols());
  store.song_vectors = song_vectors;

  // Members accumulate in ascending song id and in double, so the result
  // cannot depend on catalog visit order.
  auto build = [&](int table_size, auto value_of) {
    EmbeddingTable t;
    t.rows = Mat::Zero(table_size, song_vectors.cols());
    t.present.assign(static_cast<size_t>(table_size), 0);
    std::vector<std::vector<int>> members(static_cast<size_t>(table_size));
    for (const auto& s : corpus.songs) members[static_cast<size_t>(value_of(s))].push_back(s.song_id);
    for (int v = 0; v < table_size; ++v) {
      auto& ids = members[static_cast<size_t>(v)];
      if (ids.empty()) continue;
      std::sort(ids.begin(), ids.end());
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(song_vectors.cols());
      for (int sid : ids) acc += song_vectors.row(sid).cast<double>();
      t.rows.row(v) = (acc / static_cast<double>(ids.size())).cast<float>();
      t.present[static_cast<size_t>(v)] = 1;
    }
    return t;
  };

  store.artist = build(corpus.num_artists(), [](const Song& s) { return s.artist_id; });
  store.album = build(corpus.num_albums(), [](const Song& s) { return s.album_id; });
  store.dur_bucket = build(40, [](const Song& s) { return s.dur_bucket - 1; });
  store.pop_bucket = build(100, [](const Song& s) { return s.pop_bucket - 1; });
  return store;
}

}  // namespace rta
