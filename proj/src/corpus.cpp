#include "rta/corpus.hpp"

#include "rta/binio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_map>

namespace rta {

namespace fs = std::filesystem;
using nlohmann::json;

int bucket_duration(double duration_s) {
  if (duration_s < 0.0) throw DomainError("bucket_duration: negative duration");
  int b = static_cast<int>(std::ceil(duration_s / 30.0));
  return std::max(1, std::min(40, b));
}

int bucket_popularity(int64_t popularity, double alpha) {
  if (popularity < 0) throw DomainError("bucket_popularity: negative popularity");
  if (alpha <= 1.0) throw DomainError("bucket_popularity: alpha must be > 1");
  if (popularity == 0) return 1;
  int b = 1 + 100 * static_cast<int>(std::floor(
                        std::log(static_cast<double>(popularity)) / std::log(alpha)));
  return std::min(100, b);
}

int Corpus::num_artists() const {
  int m = 0;
  for (const auto& s : songs) m = std::max(m, s.artist_id + 1);
  return m;
}

int Corpus::num_albums() const {
  int m = 0;
  for (const auto& s : songs) m = std::max(m, s.album_id + 1);
  return m;
}

void Corpus::recompute_popularity(const std::vector<int>& playlist_ids) {
  for (auto& s : songs) s.popularity = 0;
  for (int pid : playlist_ids)
    for (int sid : playlists[pid].songs) songs[sid].popularity++;
  double alpha = alpha_pop;
  if (alpha <= 0.0) {
    int64_t mx = 0;
    for (const auto& s : songs) mx = std::max(mx, s.popularity);
    alpha = std::max<double>(2.0, static_cast<double>(mx));
    alpha_pop = alpha;
  }
  for (auto& s : songs) s.pop_bucket = bucket_popularity(s.popularity, alpha);
}

int64_t Corpus::total_interactions(const std::vector<int>& playlist_ids) const {
  int64_t n = 0;
  for (int pid : playlist_ids) n += static_cast<int64_t>(playlists[pid].songs.size());
  return n;
}

Corpus load_mpd_slices(const std::string& directory_path, int max_playlist_len) {
  std::vector<std::string> files;
  {
    std::error_code ec;
    fs::directory_iterator it(directory_path, ec);
    if (ec) throw IoError("cannot open directory: " + directory_path + ": " + ec.message());
    for (const auto& e : fs::directory_iterator(directory_path))
      if (e.is_regular_file() && e.path().extension() == ".json")
        files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .json slice files in " + directory_path);

  struct TrackMeta {
    std::string artist_uri, album_uri;
    int64_t duration_ms = 0;
  };
  std::unordered_map<std::string, TrackMeta> meta;  // by track uri
  struct RawPlaylist {
    int64_t pid;
    std::vector<std::string> track_uris;
  };
  std::vector<RawPlaylist> raw;
  IngestStats stats;

  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open slice file: " + file);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw IoError("malformed JSON in " + file + ": " + e.what());
    }
    if (!doc.contains("playlists") || !doc["playlists"].is_array())
      throw IoError("missing top-level \"playlists\" array in " + file);
    stats.files_read++;

    for (const auto& pl : doc["playlists"]) {
      RawPlaylist rp;
      rp.pid = pl.value("pid", static_cast<int64_t>(raw.size()));
      if (!pl.contains("tracks") || !pl["tracks"].is_array())
        throw IoError("playlist without \"tracks\" array in " + file);
      for (const auto& tr : pl["tracks"]) {
        std::string track = tr.value("track_uri", "");
        std::string artist = tr.value("artist_uri", "");
        std::string album = tr.value("album_uri", "");
        if (track.empty() || artist.empty() || album.empty()) {
          stats.rejected_tracks++;
          continue;
        }
        int64_t dur_ms = 0;
        if (tr.contains("duration_ms") && tr["duration_ms"].is_number())
          dur_ms = tr["duration_ms"].get<int64_t>();
        auto [it, inserted] = meta.emplace(track, TrackMeta{artist, album, dur_ms});
        if (!inserted && (it->second.artist_uri != artist || it->second.album_uri != album ||
                          it->second.duration_ms != dur_ms))
          stats.metadata_conflicts++;  // first-seen metadata wins
        rp.track_uris.push_back(std::move(track));
      }
      if (rp.track_uris.empty()) {
        stats.dropped_playlists++;
        continue;
      }
      if (static_cast<int>(rp.track_uris.size()) > max_playlist_len) {
        rp.track_uris.resize(max_playlist_len);
        stats.truncated_playlists++;
      }
      raw.push_back(std::move(rp));
    }
  }

  // Dense ids from sorted URIs, so ingestion order cannot change them.
  std::vector<std::string> track_uris;
  track_uris.reserve(meta.size());
  for (const auto& [uri, m] : meta) track_uris.push_back(uri);
  std::sort(track_uris.begin(), track_uris.end());
  std::unordered_map<std::string, int> track_id;
  track_id.reserve(track_uris.size());
  for (size_t i = 0; i < track_uris.size(); ++i) track_id.emplace(track_uris[i], static_cast<int>(i));

  auto dense_ids = [](std::vector<std::string> uris) {
    std::sort(uris.begin(), uris.end());
    uris.erase(std::unique(uris.begin(), uris.end()), uris.end());
    std::unordered_map<std::string, int> m;
    m.reserve(uris.size());
    for (size_t i = 0; i < uris.size(); ++i) m.emplace(uris[i], static_cast<int>(i));
    return m;
  };
  std::vector<std::string> artist_uris, album_uris;
  artist_uris.reserve(meta.size());
  album_uris.reserve(meta.size());
  for (const auto& uri : track_uris) {
    artist_uris.push_back(meta[uri].artist_uri);
    album_uris.push_back(meta[uri].album_uri);
  }
  auto artist_id = dense_ids(artist_uris);
  auto album_id = dense_ids(album_uris);

  Corpus corpus;
  corpus.max_playlist_len = max_playlist_len;
  corpus.ingest_stats = stats;
  corpus.songs.resize(track_uris.size());
  for (size_t i = 0; i < track_uris.size(); ++i) {
    const TrackMeta& m = meta[track_uris[i]];
    Song& s = corpus.songs[i];
    s.song_id = static_cast<int>(i);
    s.artist_id = artist_id.at(m.artist_uri);
    s.album_id = album_id.at(m.album_uri);
    s.duration_s = static_cast<double>(m.duration_ms) / 1000.0;
    s.dur_bucket = bucket_duration(s.duration_s);
    s.track_uri = track_uris[i];
  }

  std::sort(raw.begin(), raw.end(),
            [](const RawPlaylist& a, const RawPlaylist& b) { return a.pid < b.pid; });
  corpus.playlists.reserve(raw.size());
  for (const auto& rp : raw) {
    Playlist p;
    p.playlist_id = rp.pid;
    p.songs.reserve(rp.track_uris.size());
    for (const auto& uri : rp.track_uris) p.songs.push_back(track_id.at(uri));
    corpus.playlists.push_back(std::move(p));
  }

  // Everything counts as train until a split says otherwise.
  std::vector<int> all_ids(corpus.playlists.size());
  for (size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = static_cast<int>(i);
  corpus.recompute_popularity(all_ids);
  corpus.train_ids = std::move(all_ids);
  return corpus;
}

SplitResult split_dataset(const Corpus& corpus, const SplitSpec& spec) {
  std::vector<int> eligible;
  for (int i = 0; i < corpus.num_playlists(); ++i)
    if (static_cast<int>(corpus.playlists[i].songs.size()) >= spec.min_len)
      eligible.push_back(i);
  const int needed = spec.n_val + spec.n_test;
  if (static_cast<int>(eligible.size()) < needed)
    throw ConfigError("split_dataset: need " + std::to_string(needed) +
                      " playlists of length >= " + std::to_string(spec.min_len) + ", found " +
                      std::to_string(eligible.size()));

  Rng rng(spec.rng_seed);
  rng.shuffle(eligible);
  SplitResult out;
  out.val_ids.assign(eligible.begin(), eligible.begin() + spec.n_val);
  out.test_ids.assign(eligible.begin() + spec.n_val, eligible.begin() + needed);
  std::sort(out.val_ids.begin(), out.val_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());

  std::unordered_set<int> held(eligible.begin(), eligible.begin() + needed);
  out.train_ids.reserve(corpus.num_playlists() - needed);
  for (int i = 0; i < corpus.num_playlists(); ++i)
    if (!held.count(i)) out.train_ids.push_back(i);
  return out;
}

MaskedPlaylist mask_playlist(const Playlist& p, int n_seed, const Corpus& corpus) {
  const int l = static_cast<int>(p.songs.size());
  if (n_seed < 1 || n_seed >= l)
    throw DomainError("mask_playlist: n_seed " + std::to_string(n_seed) +
                      " must be in [1, " + std::to_string(l - 1) + "]");
  MaskedPlaylist m;
  m.seed.assign(p.songs.begin(), p.songs.begin() + n_seed);
  std::vector<int> tail(p.songs.begin() + n_seed, p.songs.end());
  std::sort(tail.begin(), tail.end());
  tail.erase(std::unique(tail.begin(), tail.end()), tail.end());
  m.ground_truth = std::move(tail);
  m.ground_truth_artists.reserve(m.ground_truth.size());
  for (int sid : m.ground_truth) m.ground_truth_artists.push_back(corpus.songs[sid].artist_id);
  return m;
}

// --- serialization ("RTAC") -------------------------------------------------

namespace {
constexpr char kCorpusMagic[4] = {'R', 'T', 'A', 'C'};
constexpr uint32_t kCorpusVersion = 1;
}  // namespace

void Corpus::save(const std::string& path) const {
  BinWriter w(path + ".tmp");
  w.magic(kCorpusMagic);
  w.u32(kCorpusVersion);
  w.u64(songs.size());
  w.u64(playlists.size());
  w.u32(static_cast<uint32_t>(max_playlist_len));
  w.f64(alpha_pop);
  w.u64(split_seed);

  for (const auto& s : songs) {
    w.u32(static_cast<uint32_t>(s.artist_id));
    w.u32(static_cast<uint32_t>(s.album_id));
    w.f64(s.duration_s);
    w.i64(s.popularity);
    w.u8(static_cast<uint8_t>(s.dur_bucket));
    w.u8(static_cast<uint8_t>(s.pop_bucket));
    w.str(s.track_uri);
  }
  for (const auto& p : playlists) {
    w.i64(p.playlist_id);
    w.vec_pod(p.songs);
  }
  w.vec_pod(train_ids);
  w.vec_pod(val_ids);
  w.vec_pod(test_ids);

  w.i64(ingest_stats.files_read);
  w.i64(ingest_stats.rejected_tracks);
  w.i64(ingest_stats.dropped_playlists);
  w.i64(ingest_stats.truncated_playlists);
  w.i64(ingest_stats.metadata_conflicts);
  w.close();
  commit_tmp_file(path);
}

Corpus Corpus::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kCorpusMagic, "corpus");
  uint32_t version = r.u32();
  if (version != kCorpusVersion)
    throw IoError("unsupported corpus version " + std::to_string(version) + " in " + path);
  Corpus c;
  uint64_t n_songs = r.u64();
  uint64_t n_playlists = r.u64();
  c.max_playlist_len = static_cast<int>(r.u32());
  c.alpha_pop = r.f64();
  c.split_seed = r.u64();

  c.songs.resize(n_songs);
  for (uint64_t i = 0; i < n_songs; ++i) {
    Song& s = c.songs[i];
    s.song_id = static_cast<int>(i);
    s.artist_id = static_cast<int>(r.u32());
    s.album_id = static_cast<int>(r.u32());
    s.duration_s = r.f64();
    s.popularity = r.i64();
    s.dur_bucket = r.u8();
    s.pop_bucket = r.u8();
    s.track_uri = r.str();
  }
  c.playlists.resize(n_playlists);
  for (uint64_t i = 0; i < n_playlists; ++i) {
    c.playlists[i].playlist_id = r.i64();
    c.playlists[i].songs = r.vec_pod<int>();
  }
  c.train_ids = r.vec_pod<int>();
  c.val_ids = r.vec_pod<int>();
  c.test_ids = r.vec_pod<int>();

  c.ingest_stats.files_read = r.i64();
  c.ingest_stats.rejected_tracks = r.i64();
  c.ingest_stats.dropped_playlists = r.i64();
  c.ingest_stats.truncated_playlists = r.i64();
  c.ingest_stats.metadata_conflicts = r.i64();
  return c;
}

void Corpus::write_manifest(const std::string& path) const {
  json m;
  m["num_songs"] = songs.size();
  m["num_playlists"] = playlists.size();
  m["max_playlist_len"] = max_playlist_len;
  m["alpha_pop"] = alpha_pop;
  m["split"] = {{"rng_seed", split_seed},
                {"n_train", train_ids.size()},
                {"n_val", val_ids.size()},
                {"n_test", test_ids.size()}};
  m["ingest"] = {{"files_read", ingest_stats.files_read},
                 {"rejected_tracks", ingest_stats.rejected_tracks},
                 {"dropped_playlists", ingest_stats.dropped_playlists},
                 {"truncated_playlists", ingest_stats.truncated_playlists},
                 {"metadata_conflicts", ingest_stats.metadata_conflicts}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << m.dump(2) << "\n";
}

}  // namespace rta
