#include "rta/binio.hpp"
#include "rta/corpus.hpp"
#include "rta/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace rta;
namespace fs = std::filesystem;

TEST_CASE("duration buckets follow the 30-second grid") {
  CHECK(bucket_duration(60.0) == 2);
  CHECK(bucket_duration(1250.0) == 40);  // > 20 min clamps into the top bucket
  CHECK(bucket_duration(0.0) == 1);
  CHECK(bucket_duration(29.9) == 1);
  CHECK(bucket_duration(30.0) == 1);
  CHECK(bucket_duration(30.01) == 2);
  CHECK_THROWS_AS(bucket_duration(-1.0), DomainError);
}

TEST_CASE("popularity buckets follow the logarithmic grid") {
  CHECK(bucket_popularity(1, 45000.0) == 1);
  CHECK(bucket_popularity(45000, 45000.0) == 100);
  CHECK(bucket_popularity(0, 45000.0) == 1);
  CHECK(bucket_popularity(44999, 45000.0) == 1 + 100 * 0);
  CHECK_THROWS_AS(bucket_popularity(5, 1.0), DomainError);
  CHECK_THROWS_AS(bucket_popularity(-1, 45000.0), DomainError);
}

TEST_CASE("bucketing is monotone nondecreasing") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    double a = rng.uniform_double() * 1500.0;
    double b = rng.uniform_double() * 1500.0;
    if (a > b) std::swap(a, b);
    CHECK(bucket_duration(a) <= bucket_duration(b));
    int64_t pa = static_cast<int64_t>(rng.bounded(100000));
    int64_t pb = static_cast<int64_t>(rng.bounded(100000));
    if (pa > pb) std::swap(pa, pb);
    CHECK(bucket_popularity(pa, 45000.0) <= bucket_popularity(pb, 45000.0));
  }
  for (int b = 1; b <= 100; ++b) {
    (void)b;
  }
}

namespace {

std::string write_slice(const fs::path& dir, const std::string& name, const std::string& body) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  out << body;
  return (dir / name).string();
}

const char* kSliceA = R"({
 "playlists": [
  {"pid": 10, "tracks": [
    {"track_uri": "t:a", "artist_uri": "ar:1", "album_uri": "al:1", "duration_ms": 60000},
    {"track_uri": "t:b", "artist_uri": "ar:1", "album_uri": "al:1", "duration_ms": 120000}
  ]},
  {"pid": 11, "tracks": [
    {"track_uri": "t:a", "artist_uri": "ar:1", "album_uri": "al:1", "duration_ms": 60000},
    {"track_uri": "t:c", "artist_uri": "ar:2", "album_uri": "al:2", "duration_ms": 30500}
  ]}
 ]})";

const char* kSliceB = R"({
 "playlists": [
  {"pid": 12, "tracks": [
    {"track_uri": "t:a", "artist_uri": "ar:1", "album_uri": "al:1", "duration_ms": 60000},
    {"track_uri": "t:d", "artist_uri": "ar:2", "album_uri": "al:3", "duration_ms": 200000},
    {"track_uri": "t:bad", "album_uri": "al:3", "duration_ms": 1000}
  ]}
 ]})";

}  // namespace

TEST_CASE("mpd ingestion: dedup, popularity, rejected tracks") {
  fs::path dir = fs::temp_directory_path() / "rta_mpd_fixture";
  fs::remove_all(dir);
  write_slice(dir, "mpd.slice.0.json", kSliceA);
  write_slice(dir, "mpd.slice.1.json", kSliceB);

  Corpus c = load_mpd_slices(dir.string());
  CHECK(c.num_playlists() == 3);
  CHECK(c.num_songs() == 4);  // t:a deduplicated across slices

  // ids follow lexicographic uri order: t:a, t:b, t:c, t:d
  CHECK(c.songs[0].track_uri == "t:a");
  CHECK(c.songs[0].popularity == 3);
  CHECK(c.songs[1].popularity == 1);
  CHECK(c.songs[0].dur_bucket == 2);   // 60 s
  CHECK(c.songs[2].dur_bucket == 2);   // 30.5 s
  CHECK(c.ingest_stats.rejected_tracks == 1);

  // shared-song counting example: 2 playlists sharing one song
  int64_t total = 0;
  for (const auto& s : c.songs) total += s.popularity;
  CHECK(total == c.total_interactions(c.train_ids));
}

TEST_CASE("mpd ingestion: empty playlists array") {
  fs::path dir = fs::temp_directory_path() / "rta_mpd_empty";
  fs::remove_all(dir);
  write_slice(dir, "mpd.slice.0.json", R"({"playlists": []})");
  Corpus c = load_mpd_slices(dir.string());
  CHECK(c.num_songs() == 0);
  CHECK(c.num_playlists() == 0);
}

TEST_CASE("mpd ingestion: malformed file names the file") {
  fs::path dir = fs::temp_directory_path() / "rta_mpd_bad";
  fs::remove_all(dir);
  write_slice(dir, "mpd.slice.0.json", "{not json");
  try {
    load_mpd_slices(dir.string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("mpd.slice.0.json") != std::string::npos);
  }
}

TEST_CASE("re-ingesting the same directory is byte-identical") {
  fs::path dir = fs::temp_directory_path() / "rta_mpd_det";
  fs::remove_all(dir);
  write_slice(dir, "mpd.slice.0.json", kSliceA);
  write_slice(dir, "mpd.slice.1.json", kSliceB);
  fs::path out1 = dir / "c1.rtac";
  fs::path out2 = dir / "c2.rtac";
  load_mpd_slices(dir.string()).save(out1.string());
  load_mpd_slices(dir.string()).save(out2.string());
  CHECK(file_fnv1a(out1.string()) == file_fnv1a(out2.string()));
}

TEST_CASE("corpus roundtrips through the binary container") {
  fs::path dir = fs::temp_directory_path() / "rta_corpus_rt";
  fs::remove_all(dir);
  write_slice(dir, "mpd.slice.0.json", kSliceA);
  Corpus c = load_mpd_slices(dir.string());
  c.save((dir / "c.rtac").string());
  Corpus back = Corpus::load((dir / "c.rtac").string());
  CHECK(back.num_songs() == c.num_songs());
  CHECK(back.num_playlists() == c.num_playlists());
  CHECK(back.songs[0].track_uri == c.songs[0].track_uri);
  CHECK(back.playlists[0].songs == c.playlists[0].songs);
  back.save((dir / "c2.rtac").string());
  CHECK(file_fnv1a((dir / "c.rtac").string()) == file_fnv1a((dir / "c2.rtac").string()));
}

namespace {

Corpus tiny_corpus(int n_playlists, int len) {
  Corpus c;
  c.songs.resize(200);
  for (int i = 0; i < 200; ++i) {
    c.songs[i].song_id = i;
    c.songs[i].artist_id = i % 20;
    c.songs[i].album_id = i % 40;
    c.songs[i].duration_s = 100;
    c.songs[i].dur_bucket = bucket_duration(100);
  }
  Rng rng(5);
  for (int p = 0; p < n_playlists; ++p) {
    Playlist pl;
    pl.playlist_id = p;
    for (int i = 0; i < len; ++i) pl.songs.push_back(static_cast<int>(rng.bounded(200)));
    c.playlists.push_back(pl);
  }
  std::vector<int> all(c.playlists.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  c.recompute_popularity(all);
  c.train_ids = all;
  return c;
}

}  // namespace

TEST_CASE("split: arithmetic, determinism, disjointness") {
  Corpus c = tiny_corpus(100, 25);
  SplitSpec spec;
  spec.rng_seed = 9;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.min_len = 20;
  SplitResult a = split_dataset(c, spec);
  SplitResult b = split_dataset(c, spec);
  CHECK(a.train_ids.size() == 80);
  CHECK(a.val_ids == b.val_ids);
  CHECK(a.test_ids == b.test_ids);

  std::set<int> seen;
  for (int id : a.train_ids) CHECK(seen.insert(id).second);
  for (int id : a.val_ids) CHECK(seen.insert(id).second);
  for (int id : a.test_ids) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 100);
}

TEST_CASE("split: insufficient eligible playlists") {
  Corpus c = tiny_corpus(30, 5);
  SplitSpec spec;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.min_len = 20;
  try {
    split_dataset(c, spec);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("20") != std::string::npos);  // states the counts
  }
}

TEST_CASE("popularity is recounted over the train split only") {
  Corpus c = tiny_corpus(100, 25);
  SplitSpec spec;
  spec.n_val = 10;
  spec.n_test = 10;
  spec.min_len = 20;
  SplitResult s = split_dataset(c, spec);
  c.train_ids = s.train_ids;
  c.val_ids = s.val_ids;
  c.test_ids = s.test_ids;
  c.recompute_popularity(c.train_ids);
  int64_t total = 0;
  for (const auto& song : c.songs) total += song.popularity;
  CHECK(total == c.total_interactions(c.train_ids));
  for (const auto& song : c.songs) {
    CHECK(song.dur_bucket >= 1);
    CHECK(song.dur_bucket <= 40);
    CHECK(song.pop_bucket >= 1);
    CHECK(song.pop_bucket <= 100);
  }
}

TEST_CASE("mask_playlist: definition, minimum, precondition") {
  Corpus c = tiny_corpus(1, 4);
  Playlist p;
  p.playlist_id = 0;
  p.songs = {5, 7, 9, 11};

  MaskedPlaylist m1 = mask_playlist(p, 1, c);
  CHECK(m1.seed == std::vector<int>{5});
  CHECK(m1.ground_truth == std::vector<int>{7, 9, 11});
  CHECK(m1.ground_truth_artists.size() == 3);

  Playlist p2;
  p2.songs = {1, 2};
  MaskedPlaylist m2 = mask_playlist(p2, 1, c);
  CHECK(m2.seed == std::vector<int>{1});
  CHECK(m2.ground_truth == std::vector<int>{2});

  CHECK_THROWS_AS(mask_playlist(p, 4, c), DomainError);
  CHECK_THROWS_AS(mask_playlist(p, 0, c), DomainError);
}
