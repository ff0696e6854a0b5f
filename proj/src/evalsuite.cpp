#include "rta/evalsuite.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace rta {

using nlohmann::json;

namespace {

MetricStats stats_of(const std::vector<double>& xs) {
  MetricStats s;
  if (xs.empty()) return s;
  double acc = 0.0;
  for (double x : xs) acc += x;
  s.mean = acc / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    double stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) /
                     std::sqrt(static_cast<double>(xs.size()));
    s.ci = 1.96 * stderr_;
  }
  return s;
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double rank = p * static_cast<double>(xs.size() - 1);
  size_t lo = static_cast<size_t>(rank);
  size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

struct PlaylistOutcome {
  double precision, recall, r_precision, ndcg, clicks, popularity;
  double embed_ms, score_ms;
};

MetricStats scaled(MetricStats s, double f) { return MetricStats{s.mean * f, s.ci * f}; }

BucketReport summarize(int n_seed, const std::vector<PlaylistOutcome>& outcomes,
                       const std::vector<std::vector<int>>& lists, const Corpus& corpus) {
  BucketReport b;
  b.n_seed = n_seed;
  b.n_playlists = static_cast<int>(outcomes.size());
  auto col = [&](auto getter) {
    std::vector<double> xs;
    xs.reserve(outcomes.size());
    for (const auto& o : outcomes) xs.push_back(getter(o));
    return xs;
  };
  b.precision = scaled(stats_of(col([](const auto& o) { return o.precision; })), 100.0);
  b.recall = scaled(stats_of(col([](const auto& o) { return o.recall; })), 100.0);
  b.r_precision = scaled(stats_of(col([](const auto& o) { return o.r_precision; })), 100.0);
  b.ndcg = scaled(stats_of(col([](const auto& o) { return o.ndcg; })), 100.0);
  b.clicks = stats_of(col([](const auto& o) { return o.clicks; }));
  b.popularity = stats_of(col([](const auto& o) { return o.popularity; }));
  if (!lists.empty()) b.coverage_pct = metric_coverage_popularity(lists, corpus).first;
  b.embed_ms_mean = stats_of(col([](const auto& o) { return o.embed_ms; })).mean;
  b.score_ms_mean = stats_of(col([](const auto& o) { return o.score_ms; })).mean;
  auto totals = col([](const auto& o) { return o.embed_ms + o.score_ms; });
  b.total_ms_p50 = percentile(totals, 0.50);
  b.total_ms_p99 = percentile(totals, 0.99);
  return b;
}

}  // namespace

EvalReport evaluate_model(Recommender& recommender, const Corpus& corpus, const EvalConfig& cfg) {
  if (corpus.test_ids.empty()) throw ConfigError("evaluate_model: corpus has no test split");
  if (cfg.playlists_per_bucket < 1) throw ConfigError("evaluate_model: empty buckets requested");

  std::vector<int> pool = corpus.test_ids;
  Rng rng(derive_seed(cfg.rng_seed, 0xe7a1));
  rng.shuffle(pool);

  // Claim playlists bucket by bucket; each playlist serves exactly one bucket.
  std::vector<char> claimed(pool.size(), 0);
  struct Bucket {
    int n_seed;
    std::vector<int> playlist_ids;
  };
  std::vector<Bucket> buckets;
  for (int n_seed : cfg.n_seed_values) {
    Bucket b;
    b.n_seed = n_seed;
    for (size_t i = 0; i < pool.size() && static_cast<int>(b.playlist_ids.size()) <
                                              cfg.playlists_per_bucket;
         ++i) {
      if (claimed[i]) continue;
      if (static_cast<int>(corpus.playlists[pool[i]].songs.size()) <= n_seed) continue;
      claimed[i] = 1;
      b.playlist_ids.push_back(pool[i]);
    }
    buckets.push_back(std::move(b));
  }

  EvalReport report;
  report.model = recommender.name();
  report.rng_seed = cfg.rng_seed;
  report.n_reco = cfg.n_reco;

  std::vector<PlaylistOutcome> all_outcomes;
  std::vector<std::vector<int>> all_lists;
  auto artist_of = [&corpus](int sid) { return corpus.songs[sid].artist_id; };

  // Min-max popularity normalization over the (train-counted) catalog.
  int64_t pop_min = 0, pop_max = 0;
  for (size_t i = 0; i < corpus.songs.size(); ++i) {
    const int64_t p = corpus.songs[i].popularity;
    if (i == 0) pop_min = pop_max = p;
    pop_min = std::min(pop_min, p);
    pop_max = std::max(pop_max, p);
  }
  const double pop_denom = static_cast<double>(pop_max - pop_min);
  auto slot_popularity = [&](const std::vector<int>& list) {
    if (list.empty() || pop_denom <= 0.0) return 0.0;
    double acc = 0.0;
    for (int id : list)
      acc += static_cast<double>(corpus.songs[id].popularity - pop_min) / pop_denom;
    return 100.0 * acc / static_cast<double>(list.size());
  };

  for (const auto& bucket : buckets) {
    if (bucket.playlist_ids.empty()) continue;  // reported as absent, not zero
    std::vector<PlaylistOutcome> outcomes;
    std::vector<std::vector<int>> lists;
    outcomes.reserve(bucket.playlist_ids.size());

    for (int pid : bucket.playlist_ids) {
      MaskedPlaylist m = mask_playlist(corpus.playlists[pid], bucket.n_seed, corpus);
      if (m.ground_truth.empty()) continue;
      RankTiming timing;
      RankedList ranked = recommender.recommend(m.seed, cfg.n_reco, &timing);

      PlaylistOutcome o{};
      auto [prec, rec] = metric_precision_recall(ranked.song_ids, m.ground_truth, cfg.n_reco);
      o.precision = prec;
      o.recall = rec;
      o.r_precision =
          metric_r_precision(ranked.song_ids, m.ground_truth, m.ground_truth_artists, artist_of);
      o.ndcg = metric_ndcg(ranked.song_ids, m.ground_truth, cfg.ndcg_variant);
      o.clicks = metric_clicks(ranked.song_ids, m.ground_truth, cfg.n_reco);
      o.popularity = slot_popularity(ranked.song_ids);
      o.embed_ms = timing.embed_ms;
      o.score_ms = timing.score_ms;
      outcomes.push_back(o);
      lists.push_back(ranked.song_ids);
    }
    report.buckets.push_back(summarize(bucket.n_seed, outcomes, lists, corpus));
    all_outcomes.insert(all_outcomes.end(), outcomes.begin(), outcomes.end());
    all_lists.insert(all_lists.end(), lists.begin(), lists.end());
  }
  report.aggregate = summarize(0, all_outcomes, all_lists, corpus);
  return report;
}

// --- report io ---------------------------------------------------------------

namespace {

json stats_json(const MetricStats& s) { return json{{"mean", s.mean}, {"ci95", s.ci}}; }

json bucket_metrics_json(const BucketReport& b) {
  return json{{"n_playlists", b.n_playlists},
              {"precision_pct", stats_json(b.precision)},
              {"recall_pct", stats_json(b.recall)},
              {"r_precision_pct", stats_json(b.r_precision)},
              {"ndcg_pct", stats_json(b.ndcg)},
              {"clicks", stats_json(b.clicks)},
              {"popularity_pct", stats_json(b.popularity)},
              {"coverage_pct", b.coverage_pct}};
}

json bucket_timing_json(const BucketReport& b) {
  return json{{"embed_ms_mean", b.embed_ms_mean},
              {"score_ms_mean", b.score_ms_mean},
              {"total_ms_p50", b.total_ms_p50},
              {"total_ms_p99", b.total_ms_p99}};
}

}  // namespace

void EvalReport::write_json(const std::string& path) const {
  json j;
  j["model"] = model;
  j["rng_seed"] = rng_seed;
  j["n_reco"] = n_reco;
  j["aggregate"] = bucket_metrics_json(aggregate);
  j["buckets"] = json::array();
  for (const auto& b : buckets) {
    json bj = bucket_metrics_json(b);
    bj["n_seed"] = b.n_seed;
    j["buckets"].push_back(bj);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  out << j.dump(2) << "\n";
}

namespace {

void csv_header(std::ofstream& out) {
  out << "model,n_seed,n_playlists,precision_pct,precision_ci,recall_pct,recall_ci,"
         "r_precision_pct,r_precision_ci,ndcg_pct,ndcg_ci,clicks,clicks_ci,"
         "popularity_pct,popularity_ci,coverage_pct,embed_ms_mean,score_ms_mean,"
         "total_ms_p50,total_ms_p99\n";
}

void csv_row(std::ofstream& out, const std::string& model, const std::string& n_seed,
             const BucketReport& b) {
  out << model << ',' << n_seed << ',' << b.n_playlists << ',' << b.precision.mean << ','
      << b.precision.ci << ',' << b.recall.mean << ',' << b.recall.ci << ','
      << b.r_precision.mean << ',' << b.r_precision.ci << ',' << b.ndcg.mean << ','
      << b.ndcg.ci << ',' << b.clicks.mean << ',' << b.clicks.ci << ',' << b.popularity.mean
      << ',' << b.popularity.ci << ',' << b.coverage_pct << ',' << b.embed_ms_mean << ','
      << b.score_ms_mean << ',' << b.total_ms_p50 << ',' << b.total_ms_p99 << "\n";
}

}  // namespace

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  csv_header(out);
  for (const auto& b : buckets) csv_row(out, model, std::to_string(b.n_seed), b);
  csv_row(out, model, "all", aggregate);
}

void EvalReport::write_series_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write series: " + path);
  csv_header(out);
  for (const auto& b : buckets) csv_row(out, model, std::to_string(b.n_seed), b);
}

void EvalReport::write_timing_json(const std::string& path) const {
  json j;
  j["model"] = model;
  j["aggregate"] = bucket_timing_json(aggregate);
  j["buckets"] = json::array();
  for (const auto& b : buckets) {
    json bj = bucket_timing_json(b);
    bj["n_seed"] = b.n_seed;
    j["buckets"].push_back(bj);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write timing report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace rta
