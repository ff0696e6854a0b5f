#include "rta/bench.hpp"

#include "rta/aggregate.hpp"
#include "rta/rank.hpp"
#include "rta/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace rta {

namespace {

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double rank = p * static_cast<double>(xs.size() - 1);
  size_t lo = static_cast<size_t>(rank);
  size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace

BenchReport run_latency_bench(const BenchConfig& cfg) {
  Rng rng(cfg.rng_seed);
  Mat catalog(static_cast<Eigen::Index>(cfg.catalog_size), cfg.dim);
  for (Eigen::Index i = 0; i < catalog.rows(); ++i)
    for (Eigen::Index j = 0; j < catalog.cols(); ++j)
      catalog(i, j) = rng.uniform() * 2.0f - 1.0f;

  AggregatorConfig acfg;
  acfg.kind = aggregator_kind_from_string(cfg.aggregator);
  acfg.dim = cfg.dim;
  acfg.max_len = std::max(cfg.max_seed_len, 16);
  acfg.init_seed = cfg.rng_seed;
  Aggregator agg(acfg);
  ParamSet params;
  agg.register_params(params);

  // One fixed request mix for every thread series.
  struct Req {
    std::vector<int> seed;
  };
  std::vector<Req> requests(static_cast<size_t>(cfg.n_requests));
  for (auto& r : requests) {
    int len = 1 + static_cast<int>(rng.bounded(static_cast<uint32_t>(cfg.max_seed_len)));
    r.seed.resize(static_cast<size_t>(len));
    for (auto& s : r.seed)
      s = static_cast<int>(rng.bounded(static_cast<uint32_t>(cfg.catalog_size)));
  }

  BenchReport report;
  report.config = cfg;
  for (int threads : cfg.thread_counts) {
    // Warm-up pass primes caches and the thread path.
    for (int w = 0; w < 3; ++w) {
      RankRequest req;
      req.seed_song_ids = requests[static_cast<size_t>(w) % requests.size()].seed;
      req.n_reco = cfg.n_reco;
      continue_playlist(req, catalog, agg, nullptr, threads);
    }
    std::vector<double> embed, score, total;
    embed.reserve(requests.size());
    for (const auto& r : requests) {
      RankRequest req;
      req.seed_song_ids = r.seed;
      req.n_reco = cfg.n_reco;
      RankTiming t;
      continue_playlist(req, catalog, agg, &t, threads);
      embed.push_back(t.embed_ms);
      score.push_back(t.score_ms);
      total.push_back(t.embed_ms + t.score_ms);
    }
    BenchSeries s;
    s.threads = threads;
    double esum = 0.0, ssum = 0.0;
    for (size_t i = 0; i < total.size(); ++i) {
      esum += embed[i];
      ssum += score[i];
    }
    s.embed_ms_mean = esum / static_cast<double>(total.size());
    s.score_ms_mean = ssum / static_cast<double>(total.size());
    s.total_ms_p50 = percentile(total, 0.50);
    s.total_ms_p90 = percentile(total, 0.90);
    s.total_ms_p99 = percentile(total, 0.99);
    s.total_ms_max = *std::max_element(total.begin(), total.end());
    report.series.push_back(s);
  }
  return report;
}

void write_bench_json(const BenchReport& report, const std::string& path) {
  nlohmann::json j;
  j["catalog_size"] = report.config.catalog_size;
  j["dim"] = report.config.dim;
  j["n_requests"] = report.config.n_requests;
  j["n_reco"] = report.config.n_reco;
  j["aggregator"] = report.config.aggregator;
  j["series"] = nlohmann::json::array();
  for (const auto& s : report.series) {
    j["series"].push_back({{"threads", s.threads},
                           {"embed_ms_mean", s.embed_ms_mean},
                           {"score_ms_mean", s.score_ms_mean},
                           {"total_ms_p50", s.total_ms_p50},
                           {"total_ms_p90", s.total_ms_p90},
                           {"total_ms_p99", s.total_ms_p99},
                           {"total_ms_max", s.total_ms_max}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write bench report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace rta
