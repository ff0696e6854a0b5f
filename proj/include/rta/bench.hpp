#pragma once

#include "rta/common.hpp"

#include <string>
#include <vector>

namespace rta {

struct BenchConfig {
  int64_t catalog_size = 2'000'000;
  int dim = 128;
  int n_requests = 1000;
  std::vector<int> thread_counts = {1, 8};
  int n_reco = 100;
  int max_seed_len = 10;
  uint64_t rng_seed = 7;
  std::string aggregator = "transformer";
};

struct BenchSeries {
  int threads = 1;
  double embed_ms_mean = 0.0;
  double score_ms_mean = 0.0;
  double total_ms_p50 = 0.0, total_ms_p90 = 0.0, total_ms_p99 = 0.0, total_ms_max = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchSeries> series;
};

// Synthetic-catalog latency benchmark of the online continuation path
// (playlist embedding + exhaustive scoring + exact top-k), one series per
// requested thread count.
BenchReport run_latency_bench(const BenchConfig& cfg);

void write_bench_json(const BenchReport& report, const std::string& path);

}  // namespace rta
