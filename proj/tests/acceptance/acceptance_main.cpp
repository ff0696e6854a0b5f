// Acceptance suite: one line per criterion, PASS/FAIL/SKIP, nonzero exit on
// any failure. Criteria marked SKIP state the reason inline.

#include "rta/bench.hpp"
#include "rta/binio.hpp"
#include "rta/evalsuite.hpp"
#include "rta/gradcheck.hpp"
#include "rta/knn.hpp"
#include "rta/nn.hpp"
#include "rta/rank.hpp"
#include "rta/recommenders.hpp"
#include "rta/represent.hpp"
#include "rta/train.hpp"

#include "../support/oracles.hpp"
#include "../support/synthetic.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

using namespace rta;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
  std::printf("%s  criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void report_skip(int criterion, const std::string& what, const std::string& why) {
  std::printf("SKIP  criterion %2d: %s -- %s\n", criterion, what.c_str(), why.c_str());
  std::fflush(stdout);
}

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, float scale = 0.7f) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.gaussian() * scale;
  return m;
}

struct ModelFixture {
  Corpus corpus;
  EmbeddingStore store;
  std::unique_ptr<RtaModel> model;
};

ModelFixture small_fixture(RepresenterKind rk, AggregatorKind ak, int dim, uint64_t seed) {
  testsupport::SyntheticSpec spec;
  spec.n_songs = 40;
  spec.n_clusters = 4;
  spec.n_playlists = 16;
  spec.min_len = 4;
  spec.max_len = 8;
  spec.min_segment = 2;
  spec.max_segment = 4;
  spec.seed = seed;
  ModelFixture f;
  f.corpus = testsupport::make_synthetic_corpus(spec);
  Rng rng(seed + 1);
  f.store = init_metadata_embeddings(random_mat(f.corpus.num_songs(), dim, rng, 0.4f), f.corpus);
  ModelConfig mc;
  mc.representer.kind = rk;
  mc.representer.dim = dim;
  mc.representer.heads = 2;
  mc.aggregator.kind = ak;
  mc.aggregator.dim = dim;
  mc.aggregator.max_len = f.corpus.max_playlist_len;
  mc.aggregator.heads = 2;
  mc.aggregator.layers = 1;
  mc.aggregator.cnn_layers = 1;
  f.model = std::make_unique<RtaModel>(mc, f.corpus, f.store);
  return f;
}

// --- criterion 1: gradient correctness -------------------------------------

void criterion_gradients() {
  const int d = 8;
  double worst = 0.0;
  std::string where;

  {  // phi_NN
    ModelFixture f = small_fixture(RepresenterKind::attention, AggregatorKind::avg, d, 11);
    Rng rng(12);
    Mat probe = random_mat(3, d, rng, 1.0f);
    auto build = [&](ad::Tape& t) {
      ad::Var h = f.model->representer().build(t, {0, 5, 9}, f.corpus);
      return ad::sum_all(ad::cmul(h, t.constant(probe)));
    };
    double e = grad_check(f.model->params(), build);
    if (e > worst) {
      worst = e;
      where = "phi_nn";
    }
  }
  for (AggregatorKind ak : {AggregatorKind::cnn, AggregatorKind::gru,
                            AggregatorKind::transformer}) {
    AggregatorConfig cfg;
    cfg.kind = ak;
    cfg.dim = d;
    cfg.max_len = 16;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.cnn_layers = 2;
    cfg.init_seed = 13;
    Aggregator agg(cfg);
    ParamSet ps;
    agg.register_params(ps);
    Rng rng(14);
    const int l = 5;
    Mat seq = random_mat(l, d, rng);
    Mat probe = random_mat(l, d, rng, 1.0f);
    auto build = [&](ad::Tape& t) {
      ad::Var states = agg.build_prefix_states(t, t.constant(seq));
      return ad::sum_all(ad::cmul(states, t.constant(probe)));
    };
    double e = grad_check(ps, build);
    if (e > worst) {
      worst = e;
      where = "g_" + to_string(ak);
    }
  }
  std::ostringstream det;
  det << "max relative error " << worst << " (worst: " << where << ")";
  report(1, worst < 1e-2, "gradient correctness for phi_NN, g_CNN, g_GRU, g_Transformer",
         det.str());
}

// --- criterion 2: prefix equivalence + causal mask leak ---------------------

void criterion_prefix_equivalence() {
  const int d = 8;
  float worst = 0.0f;
  bool leak_ok = true;
  Rng rng(21);
  for (AggregatorKind ak : {AggregatorKind::avg, AggregatorKind::cnn, AggregatorKind::gru,
                            AggregatorKind::transformer}) {
    AggregatorConfig cfg;
    cfg.kind = ak;
    cfg.dim = d;
    cfg.max_len = 16;
    cfg.heads = 2;
    cfg.init_seed = 22 + static_cast<uint64_t>(ak);
    Aggregator agg(cfg);
    ParamSet ps;
    agg.register_params(ps);
    for (int trial = 0; trial < 100; ++trial) {
      const int l = 1 + static_cast<int>(rng.bounded(12));
      Mat seq = random_mat(l, d, rng);
      ad::Tape t;
      Mat states = t.value(agg.build_prefix_states(t, t.constant(seq)));
      for (int i = 0; i < l; ++i) {
        Vec direct = agg.forward(seq.topRows(i + 1));
        float diff = (states.row(i).transpose() - direct).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
      }
      if (ak == AggregatorKind::transformer && l >= 3) {
        Mat perturbed = seq;
        perturbed.row(l - 1) = random_mat(1, d, rng, 2.0f);
        ad::Tape t2;
        Mat states2 = t2.value(agg.build_prefix_states(t2, t2.constant(perturbed)));
        float leak = (states.topRows(l - 1) - states2.topRows(l - 1)).cwiseAbs().maxCoeff();
        if (leak != 0.0f) leak_ok = false;
      }
    }
  }
  std::ostringstream det;
  det << "max |prefix - g(prefix)| = " << worst << ", causal leak "
      << (leak_ok ? "none" : "DETECTED");
  report(2, worst < 1e-5f && leak_ok, "prefix-equivalence across aggregators", det.str());
}

// --- criterion 3: loss oracle ------------------------------------------------

double scalar_loss_oracle(RtaModel& model, const Corpus& corpus, const std::vector<int>& songs,
                          const std::vector<int>& negatives) {
  const int l = static_cast<int>(songs.size());
  Mat h_songs = model.representer().forward_batch(songs, corpus);
  Mat h_neg = model.representer().forward_batch(negatives, corpus);
  double loss = 0.0;
  for (int i = 1; i < l; ++i) {
    Vec h_p = model.aggregator().forward(h_songs.topRows(i));
    double pos = h_p.cast<double>().dot(h_songs.row(i).cast<double>().transpose());
    loss += -std::log(1.0 / (1.0 + std::exp(-pos)));
    for (Eigen::Index n = 0; n < h_neg.rows(); ++n) {
      double neg = h_p.cast<double>().dot(h_neg.row(n).cast<double>().transpose());
      loss += -std::log(1.0 - 1.0 / (1.0 + std::exp(-neg)));
    }
  }
  return loss;
}

void criterion_loss_oracle() {
  double worst = 0.0;
  int id = 0;
  for (AggregatorKind ak : {AggregatorKind::avg, AggregatorKind::cnn, AggregatorKind::gru,
                            AggregatorKind::transformer}) {
    for (int trial = 0; trial < 5; ++trial) {
      ModelFixture f = small_fixture(RepresenterKind::direct, ak, 8,
                                     31 + static_cast<uint64_t>(id++));
      Rng rng(32 + static_cast<uint64_t>(trial));
      std::unordered_set<int> used;
      std::vector<int> songs;
      const int l = 3 + static_cast<int>(rng.bounded(3));
      while (static_cast<int>(songs.size()) < l) {
        int s = static_cast<int>(rng.bounded(static_cast<uint32_t>(f.corpus.num_songs())));
        if (used.insert(s).second) songs.push_back(s);
      }
      std::vector<int> negs = sample_negatives(f.corpus.num_songs(), used, 3, rng);
      double lib = playlist_loss(*f.model, songs, negs, f.corpus);
      double orc = scalar_loss_oracle(*f.model, f.corpus, songs, negs);
      worst = std::max(worst, std::abs(lib - orc) / std::max(1.0, std::abs(orc)));
    }
  }

  // all-zero-score case: (l-1)(1+|S-|) log 2 exactly
  ModelFixture f = small_fixture(RepresenterKind::direct, AggregatorKind::avg, 8, 39);
  f.model->params().at("song_emb").value.setZero();
  double zero_loss = playlist_loss(*f.model, {0, 1, 2, 3}, {20, 21, 22}, f.corpus);
  double expect = 3.0 * 4.0 * std::log(2.0);
  bool zero_ok = std::abs(zero_loss - expect) < 1e-6 * expect;

  std::ostringstream det;
  det << "max relative deviation " << worst << ", all-zero case " << zero_loss << " vs "
      << expect;
  report(3, worst < 1e-6 && zero_ok, "loss matches scalar re-evaluation on 20 instances",
         det.str());
}

// --- criterion 4: metric oracles ---------------------------------------------

void criterion_metric_oracles() {
  Rng rng(41);
  Corpus corpus;
  corpus.songs.resize(200);
  for (int i = 0; i < 200; ++i) {
    corpus.songs[static_cast<size_t>(i)].song_id = i;
    corpus.songs[static_cast<size_t>(i)].artist_id = i % 23;
    corpus.songs[static_cast<size_t>(i)].popularity = (i * 13) % 77;
  }
  auto artist_fn = [&corpus](int sid) { return corpus.songs[static_cast<size_t>(sid)].artist_id; };

  bool all_exact = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int n_reco = 10 + static_cast<int>(rng.bounded(40));
    std::set<int> rset;
    while (static_cast<int>(rset.size()) < n_reco)
      rset.insert(static_cast<int>(rng.bounded(200)));
    std::vector<int> ranked(rset.begin(), rset.end());
    rng.shuffle(ranked);
    std::set<int> tset;
    const int g = 1 + static_cast<int>(rng.bounded(15));
    while (static_cast<int>(tset.size()) < g) tset.insert(static_cast<int>(rng.bounded(200)));
    std::vector<int> truth(tset.begin(), tset.end());
    std::vector<int> artists;
    for (int s : truth) artists.push_back(artist_fn(s));

    auto [p, r] = metric_precision_recall(ranked, truth, n_reco);
    auto [op, orc] = oracle::precision_recall(ranked, truth, n_reco);
    all_exact = all_exact && p == op && r == orc;
    all_exact = all_exact && metric_r_precision(ranked, truth, artists, artist_fn) ==
                                 oracle::r_precision(ranked, truth, artists, artist_fn);
    all_exact = all_exact && metric_ndcg(ranked, truth) == oracle::ndcg(ranked, truth);
    all_exact =
        all_exact && metric_clicks(ranked, truth, n_reco) == oracle::clicks(ranked, truth, n_reco);
  }

  // oracle-recommender bounds on one instance
  std::vector<int> truth{3, 50, 77, 120};
  std::vector<int> artists;
  for (int s : truth) artists.push_back(artist_fn(s));
  std::vector<int> ranked = truth;
  for (int i = 0; static_cast<int>(ranked.size()) < 50; ++i)
    if (!std::count(truth.begin(), truth.end(), i)) ranked.push_back(i);
  auto [p, r] = metric_precision_recall(ranked, truth, 50);
  bool bounds_ok = r == 1.0 && p == 4.0 / 50.0 &&
                   metric_clicks(ranked, truth, 50) == 0.0 &&
                   metric_r_precision(ranked, truth, artists, artist_fn) == 1.0;
  report(4, all_exact && bounds_ok,
         "metrics match brute-force references exactly on 200 instances",
         bounds_ok ? "oracle bounds hold" : "oracle bounds violated");
}

// --- criterion 5: top-k exactness ---------------------------------------------

void criterion_topk() {
  Rng rng(51);
  bool all_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 10000, d = 32, k = 50;
    Mat catalog = random_mat(n, d, rng, 1.0f);
    for (int dup = 0; dup < 200; ++dup)  // force ties
      catalog.row(5000 + dup) = catalog.row(dup * 7 % 5000);
    Vec q = random_mat(1, d, rng, 1.0f).row(0).transpose();
    std::set<int> exclude;
    if (trial % 3 == 0)
      for (int e = 0; e < 10; ++e) exclude.insert(static_cast<int>(rng.bounded(n)));

    auto expect = oracle::topk_full_sort(catalog, q, k, exclude);
    std::unordered_set<int> excl(exclude.begin(), exclude.end());
    RankedList got = score_and_top_k(q, catalog, k, excl, trial % 2 ? 4 : 1);
    if (got.song_ids.size() != expect.size()) {
      all_ok = false;
      break;
    }
    for (size_t i = 0; i < expect.size(); ++i)
      if (got.song_ids[i] != expect[i].second || got.scores[i] != expect[i].first) all_ok = false;
  }
  report(5, all_ok, "exact top-k equals the full-sort oracle on 50 instances with ties");
}

// --- criterion 6: learnability and model ordering -----------------------------

struct TrainedEval {
  double untrained_ndcg = 0.0;
  double trained_ndcg = 0.0;
};

TrainedEval train_and_eval(const Corpus& corpus, const EmbeddingStore& store,
                           RepresenterKind rk, AggregatorKind ak, uint64_t seed,
                           const std::string& run_tag) {
  ModelConfig mc;
  mc.representer.kind = rk;
  mc.representer.dim = store.dim;
  mc.representer.heads = 4;
  mc.representer.init_seed = seed;
  mc.aggregator.kind = ak;
  mc.aggregator.dim = store.dim;
  mc.aggregator.max_len = corpus.max_playlist_len;
  mc.aggregator.layers = 2;
  mc.aggregator.heads = 4;
  mc.aggregator.cnn_layers = 2;
  mc.aggregator.init_seed = seed + 1;
  RtaModel model(mc, corpus, store);

  EvalConfig ec;
  ec.n_seed_values = {1, 2, 3, 4, 5};
  ec.playlists_per_bucket = 50;
  ec.n_reco = 100;
  ec.rng_seed = 99;

  TrainedEval out;
  {
    RtaRecommender rec(model, precompute_catalog(model.representer(), corpus, 1));
    out.untrained_ndcg = evaluate_model(rec, corpus, ec).aggregate.ndcg.mean;
  }

  TrainConfig tc;
  tc.batch_playlists = 32;
  tc.n_negatives = 50;
  tc.lr0 = 0.1f;
  tc.weight_decay = 1e-6f;
  tc.dropout = 0.1f;
  tc.max_epochs = 4;
  tc.patience = 4;
  tc.rng_seed = seed;
  tc.val_n_reco = 100;
  fs::path dir = fs::temp_directory_path() / ("rta_acc6_" + run_tag);
  fs::remove_all(dir);
  FitResult res = fit(model, corpus, tc, dir.string());

  auto best = RtaModel::load_checkpoint(res.best_checkpoint);
  RtaRecommender rec(*best, precompute_catalog(best->representer(), corpus, 1));
  out.trained_ndcg = evaluate_model(rec, corpus, ec).aggregate.ndcg.mean;
  return out;
}

void criterion_learnability() {
  testsupport::SyntheticSpec spec;  // 500 songs, 20 clusters, 2000 playlists
  Corpus corpus = testsupport::make_synthetic_corpus(spec);
  testsupport::split_synthetic(corpus, 150, 400, 7);

  WrmfConfig wc;
  wc.dim = 32;
  wc.iterations = 6;
  wc.rng_seed = 3;
  WrmfResult wr = wrmf_factorize(corpus, corpus.train_ids, wc);
  EmbeddingStore store = init_metadata_embeddings(wr.song_vectors, corpus);

  struct Combo {
    RepresenterKind rk;
    AggregatorKind ak;
    const char* name;
  };
  const Combo combos[] = {
      {RepresenterKind::direct, AggregatorKind::avg, "mf-avg"},
      {RepresenterKind::direct, AggregatorKind::cnn, "mf-cnn"},
      {RepresenterKind::direct, AggregatorKind::gru, "mf-gru"},
      {RepresenterKind::direct, AggregatorKind::transformer, "mf-transformer"},
      {RepresenterKind::fm, AggregatorKind::transformer, "fm-transformer"},
      {RepresenterKind::attention, AggregatorKind::transformer, "nn-transformer"},
  };

  bool all_beat_untrained = true;
  std::ostringstream detail;
  for (const Combo& c : combos) {
    TrainedEval te = train_and_eval(corpus, store, c.rk, c.ak, 1, c.name);
    detail << c.name << " " << te.untrained_ndcg << "->" << te.trained_ndcg << "  ";
    if (te.trained_ndcg <= te.untrained_ndcg) all_beat_untrained = false;
  }
  report(6, all_beat_untrained, "(a) every trained model beats its untrained initialization",
         detail.str());

  int ordering_holds = 0;
  std::ostringstream det_b;
  for (uint64_t s = 1; s <= 5; ++s) {
    TrainedEval avg = train_and_eval(corpus, store, RepresenterKind::direct,
                                     AggregatorKind::avg, s, "avg_s" + std::to_string(s));
    TrainedEval tr = train_and_eval(corpus, store, RepresenterKind::direct,
                                    AggregatorKind::transformer, s, "tr_s" + std::to_string(s));
    det_b << "seed " << s << ": " << tr.trained_ndcg << " vs " << avg.trained_ndcg << "  ";
    if (tr.trained_ndcg >= avg.trained_ndcg) ordering_holds++;
  }
  det_b << "(" << ordering_holds << "/5 seeds)";
  report(6, ordering_holds >= 4, "(b) MF-Transformer >= MF-AVG on NDCG for >= 4 of 5 seeds",
         det_b.str());
}

// --- criterion 7: subsampled MPD (optional) -----------------------------------

void criterion_mpd_subsample() {
  const char* dir = std::getenv("RTA_MPD_DIR");
  if (dir == nullptr || !fs::exists(dir)) {
    report_skip(7, "subsampled-MPD sanity",
                "optional; set RTA_MPD_DIR to a directory of MPD slice files to run");
    return;
  }
  Corpus corpus = load_mpd_slices(dir);
  SplitSpec split;
  split.rng_seed = 1;
  split.n_val = 1000;
  split.n_test = 2000;
  split.min_len = 20;
  SplitResult sr = split_dataset(corpus, split);
  corpus.train_ids = sr.train_ids;
  corpus.val_ids = sr.val_ids;
  corpus.test_ids = sr.test_ids;
  corpus.recompute_popularity(corpus.train_ids);

  WrmfConfig wc;
  wc.dim = 64;
  wc.iterations = 10;
  WrmfResult wr = wrmf_factorize(corpus, corpus.train_ids, wc);
  EmbeddingStore store = init_metadata_embeddings(wr.song_vectors, corpus);

  ModelConfig mc;
  mc.representer.kind = RepresenterKind::direct;
  mc.representer.dim = 64;
  mc.aggregator.kind = AggregatorKind::avg;
  mc.aggregator.dim = 64;
  mc.aggregator.max_len = corpus.max_playlist_len;
  RtaModel model(mc, corpus, store);
  TrainConfig tc;
  tc.rng_seed = 1;
  tc.max_epochs = 3;
  tc.patience = 3;
  fs::path run = fs::temp_directory_path() / "rta_acc7";
  fs::remove_all(run);
  FitResult res = fit(model, corpus, tc, run.string());
  auto best = RtaModel::load_checkpoint(res.best_checkpoint);

  EvalConfig ec;
  ec.playlists_per_bucket = 100;
  ec.n_reco = 500;
  RtaRecommender mf(*best, precompute_catalog(best->representer(), corpus, 1));
  EvalReport mf_report = evaluate_model(mf, corpus, ec);
  KnnRecommender sknn(corpus, corpus.train_ids, 100, false);
  EvalReport sknn_report = evaluate_model(sknn, corpus, ec);

  const double ratio = std::max(mf_report.aggregate.ndcg.mean, sknn_report.aggregate.ndcg.mean) /
                       std::max(1e-9, std::min(mf_report.aggregate.ndcg.mean,
                                               sknn_report.aggregate.ndcg.mean));
  const double random_recall =
      100.0 * static_cast<double>(ec.n_reco) / static_cast<double>(corpus.num_songs());
  std::ostringstream det;
  det << "ndcg mf-avg " << mf_report.aggregate.ndcg.mean << " sknn "
      << sknn_report.aggregate.ndcg.mean << ", recall " << mf_report.aggregate.recall.mean
      << " vs 10x random " << 10.0 * random_recall;
  report(7, ratio <= 2.0 && mf_report.aggregate.recall.mean > 10.0 * random_recall,
         "subsampled-MPD consistency", det.str());
}

// --- criterion 8: latency budget ------------------------------------------------

void criterion_latency() {
  BenchConfig bc;
  bc.catalog_size = 2'000'000;
  bc.dim = 128;
  bc.n_requests = 1000;
  bc.thread_counts = {1, 8};
  bc.n_reco = 100;
  BenchReport rep = run_latency_bench(bc);

  const BenchSeries& single = rep.series[0];
  const BenchSeries& multi = rep.series[1];
  std::ostringstream det1;
  det1 << "p99 " << single.total_ms_p99 << " ms single-threaded (budget 100 ms)";
  report(8, single.total_ms_p99 <= 100.0, "latency over 2M x 128 catalog, 1 thread",
         det1.str());

  const unsigned cores = std::thread::hardware_concurrency();
  std::ostringstream det8;
  det8 << "p99 " << multi.total_ms_p99 << " ms with 8 worker threads (budget 25 ms)";
  if (cores < 8) {
    report_skip(8, "latency with 8 worker threads",
                det8.str() + "; requires >= 8 hardware threads, this host has " +
                    std::to_string(cores));
  } else {
    report(8, multi.total_ms_p99 <= 25.0, "latency over 2M x 128 catalog, 8 threads",
           det8.str());
  }
}

// --- criterion 9: determinism ---------------------------------------------------

void criterion_determinism() {
  testsupport::SyntheticSpec spec;
  Corpus corpus = testsupport::make_synthetic_corpus(spec);
  testsupport::split_synthetic(corpus, 100, 200, 5);
  Rng rng(61);
  Mat sv = random_mat(corpus.num_songs(), 16, rng, 0.4f);
  EmbeddingStore store = init_metadata_embeddings(sv, corpus);

  auto make_model = [&]() {
    ModelConfig mc;
    mc.representer.kind = RepresenterKind::direct;
    mc.representer.dim = 16;
    mc.aggregator.kind = AggregatorKind::avg;
    mc.aggregator.dim = 16;
    mc.aggregator.max_len = corpus.max_playlist_len;
    return std::make_unique<RtaModel>(mc, corpus, store);
  };
  TrainConfig tc;
  tc.batch_playlists = 32;
  tc.n_negatives = 20;
  tc.max_epochs = 3;
  tc.patience = 5;
  tc.val_n_reco = 50;

  fs::path d1 = fs::temp_directory_path() / "rta_acc9_a";
  fs::path d2 = fs::temp_directory_path() / "rta_acc9_b";
  fs::remove_all(d1);
  fs::remove_all(d2);
  auto m1 = make_model();
  auto m2 = make_model();
  fit(*m1, corpus, tc, d1.string());
  fit(*m2, corpus, tc, d2.string());

  bool ckpt_equal = file_fnv1a((d1 / "best.rtak").string()) ==
                        file_fnv1a((d2 / "best.rtak").string()) &&
                    file_fnv1a((d1 / "last.rtak").string()) ==
                        file_fnv1a((d2 / "last.rtak").string());

  EvalConfig ec;
  ec.n_seed_values = {1, 2, 3};
  ec.playlists_per_bucket = 40;
  ec.n_reco = 100;
  auto b1 = RtaModel::load_checkpoint((d1 / "best.rtak").string());
  auto b2 = RtaModel::load_checkpoint((d2 / "best.rtak").string());
  RtaRecommender r1(*b1, precompute_catalog(b1->representer(), corpus, 1));
  RtaRecommender r2(*b2, precompute_catalog(b2->representer(), corpus, 1));
  evaluate_model(r1, corpus, ec).write_json((d1 / "report.json").string());
  evaluate_model(r2, corpus, ec).write_json((d2 / "report.json").string());
  bool report_equal =
      file_fnv1a((d1 / "report.json").string()) == file_fnv1a((d2 / "report.json").string());

  // resume equals uninterrupted
  fs::path d3 = fs::temp_directory_path() / "rta_acc9_c";
  fs::remove_all(d3);
  auto m3 = make_model();
  TrainConfig tc_short = tc;
  tc_short.max_epochs = 1;
  fit(*m3, corpus, tc_short, d3.string());
  auto m4 = make_model();
  fit(*m4, corpus, tc, d3.string(), /*resume=*/true);
  bool resume_equal =
      file_fnv1a((d1 / "last.rtak").string()) == file_fnv1a((d3 / "last.rtak").string());

  std::ostringstream det;
  det << "checkpoints " << (ckpt_equal ? "identical" : "DIFFER") << ", reports "
      << (report_equal ? "identical" : "DIFFER") << ", resume "
      << (resume_equal ? "identical" : "DIFFERS");
  report(9, ckpt_equal && report_equal && resume_equal,
         "byte-identical checkpoints and reports; resume equals uninterrupted", det.str());
}

// --- criterion 10: WRMF ----------------------------------------------------------

void criterion_wrmf() {
  Rng rng(71);
  bool monotone = true;
  for (int trial = 0; trial < 3; ++trial) {
    Corpus c;
    c.songs.resize(80);
    for (int i = 0; i < 80; ++i) c.songs[static_cast<size_t>(i)].song_id = i;
    for (int p = 0; p < 50; ++p) {
      Playlist pl;
      pl.playlist_id = p;
      std::set<int> s;
      int len = 4 + static_cast<int>(rng.bounded(10));
      while (static_cast<int>(s.size()) < len) s.insert(static_cast<int>(rng.bounded(80)));
      pl.songs.assign(s.begin(), s.end());
      c.playlists.push_back(std::move(pl));
    }
    std::vector<int> all(c.playlists.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    c.train_ids = all;

    WrmfConfig wc;
    wc.dim = 8;
    wc.iterations = 5;
    wc.rng_seed = 100 + static_cast<uint64_t>(trial);
    std::vector<std::vector<int>> lists;
    for (int pid : c.train_ids) lists.push_back(c.playlists[static_cast<size_t>(pid)].songs);
    std::vector<double> obj;
    wrmf_factorize(c, c.train_ids, wc, [&](int, const Mat& X, const Mat& Y) {
      obj.push_back(
          oracle::wrmf_objective_dense(lists, 80, X, Y, wc.confidence_alpha, wc.lambda));
    });
    for (size_t i = 1; i < obj.size(); ++i)
      if (obj[i] > obj[i - 1] + 1e-6) monotone = false;
    if (obj[2] > obj[0]) monotone = false;
  }

  // block-diagonal retrieval sanity
  Corpus c;
  c.songs.resize(4);
  for (int i = 0; i < 4; ++i) c.songs[static_cast<size_t>(i)].song_id = i;
  for (int p = 0; p < 4; ++p) {
    Playlist pl;
    pl.playlist_id = p;
    pl.songs = p < 2 ? std::vector<int>{0, 1} : std::vector<int>{2, 3};
    c.playlists.push_back(std::move(pl));
  }
  c.train_ids = {0, 1, 2, 3};
  WrmfConfig wc;
  wc.dim = 2;
  wc.iterations = 10;
  wc.rng_seed = 5;
  WrmfResult r = wrmf_factorize(c, c.train_ids, wc);
  bool retrieval = true;
  for (int u = 0; u < 4; ++u) {
    const bool first_block = u < 2;
    for (int in : (first_block ? std::vector<int>{0, 1} : std::vector<int>{2, 3}))
      for (int out : (first_block ? std::vector<int>{2, 3} : std::vector<int>{0, 1}))
        if (r.playlist_vectors.row(u).dot(r.song_vectors.row(in)) <=
            r.playlist_vectors.row(u).dot(r.song_vectors.row(out)))
          retrieval = false;
  }
  report(10, monotone && retrieval,
         "WRMF objective nonincreasing; block-diagonal retrieval sane",
         monotone ? (retrieval ? "" : "retrieval violated") : "objective increased");
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--skip-slow";
  criterion_gradients();
  criterion_prefix_equivalence();
  criterion_loss_oracle();
  criterion_metric_oracles();
  criterion_topk();
  if (quick) {
    report_skip(6, "end-to-end learnability", "--skip-slow");
    report_skip(8, "latency budget", "--skip-slow");
  } else {
    criterion_learnability();
  }
  criterion_mpd_subsample();
  if (!quick) criterion_latency();
  criterion_determinism();
  criterion_wrmf();

  std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
