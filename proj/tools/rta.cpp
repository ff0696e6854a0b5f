#include "rta/bench.hpp"
#include "rta/binio.hpp"
#include "rta/corpus.hpp"
#include "rta/embeddings.hpp"
#include "rta/evalsuite.hpp"
#include "rta/model.hpp"
#include "rta/recommenders.hpp"
#include "rta/represent.hpp"
#include "rta/runconfig.hpp"
#include "rta/serve.hpp"
#include "rta/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rta;

namespace {

std::string utc_stamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

// runs/<verb>-<stamp>-<confighash>/, or the pinned run_dir from the config.
std::string make_run_dir(const RunConfig& cfg, const std::string& verb) {
  std::string dir = cfg.get<std::string>("run_dir", "");
  if (dir.empty()) {
    std::string out_root = cfg.get<std::string>("out_dir", "runs");
    std::string base = out_root + "/" + verb + "-" + utc_stamp() + "-" + cfg.hash8();
    dir = base;
    for (int n = 2; fs::exists(dir); ++n) dir = base + "-" + std::to_string(n);
  }
  fs::create_directories(dir);
  cfg.write_snapshot(dir + "/resolved_config.json");
  return dir;
}

ModelConfig model_config_from(const RunConfig& cfg) {
  ModelConfig m;
  m.representer.kind =
      representer_kind_from_string(cfg.get<std::string>("model.representer", "mf"));
  m.aggregator.kind =
      aggregator_kind_from_string(cfg.get<std::string>("model.aggregator", "avg"));
  const int dim = cfg.get<int>("model.dim", 128);
  m.representer.dim = dim;
  m.representer.layers = cfg.get<int>("model.phi_nn.layers", 1);
  m.representer.heads = cfg.get<int>("model.phi_nn.heads", 4);
  m.representer.include_song_token = cfg.get<bool>("model.phi_nn.include_song_token", true);
  m.representer.init_seed = cfg.get<uint64_t>("model.init_seed", 1);
  m.representer.freeze_song_embeddings = cfg.get<bool>("model.freeze_song_embeddings", false);
  m.aggregator.dim = dim;
  m.aggregator.max_len = cfg.get<int>("model.max_len", 250);
  m.aggregator.layers = cfg.get<int>("model.transformer.layers", 2);
  m.aggregator.heads = cfg.get<int>("model.transformer.heads", 4);
  m.aggregator.ff_mult = cfg.get<int>("model.transformer.ff_mult", 4);
  m.aggregator.cnn_layers = cfg.get<int>("model.cnn.layers", 2);
  m.aggregator.cnn_kernel = cfg.get<int>("model.cnn.kernel", 3);
  m.aggregator.gru_hidden = cfg.get<int>("model.gru.hidden", 0);
  m.aggregator.init_seed = cfg.get<uint64_t>("model.init_seed", 1) + 1;
  return m;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.batch_playlists = cfg.get<int>("train.batch_playlists", 128);
  t.n_negatives = cfg.get<int>("train.n_negatives", 100);
  t.lr0 = cfg.get<float>("train.lr0", 0.05f);
  t.weight_decay = cfg.get<float>("train.weight_decay", 1e-6f);
  t.dropout = cfg.get<float>("train.dropout", 0.1f);
  t.max_epochs = cfg.get<int>("train.max_epochs", 20);
  t.patience = cfg.get<int>("train.patience", 2);
  t.rng_seed = cfg.get<uint64_t>("train.rng_seed", 1);
  t.popularity_weighted_negatives = cfg.get<bool>("train.popularity_weighted_negatives", false);
  t.val_n_reco = cfg.get<int>("train.val_n_reco", 500);
  t.threads = cfg.get<int>("train.threads", 1);
  return t;
}

int cmd_ingest(const RunConfig& cfg) {
  std::string dir = make_run_dir(cfg, "ingest");
  Corpus corpus = load_mpd_slices(cfg.require<std::string>("corpus.mpd_dir"),
                                  cfg.get<int>("corpus.max_playlist_len", 250));
  corpus.alpha_pop = cfg.get<double>("corpus.alpha_pop", 0.0);

  if (cfg.has("split")) {
    SplitSpec spec;
    spec.rng_seed = cfg.get<uint64_t>("split.rng_seed", 1);
    spec.n_val = cfg.get<int>("split.n_val", 10000);
    spec.n_test = cfg.get<int>("split.n_test", 10000);
    spec.min_len = cfg.get<int>("split.min_len", 20);
    SplitResult split = split_dataset(corpus, spec);
    corpus.train_ids = split.train_ids;
    corpus.val_ids = split.val_ids;
    corpus.test_ids = split.test_ids;
    corpus.split_seed = spec.rng_seed;
    corpus.recompute_popularity(corpus.train_ids);
  }
  corpus.save(dir + "/corpus.rtac");
  corpus.write_manifest(dir + "/manifest.json");
  std::cout << "corpus: " << corpus.num_songs() << " songs, " << corpus.num_playlists()
            << " playlists -> " << dir << "/corpus.rtac\n";
  return 0;
}

int cmd_wrmf_init(const RunConfig& cfg) {
  std::string dir = make_run_dir(cfg, "wrmf-init");
  Corpus corpus = Corpus::load(cfg.require<std::string>("artifacts.corpus"));
  WrmfConfig w;
  w.dim = cfg.get<int>("wrmf.dim", cfg.get<int>("model.dim", 128));
  w.confidence_alpha = cfg.get<double>("wrmf.confidence_alpha", 10.0);
  w.lambda = cfg.get<double>("wrmf.lambda", 0.1);
  w.iterations = cfg.get<int>("wrmf.iterations", 15);
  w.rng_seed = cfg.get<uint64_t>("wrmf.rng_seed", 1);

  WrmfResult result = wrmf_factorize(corpus, corpus.train_ids, w);
  EmbeddingStore store = init_metadata_embeddings(result.song_vectors, corpus);
  store.save(dir + "/embeddings.rtae");

  json log{{"objective", result.objective}, {"dim", w.dim}, {"iterations", w.iterations}};
  std::ofstream(dir + "/wrmf_log.json") << log.dump(2) << "\n";
  std::cout << "wrmf: objective " << result.objective.front() << " -> "
            << result.objective.back() << ", embeddings -> " << dir << "/embeddings.rtae\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume_dir) {
  std::string dir = resume_dir.empty() ? make_run_dir(cfg, "train") : resume_dir;
  Corpus corpus = Corpus::load(cfg.require<std::string>("artifacts.corpus"));
  EmbeddingStore store = EmbeddingStore::load(cfg.require<std::string>("artifacts.embeddings"));
  ModelConfig mc = model_config_from(cfg);
  mc.representer.dim = store.dim;
  mc.aggregator.dim = store.dim;
  RtaModel model(mc, corpus, store);
  TrainConfig tc = train_config_from(cfg);
  FitResult fitres = fit(model, corpus, tc, dir, !resume_dir.empty());
  std::cout << "train: " << model.name() << " best val NDCG " << fitres.best_val_ndcg << " after "
            << fitres.epochs_run << " epochs -> " << fitres.best_checkpoint << "\n";
  return 0;
}

int cmd_precompute(const RunConfig& cfg) {
  std::string dir = make_run_dir(cfg, "precompute");
  const std::string corpus_path = cfg.require<std::string>("artifacts.corpus");
  const std::string checkpoint_path = cfg.require<std::string>("artifacts.checkpoint");
  Corpus corpus = Corpus::load(corpus_path);
  auto model = RtaModel::load_checkpoint(checkpoint_path);
  Mat catalog =
      precompute_catalog(model->representer(), corpus, cfg.get<int>("precompute.threads", 1));

  // Self-contained serve bundle: fixed names, hash-keyed catalog.
  fs::copy_file(checkpoint_path, dir + "/checkpoint.rtak", fs::copy_options::overwrite_existing);
  if (fs::exists(checkpoint_path + ".json"))
    fs::copy_file(checkpoint_path + ".json", dir + "/checkpoint.rtak.json",
                  fs::copy_options::overwrite_existing);
  fs::copy_file(corpus_path, dir + "/corpus.rtac", fs::copy_options::overwrite_existing);
  save_catalog_matrix(dir + "/catalog.rtap", catalog, file_fnv1a(dir + "/checkpoint.rtak"));
  std::cout << "precompute: " << catalog.rows() << " x " << catalog.cols() << " -> " << dir
            << "/catalog.rtap\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  std::string dir = make_run_dir(cfg, "evaluate");
  Corpus corpus = Corpus::load(cfg.require<std::string>("artifacts.corpus"));

  EvalConfig ec;
  ec.n_seed_values = cfg.get<std::vector<int>>("eval.n_seed_values",
                                               std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  ec.playlists_per_bucket = cfg.get<int>("eval.playlists_per_bucket", 1000);
  ec.n_reco = cfg.get<int>("eval.n_reco", 500);
  ec.rng_seed = cfg.get<uint64_t>("eval.rng_seed", 1);
  ec.ndcg_variant = cfg.get<std::string>("eval.ndcg_variant", "standard") == "challenge"
                        ? NdcgVariant::challenge
                        : NdcgVariant::standard;
  ec.threads = cfg.get<int>("eval.threads", 1);

  const std::string which = cfg.get<std::string>("eval.model", "rta");
  std::unique_ptr<Recommender> rec;
  std::unique_ptr<RtaModel> model;
  if (which == "rta") {
    model = RtaModel::load_checkpoint(cfg.require<std::string>("artifacts.checkpoint"));
    CatalogMatrix cat = load_catalog_matrix(cfg.require<std::string>("artifacts.catalog"));
    const uint64_t h = file_fnv1a(cfg.require<std::string>("artifacts.checkpoint"));
    if (cat.checkpoint_hash != h)
      throw ConfigError("evaluate: catalog matrix does not match the checkpoint (stale artifact)");
    rec = std::make_unique<RtaRecommender>(*model, std::move(cat.matrix), ec.threads);
  } else if (which == "sknn" || which == "vsknn") {
    rec = std::make_unique<KnnRecommender>(corpus, corpus.train_ids,
                                           cfg.get<int>("eval.k_neighbors", 100),
                                           which == "vsknn");
  } else {
    throw ConfigError("eval.model must be rta, sknn, or vsknn; got " + which);
  }

  EvalReport report = evaluate_model(*rec, corpus, ec);
  report.write_json(dir + "/report.json");
  report.write_csv(dir + "/report.csv");
  report.write_series_csv(dir + "/series.csv");
  report.write_timing_json(dir + "/timing.json");
  std::cout << "evaluate: " << report.model << " NDCG " << report.aggregate.ndcg.mean << "% +- "
            << report.aggregate.ndcg.ci << " recall " << report.aggregate.recall.mean << "% -> "
            << dir << "/report.json\n";
  return 0;
}

int cmd_serve(const RunConfig& cfg) {
  ServeConfig sc;
  sc.artifact_dir = cfg.require<std::string>("serve.artifact_dir");
  sc.bind_address = cfg.get<std::string>("serve.bind_address", "127.0.0.1:8080");
  sc.worker_threads = cfg.get<int>("serve.worker_threads", 4);
  sc.default_n_reco = cfg.get<int>("serve.default_n_reco", 100);
  sc.max_seed_len = cfg.get<int>("serve.max_seed_len", 250);
  Server server(sc);
  int port = server.start();
  std::cout << "serving on " << sc.bind_address.substr(0, sc.bind_address.rfind(':')) << ":"
            << port << " (POST /v1/continue, GET /v1/health, POST /v1/reload)" << std::endl;
  server.wait();
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  std::string dir = make_run_dir(cfg, "bench-latency");
  BenchConfig bc;
  bc.catalog_size = cfg.get<int64_t>("bench.catalog_size", 2'000'000);
  bc.dim = cfg.get<int>("bench.dim", 128);
  bc.n_requests = cfg.get<int>("bench.n_requests", 1000);
  bc.thread_counts = cfg.get<std::vector<int>>("bench.threads", std::vector<int>{1, 8});
  bc.n_reco = cfg.get<int>("bench.n_reco", 100);
  bc.max_seed_len = cfg.get<int>("bench.max_seed_len", 10);
  bc.rng_seed = cfg.get<uint64_t>("bench.rng_seed", 7);
  bc.aggregator = cfg.get<std::string>("bench.aggregator", "transformer");

  BenchReport report = run_latency_bench(bc);
  write_bench_json(report, dir + "/bench.json");
  for (const auto& s : report.series) {
    std::printf("threads=%d  embed %.3f ms  score %.3f ms  p50 %.3f  p90 %.3f  p99 %.3f  max %.3f ms\n",
                s.threads, s.embed_ms_mean, s.score_ms_mean, s.total_ms_p50, s.total_ms_p90,
                s.total_ms_p99, s.total_ms_max);
  }
  std::cout << "bench: " << bc.n_requests << " requests over " << bc.catalog_size << " x "
            << bc.dim << " -> " << dir << "/bench.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"playlist continuation engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string resume_dir;

  auto add_common = [&](CLI::App* sub, bool with_resume = false) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--set", overrides, "override config keys (key.path=value)");
    if (with_resume)
      sub->add_option("--resume", resume_dir, "existing train run directory to continue");
  };

  add_common(app.add_subcommand("ingest", "load MPD slices, split, write corpus"));
  add_common(app.add_subcommand("wrmf-init", "factorize occurrences, write embedding store"));
  add_common(app.add_subcommand("train", "fit a model on the train split"), true);
  add_common(app.add_subcommand("precompute", "write the catalog matrix serve bundle"));
  add_common(app.add_subcommand("evaluate", "masked-continuation evaluation"));
  add_common(app.add_subcommand("serve", "HTTP continuation endpoint"));
  add_common(app.add_subcommand("bench-latency", "synthetic-catalog latency benchmark"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = RunConfig::from_file(config_path, overrides);
    if (app.got_subcommand("ingest")) return cmd_ingest(cfg);
    if (app.got_subcommand("wrmf-init")) return cmd_wrmf_init(cfg);
    if (app.got_subcommand("train")) return cmd_train(cfg, resume_dir);
    if (app.got_subcommand("precompute")) return cmd_precompute(cfg);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(cfg);
    if (app.got_subcommand("serve")) return cmd_serve(cfg);
    if (app.got_subcommand("bench-latency")) return cmd_bench(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "{\"error\":\"config\",\"message\":\"" << e.what() << "\"}" << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"runtime\",\"message\":\"" << e.what() << "\"}" << std::endl;
    return 1;
  }
}
