#include "rta/model.hpp"

#include "rta/binio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace rta {

using nlohmann::json;

RtaModel::RtaModel(ModelConfig cfg, const Corpus& corpus, const EmbeddingStore& store)
    : cfg_(std::move(cfg)), representer_(cfg_.representer), aggregator_(cfg_.aggregator) {
  if (cfg_.representer.dim != cfg_.aggregator.dim)
    throw ConfigError("representer and aggregator dims differ");
  (void)corpus;
  representer_.register_params(params_, store);
  aggregator_.register_params(params_);
}

RtaModel::RtaModel(ModelConfig cfg)
    : cfg_(std::move(cfg)), representer_(cfg_.representer), aggregator_(cfg_.aggregator) {}

namespace {

constexpr char kCheckpointMagic[4] = {'R', 'T', 'A', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
  json j;
  j["representer"] = {{"kind", to_string(c.representer.kind)},
                      {"dim", c.representer.dim},
                      {"layers", c.representer.layers},
                      {"heads", c.representer.heads},
                      {"include_song_token", c.representer.include_song_token},
                      {"init_seed", c.representer.init_seed},
                      {"freeze_song_embeddings", c.representer.freeze_song_embeddings}};
  j["aggregator"] = {{"kind", to_string(c.aggregator.kind)},
                     {"dim", c.aggregator.dim},
                     {"max_len", c.aggregator.max_len},
                     {"layers", c.aggregator.layers},
                     {"heads", c.aggregator.heads},
                     {"ff_mult", c.aggregator.ff_mult},
                     {"cnn_layers", c.aggregator.cnn_layers},
                     {"cnn_kernel", c.aggregator.cnn_kernel},
                     {"gru_hidden", c.aggregator.gru_hidden},
                     {"init_seed", c.aggregator.init_seed}};
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  const json& r = j.at("representer");
  c.representer.kind = representer_kind_from_string(r.at("kind").get<std::string>());
  c.representer.dim = r.at("dim").get<int>();
  c.representer.layers = r.at("layers").get<int>();
  c.representer.heads = r.at("heads").get<int>();
  c.representer.include_song_token = r.at("include_song_token").get<bool>();
  c.representer.init_seed = r.at("init_seed").get<uint64_t>();
  c.representer.freeze_song_embeddings = r.at("freeze_song_embeddings").get<bool>();
  const json& a = j.at("aggregator");
  c.aggregator.kind = aggregator_kind_from_string(a.at("kind").get<std::string>());
  c.aggregator.dim = a.at("dim").get<int>();
  c.aggregator.max_len = a.at("max_len").get<int>();
  c.aggregator.layers = a.at("layers").get<int>();
  c.aggregator.heads = a.at("heads").get<int>();
  c.aggregator.ff_mult = a.at("ff_mult").get<int>();
  c.aggregator.cnn_layers = a.at("cnn_layers").get<int>();
  c.aggregator.cnn_kernel = a.at("cnn_kernel").get<int>();
  c.aggregator.gru_hidden = a.at("gru_hidden").get<int>();
  c.aggregator.init_seed = a.at("init_seed").get<uint64_t>();
  return c;
}

void write_mask(BinWriter& w, const std::vector<uint8_t>& m) { w.vec_pod(m); }

}  // namespace

void RtaModel::save_checkpoint(const std::string& path, const TrainProgress& progress) const {
  BinWriter w(path + ".tmp");
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(config_to_json(cfg_).dump());

  w.u32(static_cast<uint32_t>(progress.epoch));
  w.f64(progress.best_val_ndcg);
  w.u32(static_cast<uint32_t>(progress.epochs_since_improve));
  w.u64(progress.rng_state);
  w.u64(progress.rng_inc);

  const auto& pres = representer_.presence();
  write_mask(w, pres.artist);
  write_mask(w, pres.album);
  write_mask(w, pres.dur_bucket);
  write_mask(w, pres.pop_bucket);

  // Tensors in sorted-name order so equal states give equal bytes.
  std::vector<const Parameter*> ordered;
  for (const auto& p : params_.all()) ordered.push_back(p.get());
  std::sort(ordered.begin(), ordered.end(),
            [](const Parameter* a, const Parameter* b) { return a->name < b->name; });
  w.u64(ordered.size());
  for (const Parameter* p : ordered) {
    w.str(p->name);
    w.u8(p->sparse ? 1 : 0);
    w.u8(p->weight_decay_exempt ? 1 : 0);
    w.u8(p->frozen ? 1 : 0);
    w.mat(p->value);
  }
  w.close();
  commit_tmp_file(path);

  json side;
  side["model"] = name();
  side["config"] = config_to_json(cfg_);
  side["epoch"] = progress.epoch;
  side["best_val_ndcg"] = progress.best_val_ndcg;
  side["history"] = json::parse(progress.history_json);
  std::ofstream out(path + ".json");
  if (!out) throw IoError("cannot write checkpoint sidecar: " + path + ".json");
  out << side.dump(2) << "\n";
}

std::unique_ptr<RtaModel> RtaModel::load_checkpoint(const std::string& path,
                                                    TrainProgress* progress) {
  BinReader r(path);
  r.expect_magic(kCheckpointMagic, "checkpoint");
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version in " + path);
  ModelConfig cfg = config_from_json(json::parse(r.str()));

  TrainProgress prog;
  prog.epoch = static_cast<int>(r.u32());
  prog.best_val_ndcg = r.f64();
  prog.epochs_since_improve = static_cast<int>(r.u32());
  prog.rng_state = r.u64();
  prog.rng_inc = r.u64();

  Representer::Presence pres;
  pres.artist = r.vec_pod<uint8_t>();
  pres.album = r.vec_pod<uint8_t>();
  pres.dur_bucket = r.vec_pod<uint8_t>();
  pres.pop_bucket = r.vec_pod<uint8_t>();

  auto model = std::unique_ptr<RtaModel>(new RtaModel(cfg));
  uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    bool sparse = r.u8() != 0;
    bool exempt = r.u8() != 0;
    bool frozen = r.u8() != 0;
    Parameter& p = model->params_.add(name, r.mat(), exempt, sparse);
    p.frozen = frozen;
  }
  model->representer_.bind_params(model->params_);
  model->representer_.set_presence(std::move(pres));
  model->aggregator_.bind_params(model->params_);

  if (progress) {
    std::ifstream side(path + ".json");
    if (side) {
      json j;
      side >> j;
      if (j.contains("history")) prog.history_json = j["history"].dump();
    }
    *progress = prog;
  }
  return model;
}

}  // namespace rta
