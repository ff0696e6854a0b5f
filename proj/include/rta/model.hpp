#pragma once

#include "rta/aggregate.hpp"
#include "rta/corpus.hpp"
#include "rta/embeddings.hpp"
#include "rta/represent.hpp"

#include <memory>
#include <string>

namespace rta {

struct ModelConfig {
  RepresenterConfig representer;
  AggregatorConfig aggregator;

  std::string name() const {
    return to_string(representer.kind) + "-" + to_string(aggregator.kind);
  }
};

struct TrainProgress {
  int epoch = 0;  // last completed epoch (1-based)
  double best_val_ndcg = -1.0;
  int epochs_since_improve = 0;
  uint64_t rng_state = 0, rng_inc = 0;
  std::string history_json = "[]";  // per-epoch records, no wall-clock values
};

// A representer/aggregator pair sharing one parameter set; computes
// f(p, s) = <g(h_seq), h_s>.
class RtaModel {
 public:
  RtaModel(ModelConfig cfg, const Corpus& corpus, const EmbeddingStore& store);

  const ModelConfig& config() const { return cfg_; }
  std::string name() const { return cfg_.name(); }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  Representer& representer() { return representer_; }
  const Representer& representer() const { return representer_; }
  Aggregator& aggregator() { return aggregator_; }
  const Aggregator& aggregator() const { return aggregator_; }

  // Checkpoint container ("RTAK"): config, named tensors, progress. A JSON
  // sidecar (path + ".json") carries the config and metrics history.
  void save_checkpoint(const std::string& path, const TrainProgress& progress) const;
  static std::unique_ptr<RtaModel> load_checkpoint(const std::string& path,
                                                   TrainProgress* progress = nullptr);

 private:
  RtaModel(ModelConfig cfg);  // load path

  ModelConfig cfg_;
  ParamSet params_;
  Representer representer_;
  Aggregator aggregator_;
};

}  // namespace rta
