#pragma once

#include "rta/tape.hpp"

#include <string>
#include <vector>

namespace rta {

enum class AggregatorKind { avg, cnn, gru, transformer };

std::string to_string(AggregatorKind k);
AggregatorKind aggregator_kind_from_string(const std::string& s);

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::avg;
  int dim = 128;
  int max_len = 250;  // L; transformer positional table size
  // transformer
  int layers = 2;
  int heads = 4;
  int ff_mult = 4;
  // cnn
  int cnn_layers = 2;
  int cnn_kernel = 3;  // k in [2, 5]
  // gru
  int gru_hidden = 0;  // 0 = dim; a projection maps back to dim otherwise
  uint64_t init_seed = 2;
};

// Playlist aggregation g: a (l x D) sequence of song vectors to one D-vector,
// any l in [1, L] with shared parameters. All four kinds are causal, so the
// per-position outputs double as the representations of every prefix.
class Aggregator {
 public:
  explicit Aggregator(AggregatorConfig cfg);

  void register_params(ParamSet& ps);
  void bind_params(ParamSet& ps);

  const AggregatorConfig& config() const { return cfg_; }

  // g(sequence): inference forward. Rejects empty input and l > L.
  Vec forward(const Mat& h_seq) const;

  // Training path: (l x D) matrix whose row i equals g applied to the prefix
  // ending at position i. Dropout only when `training`.
  ad::Var build_prefix_states(ad::Tape& t, ad::Var h_seq, float dropout_rate = 0.0f,
                              Rng* rng = nullptr, bool training = false) const;

 private:
  void check_input(Eigen::Index rows, Eigen::Index cols) const;

  AggregatorConfig cfg_;
  int hidden_ = 0;

  // transformer
  struct TrLayer {
    Parameter *ln1_g, *ln1_b, *wq, *wk, *wv, *wo, *bo;
    Parameter *ln2_g, *ln2_b, *w1, *b1, *w2, *b2;
  };
  Parameter* pos_ = nullptr;
  std::vector<TrLayer> tr_;

  // cnn: per layer two causal convolutions (linear path, gate path)
  struct CnnLayer {
    Parameter *wa, *ba, *wb, *bb;  // wa/wb are (kernel*D) x D
  };
  std::vector<CnnLayer> cnn_;

  // gru
  struct GruParams {
    Parameter *wz, *uz, *bz, *wr, *ur, *br, *wh, *uh, *bh;
    Parameter* proj = nullptr;  // hidden -> dim when widths differ
  };
  GruParams gru_{};
};

}  // namespace rta
