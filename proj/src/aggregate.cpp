#include "rta/aggregate.hpp"

#include "rta/nn.hpp"

#include <cmath>

namespace rta {

using ad::Var;

std::string to_string(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::avg: return "avg";
    case AggregatorKind::cnn: return "cnn";
    case AggregatorKind::gru: return "gru";
    case AggregatorKind::transformer: return "transformer";
  }
  return "?";
}

AggregatorKind aggregator_kind_from_string(const std::string& s) {
  if (s == "avg") return AggregatorKind::avg;
  if (s == "cnn") return AggregatorKind::cnn;
  if (s == "gru") return AggregatorKind::gru;
  if (s == "transformer") return AggregatorKind::transformer;
  throw ConfigError("unknown aggregator kind: " + s);
}

Aggregator::Aggregator(AggregatorConfig cfg) : cfg_(std::move(cfg)) {
  hidden_ = cfg_.gru_hidden > 0 ? cfg_.gru_hidden : cfg_.dim;
  if (cfg_.kind == AggregatorKind::cnn && (cfg_.cnn_kernel < 2 || cfg_.cnn_kernel > 5))
    throw ConfigError("cnn kernel size must be in [2, 5]");
  if (cfg_.kind == AggregatorKind::transformer && (cfg_.heads < 1 || cfg_.dim % cfg_.heads != 0))
    throw ConfigError("transformer head count must divide dim");
}

void Aggregator::register_params(ParamSet& ps) {
  const int d = cfg_.dim;
  Rng rng(derive_seed(cfg_.init_seed, 0xa66));
  const float sd = 1.0f / std::sqrt(static_cast<float>(d));

  switch (cfg_.kind) {
    case AggregatorKind::avg:
      break;
    case AggregatorKind::transformer: {
      pos_ = &ps.add("agg.pos", nn::gaussian_init(cfg_.max_len, d, rng, 0.02f), true);
      const int ff = cfg_.ff_mult * d;
      const float sff = 1.0f / std::sqrt(static_cast<float>(ff));
      tr_.clear();
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string base = "agg.l" + std::to_string(l) + ".";
        TrLayer layer;
        layer.ln1_g = &ps.add(base + "ln1.g", Mat::Ones(1, d), true);
        layer.ln1_b = &ps.add(base + "ln1.b", Mat::Zero(1, d), true);
        layer.wq = &ps.add(base + "attn.wq", nn::gaussian_init(d, d, rng, sd));
        layer.wk = &ps.add(base + "attn.wk", nn::gaussian_init(d, d, rng, sd));
        layer.wv = &ps.add(base + "attn.wv", nn::gaussian_init(d, d, rng, sd));
        layer.wo = &ps.add(base + "attn.wo", nn::gaussian_init(d, d, rng, sd));
        layer.bo = &ps.add(base + "attn.bo", Mat::Zero(1, d), true);
        layer.ln2_g = &ps.add(base + "ln2.g", Mat::Ones(1, d), true);
        layer.ln2_b = &ps.add(base + "ln2.b", Mat::Zero(1, d), true);
        layer.w1 = &ps.add(base + "ffn.w1", nn::gaussian_init(d, ff, rng, sd));
        layer.b1 = &ps.add(base + "ffn.b1", Mat::Zero(1, ff), true);
        layer.w2 = &ps.add(base + "ffn.w2", nn::gaussian_init(ff, d, rng, sff));
        layer.b2 = &ps.add(base + "ffn.b2", Mat::Zero(1, d), true);
        tr_.push_back(layer);
      }
      break;
    }
    case AggregatorKind::cnn: {
      const int kd = cfg_.cnn_kernel * d;
      const float skd = 1.0f / std::sqrt(static_cast<float>(kd));
      cnn_.clear();
      for (int l = 0; l < cfg_.cnn_layers; ++l) {
        std::string base = "agg.l" + std::to_string(l) + ".";
        CnnLayer layer;
        layer.wa = &ps.add(base + "conv.wa", nn::gaussian_init(kd, d, rng, skd));
        layer.ba = &ps.add(base + "conv.ba", Mat::Zero(1, d), true);
        layer.wb = &ps.add(base + "conv.wb", nn::gaussian_init(kd, d, rng, skd));
        layer.bb = &ps.add(base + "conv.bb", Mat::Zero(1, d), true);
        cnn_.push_back(layer);
      }
      break;
    }
    case AggregatorKind::gru: {
      const int h = hidden_;
      const float sh = 1.0f / std::sqrt(static_cast<float>(h));
      gru_.wz = &ps.add("agg.gru.wz", nn::gaussian_init(d, h, rng, sd));
      gru_.uz = &ps.add("agg.gru.uz", nn::gaussian_init(h, h, rng, sh));
      gru_.bz = &ps.add("agg.gru.bz", Mat::Zero(1, h), true);
      gru_.wr = &ps.add("agg.gru.wr", nn::gaussian_init(d, h, rng, sd));
      gru_.ur = &ps.add("agg.gru.ur", nn::gaussian_init(h, h, rng, sh));
      gru_.br = &ps.add("agg.gru.br", Mat::Zero(1, h), true);
      gru_.wh = &ps.add("agg.gru.wh", nn::gaussian_init(d, h, rng, sd));
      gru_.uh = &ps.add("agg.gru.uh", nn::gaussian_init(h, h, rng, sh));
      gru_.bh = &ps.add("agg.gru.bh", Mat::Zero(1, h), true);
      if (h != d) gru_.proj = &ps.add("agg.gru.proj", nn::gaussian_init(h, d, rng, sh));
      break;
    }
  }
}

void Aggregator::bind_params(ParamSet& ps) {
  switch (cfg_.kind) {
    case AggregatorKind::avg:
      break;
    case AggregatorKind::transformer: {
      pos_ = &ps.at("agg.pos");
      tr_.clear();
      for (int l = 0; l < cfg_.layers; ++l) {
        std::string base = "agg.l" + std::to_string(l) + ".";
        tr_.push_back(TrLayer{&ps.at(base + "ln1.g"), &ps.at(base + "ln1.b"),
                              &ps.at(base + "attn.wq"), &ps.at(base + "attn.wk"),
                              &ps.at(base + "attn.wv"), &ps.at(base + "attn.wo"),
                              &ps.at(base + "attn.bo"), &ps.at(base + "ln2.g"),
                              &ps.at(base + "ln2.b"), &ps.at(base + "ffn.w1"),
                              &ps.at(base + "ffn.b1"), &ps.at(base + "ffn.w2"),
                              &ps.at(base + "ffn.b2")});
      }
      break;
    }
    case AggregatorKind::cnn: {
      cnn_.clear();
      for (int l = 0; l < cfg_.cnn_layers; ++l) {
        std::string base = "agg.l" + std::to_string(l) + ".";
        cnn_.push_back(CnnLayer{&ps.at(base + "conv.wa"), &ps.at(base + "conv.ba"),
                                &ps.at(base + "conv.wb"), &ps.at(base + "conv.bb")});
      }
      break;
    }
    case AggregatorKind::gru: {
      gru_.wz = &ps.at("agg.gru.wz");
      gru_.uz = &ps.at("agg.gru.uz");
      gru_.bz = &ps.at("agg.gru.bz");
      gru_.wr = &ps.at("agg.gru.wr");
      gru_.ur = &ps.at("agg.gru.ur");
      gru_.br = &ps.at("agg.gru.br");
      gru_.wh = &ps.at("agg.gru.wh");
      gru_.uh = &ps.at("agg.gru.uh");
      gru_.bh = &ps.at("agg.gru.bh");
      gru_.proj = ps.contains("agg.gru.proj") ? &ps.at("agg.gru.proj") : nullptr;
      break;
    }
  }
}

void Aggregator::check_input(Eigen::Index rows, Eigen::Index cols) const {
  if (rows < 1) throw DomainError("aggregator: empty sequence");
  if (cols != cfg_.dim)
    throw ShapeError("aggregator: expected dim " + std::to_string(cfg_.dim) + ", got " +
                     std::to_string(cols));
  if (rows > cfg_.max_len)
    throw DomainError("aggregator: sequence length " + std::to_string(rows) +
                      " exceeds max length " + std::to_string(cfg_.max_len));
}

// --- inference --------------------------------------------------------------

namespace {

Mat causal_conv_infer(const Mat& x, const Mat& w, const RowVec& b, int kernel) {
  const Eigen::Index d_in = x.cols();
  Mat out = Mat::Zero(x.rows(), w.cols());
  out.rowwise() += b;
  for (int j = 0; j < kernel; ++j) {
    const Eigen::Index n = x.rows() - j;
    if (n <= 0) break;
    out.bottomRows(n).noalias() += x.topRows(n) * w.middleRows(j * d_in, d_in);
  }
  return out;
}

Mat sigmoid_infer(const Mat& x) {
  return x.unaryExpr([](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}

}  // namespace

Vec Aggregator::forward(const Mat& h_seq) const {
  check_input(h_seq.rows(), h_seq.cols());
  const Eigen::Index l = h_seq.rows();

  switch (cfg_.kind) {
    case AggregatorKind::avg:
      return h_seq.colwise().mean().transpose();

    case AggregatorKind::cnn: {
      Mat x = h_seq;
      for (const auto& layer : cnn_) {
        Mat a = causal_conv_infer(x, layer.wa->value, layer.ba->value.row(0), cfg_.cnn_kernel);
        Mat b = causal_conv_infer(x, layer.wb->value, layer.bb->value.row(0), cfg_.cnn_kernel);
        x = a.cwiseProduct(sigmoid_infer(b));
      }
      return x.row(l - 1).transpose();
    }

    case AggregatorKind::gru: {
      RowVec h = RowVec::Zero(hidden_);
      Mat xz = h_seq * gru_.wz->value;
      Mat xr = h_seq * gru_.wr->value;
      Mat xh = h_seq * gru_.wh->value;
      for (Eigen::Index t = 0; t < l; ++t) {
        RowVec z = sigmoid_infer(xz.row(t) + h * gru_.uz->value + gru_.bz->value.row(0));
        RowVec r = sigmoid_infer(xr.row(t) + h * gru_.ur->value + gru_.br->value.row(0));
        RowVec c = (xh.row(t) + r.cwiseProduct(h) * gru_.uh->value + gru_.bh->value.row(0))
                       .array()
                       .tanh()
                       .matrix();
        h = (RowVec::Ones(hidden_) - z).cwiseProduct(c) + z.cwiseProduct(h);
      }
      if (gru_.proj) return (h * gru_.proj->value).transpose();
      return h.transpose();
    }

    case AggregatorKind::transformer: {
      Mat x = h_seq + pos_->value.topRows(l);
      for (const auto& layer : tr_) {
        Mat n1 = nn::layer_norm_infer(x, layer.ln1_g->value.row(0), layer.ln1_b->value.row(0));
        x += nn::multi_head_attention_infer(n1, layer.wq->value, layer.wk->value,
                                            layer.wv->value, layer.wo->value,
                                            layer.bo->value.row(0), cfg_.heads, /*causal=*/true);
        Mat n2 = nn::layer_norm_infer(x, layer.ln2_g->value.row(0), layer.ln2_b->value.row(0));
        Mat f = (n2 * layer.w1->value).rowwise() + layer.b1->value.row(0);
        f = f.unaryExpr(&nn::gelu_scalar);
        x += (f * layer.w2->value).rowwise() + layer.b2->value.row(0);
      }
      return x.row(l - 1).transpose();
    }
  }
  throw ConfigError("aggregator: bad kind");
}

// --- training ----------------------------------------------------------------

Var Aggregator::build_prefix_states(ad::Tape& t, Var h_seq, float dropout_rate, Rng* rng,
                                    bool training) const {
  check_input(h_seq.rows(), h_seq.cols());
  const Eigen::Index l = h_seq.rows();
  const int d = cfg_.dim;

  switch (cfg_.kind) {
    case AggregatorKind::avg:
      return ad::prefix_mean(h_seq);

    case AggregatorKind::cnn: {
      Var x = h_seq;
      for (const auto& layer : cnn_) {
        Var wa = t.leaf(*layer.wa);
        Var wb = t.leaf(*layer.wb);
        Var a = ad::add_rowvec(ad::matmul(x, ad::slice_rows(wa, 0, d)), t.leaf(*layer.ba));
        Var b = ad::add_rowvec(ad::matmul(x, ad::slice_rows(wb, 0, d)), t.leaf(*layer.bb));
        for (int j = 1; j < cfg_.cnn_kernel; ++j) {
          Var shifted = ad::shift_rows_down(x, j);
          a = ad::add(a, ad::matmul(shifted, ad::slice_rows(wa, j * d, d)));
          b = ad::add(b, ad::matmul(shifted, ad::slice_rows(wb, j * d, d)));
        }
        x = ad::cmul(a, ad::sigmoid(b));
        if (training && rng) x = ad::dropout(x, dropout_rate, *rng, training);
      }
      return x;
    }

    case AggregatorKind::gru: {
      Var xz = ad::add_rowvec(ad::matmul(h_seq, t.leaf(*gru_.wz)), t.leaf(*gru_.bz));
      Var xr = ad::add_rowvec(ad::matmul(h_seq, t.leaf(*gru_.wr)), t.leaf(*gru_.br));
      Var xh = ad::add_rowvec(ad::matmul(h_seq, t.leaf(*gru_.wh)), t.leaf(*gru_.bh));
      Var uz = t.leaf(*gru_.uz);
      Var ur = t.leaf(*gru_.ur);
      Var uh = t.leaf(*gru_.uh);
      Var ones = t.constant(Mat::Ones(1, hidden_));
      Var h = t.constant(Mat::Zero(1, hidden_));
      std::vector<Var> states;
      states.reserve(static_cast<size_t>(l));
      for (Eigen::Index step = 0; step < l; ++step) {
        Var z = ad::sigmoid(ad::add(ad::slice_rows(xz, step, 1), ad::matmul(h, uz)));
        Var r = ad::sigmoid(ad::add(ad::slice_rows(xr, step, 1), ad::matmul(h, ur)));
        Var c = ad::tanh_fn(ad::add(ad::slice_rows(xh, step, 1), ad::matmul(ad::cmul(r, h), uh)));
        h = ad::add(ad::cmul(ad::sub(ones, z), c), ad::cmul(z, h));
        states.push_back(h);
      }
      Var out = states.size() == 1 ? states[0] : ad::concat_rows(states);
      if (gru_.proj) out = ad::matmul(out, t.leaf(*gru_.proj));
      if (training && rng) out = ad::dropout(out, dropout_rate, *rng, training);
      return out;
    }

    case AggregatorKind::transformer: {
      std::vector<int> pos_ids(static_cast<size_t>(l));
      for (Eigen::Index i = 0; i < l; ++i) pos_ids[static_cast<size_t>(i)] = static_cast<int>(i);
      Var x = ad::add(h_seq, t.gather(*pos_, pos_ids));
      for (const auto& layer : tr_) {
        Var n1 = ad::layer_norm_rows(x, t.leaf(*layer.ln1_g), t.leaf(*layer.ln1_b));
        Var attn = nn::multi_head_attention(t, n1, t.leaf(*layer.wq), t.leaf(*layer.wk),
                                            t.leaf(*layer.wv), t.leaf(*layer.wo),
                                            t.leaf(*layer.bo), cfg_.heads, /*causal=*/true);
        if (training && rng) attn = ad::dropout(attn, dropout_rate, *rng, training);
        x = ad::add(x, attn);
        Var n2 = ad::layer_norm_rows(x, t.leaf(*layer.ln2_g), t.leaf(*layer.ln2_b));
        Var f = ad::gelu(ad::add_rowvec(ad::matmul(n2, t.leaf(*layer.w1)), t.leaf(*layer.b1)));
        f = ad::add_rowvec(ad::matmul(f, t.leaf(*layer.w2)), t.leaf(*layer.b2));
        if (training && rng) f = ad::dropout(f, dropout_rate, *rng, training);
        x = ad::add(x, f);
      }
      return x;
    }
  }
  throw ConfigError("aggregator: bad kind");
}

}  // namespace rta
