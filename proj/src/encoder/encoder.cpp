#include "tagrec/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>

#include "tagrec/errors.hpp"
#include "tagrec/ops.hpp"

namespace tagrec {

void EncoderConfig::validate() const {
  if (layers < 1) throw ConfigError("encoder: layers must be >= 1");
  if (heads < 1 || model_dim < 1 || model_dim % heads != 0) {
    throw ConfigError("encoder: model_dim " + std::to_string(model_dim) +
                      " must be a positive multiple of heads " + std::to_string(heads));
  }
  if (ffn_dim < 1) throw ConfigError("encoder: ffn_dim must be >= 1");
  if (max_positions < 2) throw ConfigError("encoder: max_positions must be >= 2");
  if (vocab_size < 1) throw ConfigError("encoder: vocab_size must be >= 1");
  if (dropout != 0.0) throw ConfigError("encoder: only dropout 0 is supported");
}

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::mean: return "mean";
    case Pooling::cls_first: return "cls_first";
    case Pooling::max: return "max";
  }
  return "mean";
}

Pooling pooling_from_string(const std::string& name) {
  if (name == "mean") return Pooling::mean;
  if (name == "cls_first") return Pooling::cls_first;
  if (name == "max") return Pooling::max;
  throw ConfigError("unknown pooling strategy '" + name + "'");
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> EncoderParams<Real>::named_tensors(
    const std::string& prefix) {
  std::vector<std::pair<std::string, Tensor<Real>*>> out;
  out.emplace_back(prefix + "token_embedding", &token_embedding);
  out.emplace_back(prefix + "position_embedding", &position_embedding);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    auto& b = blocks[l];
    const std::string p = prefix + "block" + std::to_string(l) + ".";
    for (auto [name, tensor] : std::initializer_list<std::pair<const char*, Tensor<Real>*>>{
             {"ln1_gain", &b.ln1_gain}, {"ln1_bias", &b.ln1_bias}, {"wq", &b.wq},
             {"bq", &b.bq},             {"wk", &b.wk},             {"bk", &b.bk},
             {"wv", &b.wv},             {"bv", &b.bv},             {"wo", &b.wo},
             {"bo", &b.bo},             {"ln2_gain", &b.ln2_gain}, {"ln2_bias", &b.ln2_bias},
             {"w1", &b.w1},             {"b1", &b.b1},             {"w2", &b.w2},
             {"b2", &b.b2}}) {
      out.emplace_back(p + name, tensor);
    }
  }
  out.emplace_back(prefix + "final_ln_gain", &final_ln_gain);
  out.emplace_back(prefix + "final_ln_bias", &final_ln_bias);
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real>*>> EncoderParams<Real>::named_tensors(
    const std::string& prefix) const {
  auto mutable_view = const_cast<EncoderParams*>(this)->named_tensors(prefix);
  return {mutable_view.begin(), mutable_view.end()};
}

template <typename Real>
std::size_t EncoderParams<Real>::parameter_count() const {
  std::size_t n = token_embedding.size() + position_embedding.size() + final_ln_gain.size() +
                  final_ln_bias.size();
  for (const auto& b : blocks) {
    for (const Tensor<Real>* t : {&b.ln1_gain, &b.ln1_bias, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv,
                                  &b.bv, &b.wo, &b.bo, &b.ln2_gain, &b.ln2_bias, &b.w1, &b.b1,
                                  &b.w2, &b.b2}) {
      n += t->size();
    }
  }
  return n;
}

template <typename Real>
EncoderParams<Real> make_encoder_params(const EncoderConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.model_dim, f = cfg.ffn_dim;
  EncoderParams<Real> p;
  p.token_embedding = Tensor<Real>({cfg.vocab_size, d});
  p.position_embedding = Tensor<Real>({cfg.max_positions, d});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    BlockParams<Real> b;
    b.ln1_gain = Tensor<Real>({d});
    b.ln1_bias = Tensor<Real>({d});
    b.wq = Tensor<Real>({d, d});
    b.bq = Tensor<Real>({d});
    b.wk = Tensor<Real>({d, d});
    b.bk = Tensor<Real>({d});
    b.wv = Tensor<Real>({d, d});
    b.bv = Tensor<Real>({d});
    b.wo = Tensor<Real>({d, d});
    b.bo = Tensor<Real>({d});
    b.ln2_gain = Tensor<Real>({d});
    b.ln2_bias = Tensor<Real>({d});
    b.w1 = Tensor<Real>({d, f});
    b.b1 = Tensor<Real>({f});
    b.w2 = Tensor<Real>({f, d});
    b.b2 = Tensor<Real>({d});
    p.blocks.push_back(std::move(b));
  }
  p.final_ln_gain = Tensor<Real>({d});
  p.final_ln_bias = Tensor<Real>({d});
  return p;
}

void init_encoder_params(EncoderParams<float>& params, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 0.02f);
  auto fill_normal = [&](Tensor<float>& t) {
    for (auto& v : t.data) v = normal(rng);
  };
  fill_normal(params.token_embedding);
  fill_normal(params.position_embedding);
  for (auto& b : params.blocks) {
    std::fill(b.ln1_gain.data.begin(), b.ln1_gain.data.end(), 1.0f);
    std::fill(b.ln2_gain.data.begin(), b.ln2_gain.data.end(), 1.0f);
    for (Tensor<float>* w : {&b.wq, &b.wk, &b.wv, &b.wo, &b.w1, &b.w2}) fill_normal(*w);
    for (Tensor<float>* z : {&b.ln1_bias, &b.ln2_bias, &b.bq, &b.bk, &b.bv, &b.bo, &b.b1, &b.b2}) {
      std::fill(z->data.begin(), z->data.end(), 0.0f);
    }
  }
  std::fill(params.final_ln_gain.data.begin(), params.final_ln_gain.data.end(), 1.0f);
  std::fill(params.final_ln_bias.data.begin(), params.final_ln_bias.data.end(), 0.0f);
}

template <typename Real>
BatchHidden encoder_hidden_batch(Tape<Real>& tape, const EncoderConfig& cfg,
                                 const EncoderParams<Real>& params, EncoderParams<Real>* grads,
                                 std::span<const TokenSequence* const> seqs, PaddingMode mode) {
  if (seqs.empty()) throw UsageError("encoder: empty batch");
  BatchHidden out;
  std::vector<TokenId> ids;
  std::vector<TokenId> positions;
  std::vector<std::optional<Var>> key_masks;
  for (const TokenSequence* seq : seqs) {
    if (seq->length() > cfg.max_positions) {
      throw ConfigError("sequence of length " + std::to_string(seq->length()) +
                        " exceeds max_positions " + std::to_string(cfg.max_positions));
    }
    if (seq->mask.size() != seq->ids.size()) throw UsageError("token sequence: ids/mask length differ");
    const std::size_t real = seq->real_length();
    const std::size_t len = mode == PaddingMode::trimmed ? real : seq->length();
    if (len == 0) throw UsageError("encoder: empty sequence");
    out.offsets.push_back(ids.size());
    out.lengths.push_back(len);
    for (std::size_t i = 0; i < len; ++i) {
      ids.push_back(seq->ids[i]);
      positions.push_back(static_cast<TokenId>(i));
    }
    if (len > real) {
      Tensor<Real> row({1, len});
      for (std::size_t j = 0; j < len; ++j) {
        row.data[j] = seq->mask[j] != 0 ? Real(0) : -std::numeric_limits<Real>::infinity();
      }
      key_masks.emplace_back(tape.constant(std::move(row)));
    } else {
      key_masks.emplace_back();
    }
  }

  auto bind = [&](const Tensor<Real>& value, Tensor<Real> EncoderParams<Real>::*member) {
    return tape.param(value, grads != nullptr ? &(grads->*member) : nullptr);
  };
  auto bind_block = [&](std::size_t l, const Tensor<Real>& value,
                        Tensor<Real> BlockParams<Real>::*member) {
    return tape.param(value, grads != nullptr ? &(grads->blocks[l].*member) : nullptr);
  };

  // All sequences share one [sum T, d] matrix; only attention looks across
  // rows, and it runs per sequence.
  Var h = ops::add(
      tape,
      ops::embedding(tape, bind(params.token_embedding, &EncoderParams<Real>::token_embedding),
                     std::span<const TokenId>(ids)),
      ops::embedding(tape, bind(params.position_embedding, &EncoderParams<Real>::position_embedding),
                     std::span<const TokenId>(positions)));

  const std::size_t d = cfg.model_dim, head_dim = d / cfg.heads;
  const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(head_dim));
  using B = BlockParams<Real>;
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    const auto& p = params.blocks[l];
    auto linear = [&](Var x, const Tensor<Real>& w, Tensor<Real> B::*wm, const Tensor<Real>& b,
                      Tensor<Real> B::*bm) {
      return ops::add(tape, ops::matmul(tape, x, bind_block(l, w, wm)), bind_block(l, b, bm));
    };

    const Var a = ops::layer_norm(tape, h, bind_block(l, p.ln1_gain, &B::ln1_gain),
                                  bind_block(l, p.ln1_bias, &B::ln1_bias));
    const Var q = linear(a, p.wq, &B::wq, p.bq, &B::bq);
    const Var k = linear(a, p.wk, &B::wk, p.bk, &B::bk);
    const Var v = linear(a, p.wv, &B::wv, p.bv, &B::bv);
    std::vector<Var> segments;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const std::size_t lo_row = out.offsets[s], hi_row = lo_row + out.lengths[s];
      const bool whole = seqs.size() == 1;
      const Var qs = whole ? q : ops::slice_rows(tape, q, lo_row, hi_row);
      const Var ks = whole ? k : ops::slice_rows(tape, k, lo_row, hi_row);
      const Var vs = whole ? v : ops::slice_rows(tape, v, lo_row, hi_row);
      std::vector<Var> heads;
      for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
        const std::size_t lo = hd * head_dim, hi = lo + head_dim;
        Var scores = ops::scale(tape,
                                ops::matmul_bt(tape, ops::slice_cols(tape, qs, lo, hi),
                                               ops::slice_cols(tape, ks, lo, hi)),
                                inv_sqrt);
        if (key_masks[s]) scores = ops::add(tape, scores, *key_masks[s]);
        const Var weights = ops::softmax_rows(tape, scores);
        heads.push_back(ops::matmul(tape, weights, ops::slice_cols(tape, vs, lo, hi)));
      }
      segments.push_back(ops::concat_cols(tape, heads));
    }
    const Var attended = linear(ops::concat_rows(tape, segments), p.wo, &B::wo, p.bo, &B::bo);
    h = ops::add(tape, h, attended);

    const Var n2 = ops::layer_norm(tape, h, bind_block(l, p.ln2_gain, &B::ln2_gain),
                                   bind_block(l, p.ln2_bias, &B::ln2_bias));
    const Var ff = linear(ops::gelu(tape, linear(n2, p.w1, &B::w1, p.b1, &B::b1)), p.w2, &B::w2,
                          p.b2, &B::b2);
    h = ops::add(tape, h, ff);
  }
  out.hidden = ops::layer_norm(tape, h, bind(params.final_ln_gain, &EncoderParams<Real>::final_ln_gain),
                               bind(params.final_ln_bias, &EncoderParams<Real>::final_ln_bias));
  return out;
}

template <typename Real>
Var encoder_hidden(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                   EncoderParams<Real>* grads, const TokenSequence& seq, PaddingMode mode) {
  const TokenSequence* one[] = {&seq};
  return encoder_hidden_batch(tape, cfg, params, grads, std::span<const TokenSequence* const>(one), mode)
      .hidden;
}

template <typename Real>
Var pool(Tape<Real>& tape, Var hidden, std::span<const std::uint8_t> mask, Pooling strategy) {
  if (std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; })) {
    throw UsageError("pool: no unmasked positions");
  }
  switch (strategy) {
    case Pooling::mean: return ops::masked_mean(tape, hidden, mask);
    case Pooling::max: return ops::masked_max(tape, hidden, mask);
    case Pooling::cls_first: return ops::slice_rows(tape, hidden, 0, 1);
  }
  throw UsageError("pool: unknown strategy");
}

template <typename Real>
Var encode_components(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                      EncoderParams<Real>* grads, std::span<const TokenSequence* const> seqs,
                      Pooling strategy, PaddingMode mode) {
  const BatchHidden batch = encoder_hidden_batch(tape, cfg, params, grads, seqs, mode);
  if (seqs.size() == 1) {
    return pool(tape, batch.hidden, std::span<const std::uint8_t>(seqs[0]->mask.data(), batch.lengths[0]),
                strategy);
  }
  std::vector<Var> rows;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const Var hidden =
        ops::slice_rows(tape, batch.hidden, batch.offsets[s], batch.offsets[s] + batch.lengths[s]);
    rows.push_back(
        pool(tape, hidden, std::span<const std::uint8_t>(seqs[s]->mask.data(), batch.lengths[s]), strategy));
  }
  return ops::concat_rows(tape, rows);
}

template <typename Real>
Var encode_component(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                     EncoderParams<Real>* grads, const TokenSequence& seq, Pooling strategy,
                     PaddingMode mode) {
  const TokenSequence* one[] = {&seq};
  return encode_components(tape, cfg, params, grads, std::span<const TokenSequence* const>(one),
                           strategy, mode);
}

#define TAGREC_INSTANTIATE_ENCODER(Real)                                                        \
  template struct EncoderParams<Real>;                                                          \
  template EncoderParams<Real> make_encoder_params<Real>(const EncoderConfig&);                 \
  template Var encoder_hidden<Real>(Tape<Real>&, const EncoderConfig&, const EncoderParams<Real>&, \
                                    EncoderParams<Real>*, const TokenSequence&, PaddingMode);   \
  template BatchHidden encoder_hidden_batch<Real>(Tape<Real>&, const EncoderConfig&,           \
                                                 const EncoderParams<Real>&, EncoderParams<Real>*, \
                                                 std::span<const TokenSequence* const>, PaddingMode); \
  template Var encode_components<Real>(Tape<Real>&, const EncoderConfig&,                       \
                                       const EncoderParams<Real>&, EncoderParams<Real>*,        \
                                       std::span<const TokenSequence* const>, Pooling, PaddingMode); \
  template Var pool<Real>(Tape<Real>&, Var, std::span<const std::uint8_t>, Pooling);            \
  template Var encode_component<Real>(Tape<Real>&, const EncoderConfig&,                        \
                                      const EncoderParams<Real>&, EncoderParams<Real>*,         \
                                      const TokenSequence&, Pooling, PaddingMode);

TAGREC_INSTANTIATE_ENCODER(float)
TAGREC_INSTANTIATE_ENCODER(double)

#undef TAGREC_INSTANTIATE_ENCODER

}  // namespace tagrec
