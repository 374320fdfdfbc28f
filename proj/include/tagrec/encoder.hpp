#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tagrec/autodiff.hpp"
#include "tagrec/tokenizer.hpp"

namespace tagrec {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 128;
  std::size_t ffn_dim = 512;
  std::size_t max_positions = 512;
  double dropout = 0.0;
  std::size_t vocab_size = 8192;

  // Throws ConfigError when the shape is inconsistent.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

enum class Pooling { mean, cls_first, max };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& name);

// How much of a padded sequence the encoder computes. `full` runs every
// position (PAD rows included, masked out of attention); `trimmed` drops the
// PAD suffix first. Unmasked outputs are identical either way.
enum class PaddingMode { full, trimmed };

template <typename Real>
struct BlockParams {
  Tensor<Real> ln1_gain, ln1_bias;
  Tensor<Real> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<Real> ln2_gain, ln2_bias;
  Tensor<Real> w1, b1, w2, b2;
};

template <typename Real>
struct EncoderParams {
  Tensor<Real> token_embedding;     // [vocab, d]
  Tensor<Real> position_embedding;  // [max_positions, d]
  std::vector<BlockParams<Real>> blocks;
  Tensor<Real> final_ln_gain, final_ln_bias;  // [d], applied after the last block

  // Every tensor in checkpoint order, with a stable name.
  std::vector<std::pair<std::string, Tensor<Real>*>> named_tensors(const std::string& prefix);
  std::vector<std::pair<std::string, const Tensor<Real>*>> named_tensors(
      const std::string& prefix) const;
  std::size_t parameter_count() const;
};

// Zero-valued parameters with the shapes implied by `cfg`.
template <typename Real>
EncoderParams<Real> make_encoder_params(const EncoderConfig& cfg);

// normal(0, 0.02) matrices and embeddings, zero biases, unit layer-norm gains.
void init_encoder_params(EncoderParams<float>& params, std::mt19937_64& rng);

struct BatchHidden {
  Var hidden;                        // [sum of lengths, d]
  std::vector<std::size_t> offsets;  // first row of each sequence
  std::vector<std::size_t> lengths;  // rows per sequence
};

// Hidden states of several sequences stacked row-wise. Token-wise layers run
// once over the stack; attention stays within each sequence.
template <typename Real>
BatchHidden encoder_hidden_batch(Tape<Real>& tape, const EncoderConfig& cfg,
                                 const EncoderParams<Real>& params, EncoderParams<Real>* grads,
                                 std::span<const TokenSequence* const> seqs, PaddingMode mode);

// Pooled embeddings of several sequences, one row each: [B, d].
template <typename Real>
Var encode_components(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                      EncoderParams<Real>* grads, std::span<const TokenSequence* const> seqs,
                      Pooling strategy, PaddingMode mode);

// Final hidden states [T, d] of a pre-norm transformer encoder, where T is
// the sequence length (full) or the unmasked prefix length (trimmed).
// `grads`, when non-null, receives parameter gradients on backward.
template <typename Real>
Var encoder_hidden(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                   EncoderParams<Real>* grads, const TokenSequence& seq, PaddingMode mode);

// Collapses hidden states [T, d] to one [1, d] row over the unmasked positions.
template <typename Real>
Var pool(Tape<Real>& tape, Var hidden, std::span<const std::uint8_t> mask, Pooling strategy);

// Hidden states followed by pooling; the component embedding.
template <typename Real>
Var encode_component(Tape<Real>& tape, const EncoderConfig& cfg, const EncoderParams<Real>& params,
                     EncoderParams<Real>* grads, const TokenSequence& seq,
                     Pooling strategy = Pooling::mean, PaddingMode mode = PaddingMode::full);

}  // namespace tagrec
