#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tagrec/encoder.hpp"
#include "tagrec/ingest.hpp"
#include "tagrec/tag_vocab.hpp"
#include "tagrec/tokenizer.hpp"

namespace tagrec {

enum class Component { title = 0, description = 1, code = 2 };

inline constexpr std::array<Component, 3> kAllComponents = {Component::title, Component::description,
                                                            Component::code};

std::string to_string(Component c);
Component component_from_string(const std::string& name);

struct ModelConfig {
  // Always held in (title, description, code) order; see normalize().
  std::vector<Component> components = {Component::title, Component::description, Component::code};
  EncoderConfig encoder;
  bool share_weights = false;
  std::size_t num_tags = 1;
  // Per-component token budget including CLS and SEP.
  std::array<std::size_t, 3> max_len = {100, 512, 512};
  Truncation truncation = Truncation::head_only;
  Pooling pooling = Pooling::mean;

  // Sorts and deduplicates components, then validates every invariant.
  void normalize();
  std::size_t max_len_for(Component c) const { return max_len[static_cast<std::size_t>(c)]; }
  bool uses(Component c) const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

// Token sequences for the components a model consumes; absent ones stay empty.
struct EncodedPost {
  std::array<std::optional<TokenSequence>, 3> components;

  const std::optional<TokenSequence>& get(Component c) const {
    return components[static_cast<std::size_t>(c)];
  }
};

EncodedPost encode_post(const Tokenizer& tokenizer, const DecomposedPost& post,
                        const ModelConfig& config);
EncodedPost encode_post(const Tokenizer& tokenizer, const std::string& title,
                        const std::string& description, const std::string& code,
                        const ModelConfig& config);

template <typename Real>
struct ModelParams {
  std::vector<EncoderParams<Real>> encoders;  // one, or one per component
  Tensor<Real> classifier_weight;             // [components * d, num_tags]
  Tensor<Real> classifier_bias;               // [num_tags]

  // Checkpoint order: encoders in component order, then the classifier.
  std::vector<std::pair<std::string, Tensor<Real>*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor<Real>*>> named_tensors() const;
  std::size_t parameter_count() const;
};

template <typename Real>
ModelParams<Real> make_model_params(const ModelConfig& config);

template <typename To, typename From>
ModelParams<To> params_cast(const ModelParams<From>& from) {
  ModelParams<To> to;
  to.encoders.resize(from.encoders.size());
  for (std::size_t e = 0; e < from.encoders.size(); ++e) {
    to.encoders[e].blocks.resize(from.encoders[e].blocks.size());
  }
  auto dst_tensors = to.named_tensors();
  const auto src_tensors = from.named_tensors();
  for (std::size_t i = 0; i < src_tensors.size(); ++i) {
    *dst_tensors[i].second = tensor_cast<To>(*src_tensors[i].second);
  }
  return to;
}

// Per-tag probabilities [1, num_tags]: sigmoid of a linear map over the
// concatenated component embeddings. Rejects posts whose encoded components
// differ from config.components.
template <typename Real>
Var forward(Tape<Real>& tape, const ModelConfig& config, const ModelParams<Real>& params,
            ModelParams<Real>* grads, const EncodedPost& post,
            PaddingMode mode = PaddingMode::trimmed);

// Batched form: [posts.size(), num_tags], one row per post.
template <typename Real>
Var forward_batch(Tape<Real>& tape, const ModelConfig& config, const ModelParams<Real>& params,
                  ModelParams<Real>* grads, std::span<const EncodedPost* const> posts,
                  PaddingMode mode = PaddingMode::trimmed);

struct Prediction {
  std::vector<float> probabilities;
  std::vector<std::size_t> ranked;  // by descending probability, ties by index
};

// Ranks probabilities; stable so equal values keep ascending tag order.
Prediction make_prediction(std::vector<float> probabilities);

class TagModel {
 public:
  TagModel(ModelConfig config, TagVocabulary vocab, std::uint64_t seed);
  TagModel(ModelConfig config, TagVocabulary vocab, ModelParams<float> params);

  const ModelConfig& config() const noexcept { return config_; }
  const TagVocabulary& vocab() const noexcept { return vocab_; }
  ModelParams<float>& params() noexcept { return params_; }
  const ModelParams<float>& params() const noexcept { return params_; }

  Prediction predict(const EncodedPost& post, PaddingMode mode = PaddingMode::trimmed) const;

 private:
  ModelConfig config_;
  TagVocabulary vocab_;
  ModelParams<float> params_;
};

// Names of the k best tags. Requires 1 <= k <= min(5, L).
std::vector<std::string> predict_top_k(const Prediction& prediction, std::size_t k,
                                       const TagVocabulary& vocab);

}  // namespace tagrec
