#include "tagrec/model.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "tagrec/errors.hpp"
#include "tagrec/ops.hpp"

namespace tagrec {

std::string to_string(Component c) {
  switch (c) {
    case Component::title: return "title";
    case Component::description: return "description";
    case Component::code: return "code";
  }
  return "title";
}

Component component_from_string(const std::string& name) {
  if (name == "title") return Component::title;
  if (name == "description") return Component::description;
  if (name == "code") return Component::code;
  throw ConfigError("unknown component '" + name + "'");
}

void ModelConfig::normalize() {
  std::sort(components.begin(), components.end());
  components.erase(std::unique(components.begin(), components.end()), components.end());
  if (components.empty()) throw ConfigError("model: at least one component is required");
  if (num_tags < 1) throw ConfigError("model: num_tags must be >= 1");
  encoder.validate();
  for (const Component c : components) {
    const std::size_t len = max_len_for(c);
    if (len < 2) throw ConfigError("model: max_len for " + to_string(c) + " must be >= 2");
    if (len > encoder.max_positions) {
      throw ConfigError("model: max_len " + std::to_string(len) + " for " + to_string(c) +
                        " exceeds max_positions " + std::to_string(encoder.max_positions));
    }
  }
}

bool ModelConfig::uses(Component c) const {
  return std::find(components.begin(), components.end(), c) != components.end();
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  auto comps = nlohmann::ordered_json::array();
  for (const Component c : components) comps.push_back(to_string(c));
  j["components"] = std::move(comps);
  j["encoder"] = {{"layers", encoder.layers},         {"heads", encoder.heads},
                  {"model_dim", encoder.model_dim},   {"ffn_dim", encoder.ffn_dim},
                  {"max_positions", encoder.max_positions}, {"dropout", encoder.dropout},
                  {"vocab_size", encoder.vocab_size}};
  j["share_weights"] = share_weights;
  j["num_tags"] = num_tags;
  j["max_len"] = {{"title", max_len[0]}, {"description", max_len[1]}, {"code", max_len[2]}};
  j["truncation"] = to_string(truncation);
  j["pooling"] = to_string(pooling);
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig c;
    c.components.clear();
    for (const auto& name : j.at("components")) c.components.push_back(component_from_string(name));
    const auto& e = j.at("encoder");
    c.encoder.layers = e.at("layers");
    c.encoder.heads = e.at("heads");
    c.encoder.model_dim = e.at("model_dim");
    c.encoder.ffn_dim = e.at("ffn_dim");
    c.encoder.max_positions = e.at("max_positions");
    c.encoder.dropout = e.at("dropout");
    c.encoder.vocab_size = e.at("vocab_size");
    c.share_weights = j.at("share_weights");
    c.num_tags = j.at("num_tags");
    const auto& ml = j.at("max_len");
    c.max_len = {ml.at("title").get<std::size_t>(), ml.at("description").get<std::size_t>(),
                 ml.at("code").get<std::size_t>()};
    c.truncation = truncation_from_string(j.at("truncation"));
    c.pooling = pooling_from_string(j.at("pooling"));
    c.normalize();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("model config: ") + e.what());
  }
}

EncodedPost encode_post(const Tokenizer& tokenizer, const std::string& title,
                        const std::string& description, const std::string& code,
                        const ModelConfig& config) {
  if (tokenizer.vocab_size() > config.encoder.vocab_size) {
    throw ConfigError("tokenizer has " + std::to_string(tokenizer.vocab_size()) +
                      " ids but the encoder embeds only " + std::to_string(config.encoder.vocab_size));
  }
  const std::array<const std::string*, 3> texts = {&title, &description, &code};
  EncodedPost out;
  for (const Component c : config.components) {
    const auto i = static_cast<std::size_t>(c);
    out.components[i] = tokenizer.encode(*texts[i], config.max_len_for(c), config.truncation);
  }
  return out;
}

EncodedPost encode_post(const Tokenizer& tokenizer, const DecomposedPost& post,
                        const ModelConfig& config) {
  return encode_post(tokenizer, post.title, post.description, post.code, config);
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>*>> ModelParams<Real>::named_tensors() {
  std::vector<std::pair<std::string, Tensor<Real>*>> out;
  for (std::size_t e = 0; e < encoders.size(); ++e) {
    auto part = encoders[e].named_tensors("encoder" + std::to_string(e) + ".");
    out.insert(out.end(), part.begin(), part.end());
  }
  out.emplace_back("classifier.weight", &classifier_weight);
  out.emplace_back("classifier.bias", &classifier_bias);
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real>*>> ModelParams<Real>::named_tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->named_tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = classifier_weight.size() + classifier_bias.size();
  for (const auto& e : encoders) n += e.parameter_count();
  return n;
}

template <typename Real>
ModelParams<Real> make_model_params(const ModelConfig& config) {
  ModelParams<Real> p;
  const std::size_t encoders = config.share_weights ? 1 : config.components.size();
  for (std::size_t e = 0; e < encoders; ++e) {
    p.encoders.push_back(make_encoder_params<Real>(config.encoder));
  }
  p.classifier_weight =
      Tensor<Real>({config.components.size() * config.encoder.model_dim, config.num_tags});
  p.classifier_bias = Tensor<Real>({config.num_tags});
  return p;
}

template <typename Real>
Var forward_batch(Tape<Real>& tape, const ModelConfig& config, const ModelParams<Real>& params,
                  ModelParams<Real>* grads, std::span<const EncodedPost* const> posts,
                  PaddingMode mode) {
  if (posts.empty()) throw UsageError("forward: empty batch");
  for (const EncodedPost* post : posts) {
    for (const Component c : kAllComponents) {
      if (post->get(c).has_value() != config.uses(c)) {
        throw UsageError("forward: component '" + to_string(c) + "' is " +
                         (config.uses(c) ? "required but missing" : "not part of this model"));
      }
    }
  }
  std::vector<Var> parts;
  std::vector<const TokenSequence*> seqs(posts.size());
  for (std::size_t i = 0; i < config.components.size(); ++i) {
    const std::size_t e = config.share_weights ? 0 : i;
    for (std::size_t b = 0; b < posts.size(); ++b) seqs[b] = &*posts[b]->get(config.components[i]);
    parts.push_back(encode_components(tape, config.encoder, params.encoders[e],
                                      grads != nullptr ? &grads->encoders[e] : nullptr,
                                      std::span<const TokenSequence* const>(seqs), config.pooling,
                                      mode));
  }
  const Var features = parts.size() == 1 ? parts[0] : ops::concat_cols(tape, parts);
  const Var weight =
      tape.param(params.classifier_weight, grads != nullptr ? &grads->classifier_weight : nullptr);
  const Var bias =
      tape.param(params.classifier_bias, grads != nullptr ? &grads->classifier_bias : nullptr);
  return ops::sigmoid(tape, ops::add(tape, ops::matmul(tape, features, weight), bias));
}

template <typename Real>
Var forward(Tape<Real>& tape, const ModelConfig& config, const ModelParams<Real>& params,
            ModelParams<Real>* grads, const EncodedPost& post, PaddingMode mode) {
  const EncodedPost* one[] = {&post};
  return forward_batch(tape, config, params, grads, std::span<const EncodedPost* const>(one), mode);
}

Prediction make_prediction(std::vector<float> probabilities) {
  Prediction p;
  p.ranked.resize(probabilities.size());
  std::iota(p.ranked.begin(), p.ranked.end(), std::size_t{0});
  std::stable_sort(p.ranked.begin(), p.ranked.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] > probabilities[b];
  });
  p.probabilities = std::move(probabilities);
  return p;
}

TagModel::TagModel(ModelConfig config, TagVocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.normalize();
  if (config_.num_tags != vocab_.size()) {
    throw ConfigError("model: num_tags " + std::to_string(config_.num_tags) +
                      " differs from vocabulary size " + std::to_string(vocab_.size()));
  }
  params_ = make_model_params<float>(config_);
  std::mt19937_64 rng(seed);
  for (auto& e : params_.encoders) init_encoder_params(e, rng);
  std::normal_distribution<float> normal(0.0f, 0.02f);
  for (auto& w : params_.classifier_weight.data) w = normal(rng);
}

TagModel::TagModel(ModelConfig config, TagVocabulary vocab, ModelParams<float> params)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.normalize();
  if (config_.num_tags != vocab_.size()) {
    throw ConfigError("model: num_tags differs from vocabulary size");
  }
  auto reference = make_model_params<float>(config_);
  auto expected = reference.named_tensors();
  auto actual = params_.named_tensors();
  if (expected.size() != actual.size()) throw ConfigError("model: parameter layout mismatch");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].second->shape != actual[i].second->shape) {
      throw ConfigError("model: parameter " + expected[i].first + " has shape " +
                        shape_string(actual[i].second->shape) + ", expected " +
                        shape_string(expected[i].second->shape));
    }
  }
}

Prediction TagModel::predict(const EncodedPost& post, PaddingMode mode) const {
  Tape<float> tape(false);
  const Var probs = forward<float>(tape, config_, params_, nullptr, post, mode);
  return make_prediction(tape.value(probs).data);
}

std::vector<std::string> predict_top_k(const Prediction& prediction, std::size_t k,
                                       const TagVocabulary& vocab) {
  const std::size_t limit = std::min<std::size_t>(5, vocab.size());
  if (k < 1 || k > limit) {
    throw UsageError("predict_top_k: k must be in [1, " + std::to_string(limit) + "], got " +
                     std::to_string(k));
  }
  if (prediction.ranked.size() != vocab.size()) {
    throw UsageError("predict_top_k: prediction does not match the vocabulary");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(vocab.name(prediction.ranked[i]));
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> make_model_params<float>(const ModelConfig&);
template ModelParams<double> make_model_params<double>(const ModelConfig&);
template Var forward_batch<float>(Tape<float>&, const ModelConfig&, const ModelParams<float>&,
                                  ModelParams<float>*, std::span<const EncodedPost* const>, PaddingMode);
template Var forward_batch<double>(Tape<double>&, const ModelConfig&, const ModelParams<double>&,
                                   ModelParams<double>*, std::span<const EncodedPost* const>, PaddingMode);
template Var forward<float>(Tape<float>&, const ModelConfig&, const ModelParams<float>&,
                            ModelParams<float>*, const EncodedPost&, PaddingMode);
template Var forward<double>(Tape<double>&, const ModelConfig&, const ModelParams<double>&,
                             ModelParams<double>*, const EncodedPost&, PaddingMode);

}  // namespace tagrec
