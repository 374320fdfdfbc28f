#include "tagrec/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "tagrec/errors.hpp"
#include "tagrec/ops.hpp"

namespace tagrec {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(initial_lr > 0)) throw ConfigError("train: initial_lr must be > 0");
  if (epochs < 1 && max_steps == 0) throw ConfigError("train: epochs must be >= 1");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("train: adam_eps must be > 0");
  if (weight_decay < 0 || clip_norm < 0) throw ConfigError("train: weight_decay/clip_norm must be >= 0");
}

TrainingExample make_example(const Tokenizer& tokenizer, const DecomposedPost& post,
                             const TagVocabulary& vocab, const ModelConfig& config) {
  TrainingExample ex;
  ex.input = encode_post(tokenizer, post, config);
  ex.targets.assign(vocab.size(), 0.0f);
  for (const auto& tag : post.tags) {
    const auto idx = vocab.index(tag);
    if (!idx) {
      throw UsageError("post " + std::to_string(post.id) + " has tag '" + tag +
                       "' outside the vocabulary");
    }
    ex.targets[*idx] = 1.0f;
  }
  return ex;
}

std::vector<TrainingExample> make_examples(const Tokenizer& tokenizer,
                                           const std::vector<DecomposedPost>& corpus,
                                           const TagVocabulary& vocab, const ModelConfig& config,
                                           int workers) {
  std::vector<TrainingExample> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8) num_threads(std::max(workers, 1))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          make_example(tokenizer, corpus[static_cast<std::size_t>(i)], vocab, config);
    } catch (...) {
#pragma omp critical(tagrec_make_examples)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

double bce_loss(std::span<const float> probabilities, std::span<const float> targets,
                std::size_t num_tags, std::size_t batch) {
  if (probabilities.size() != targets.size() || num_tags == 0 ||
      probabilities.size() % num_tags != 0 || batch == 0) {
    throw UsageError("bce_loss: probabilities " + std::to_string(probabilities.size()) +
                     " vs targets " + std::to_string(targets.size()) + " for " +
                     std::to_string(num_tags) + " tags");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double f = std::clamp<double>(probabilities[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const double y = targets[i];
    total += y * std::log(f) + (1.0 - y) * std::log(1.0 - f);
  }
  return -total / static_cast<double>(batch);
}

template <typename Real>
Var bce_loss(Tape<Real>& tape, Var probabilities, std::span<const Real> targets, std::size_t batch) {
  const auto& p = tape.value(probabilities);
  if (p.size() != targets.size() || batch == 0) {
    throw UsageError("bce_loss: probabilities " + shape_string(p.shape) + " vs " +
                     std::to_string(targets.size()) + " targets");
  }
  const Shape shape = p.shape;
  Tensor<Real> y(shape, std::vector<Real>(targets.begin(), targets.end()));
  Tensor<Real> not_y = y;
  for (auto& v : not_y.data) v = Real(1) - v;
  const Var f = ops::clamp(tape, probabilities, Real(kProbabilityEpsilon),
                           Real(1) - Real(kProbabilityEpsilon));
  const Var pos = ops::mul(tape, tape.constant(std::move(y)), ops::log(tape, f));
  const Var neg = ops::mul(tape, tape.constant(std::move(not_y)),
                           ops::log(tape, ops::add_scalar(tape, ops::scale(tape, f, Real(-1)), Real(1))));
  return ops::scale(tape, ops::sum(tape, ops::add(tape, pos, neg)),
                    Real(-1) / static_cast<Real>(batch));
}

template <typename Real>
double batch_loss(const ModelConfig& config, const ModelParams<Real>& params,
                  std::span<const TrainingExample* const> examples, ModelParams<Real>* grads,
                  PaddingMode mode) {
  if (examples.empty()) throw UsageError("batch_loss: empty batch");
  std::vector<const EncodedPost*> inputs;
  std::vector<Real> targets;
  for (const TrainingExample* ex : examples) {
    inputs.push_back(&ex->input);
    targets.insert(targets.end(), ex->targets.begin(), ex->targets.end());
  }
  Tape<Real> tape(grads != nullptr);
  const Var probs = forward_batch(tape, config, params, grads,
                                  std::span<const EncodedPost* const>(inputs), mode);
  const Var loss = bce_loss(tape, probs, std::span<const Real>(targets), examples.size());
  if (grads != nullptr) tape.backward(loss);
  return static_cast<double>(tape.value(loss).data[0]);
}

template <typename Real>
double batch_loss(const ModelConfig& config, const ModelParams<Real>& params,
                  std::span<const TrainingExample> examples, ModelParams<Real>* grads,
                  PaddingMode mode) {
  std::vector<const TrainingExample*> ptrs;
  for (const auto& ex : examples) ptrs.push_back(&ex);
  return batch_loss(config, params, std::span<const TrainingExample* const>(ptrs), grads, mode);
}

double learning_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return 0.0;
  const auto t = static_cast<double>(step);
  const auto w = static_cast<double>(config.warmup_steps);
  const auto total = static_cast<double>(total_steps);
  if (step < config.warmup_steps) return config.initial_lr * (t + 1.0) / w;
  return config.initial_lr * std::max(0.0, (total - t) / (total - w));
}

std::size_t total_steps(const TrainConfig& config, std::size_t corpus_size) {
  if (config.max_steps > 0) return config.max_steps;
  const std::size_t per_epoch = (corpus_size + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

namespace {

void zero(ModelParams<float>& p) {
  for (auto& [name, t] : p.named_tensors()) std::fill(t->data.begin(), t->data.end(), 0.0f);
}

}  // namespace

std::vector<LossRecord> train(TagModel& model, const std::vector<TrainingExample>& examples,
                              const TrainConfig& config,
                              const std::function<void(const LossRecord&)>& on_step) {
  config.validate();
  if (examples.empty()) throw UsageError("train: empty corpus");
  for (const auto& ex : examples) {
    if (ex.targets.size() != model.config().num_tags) {
      throw UsageError("train: example targets do not match the tag vocabulary");
    }
  }
  const std::size_t n = examples.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t steps = total_steps(config, n);

  ModelParams<float>& params = model.params();
  ModelParams<float> grads = make_model_params<float>(model.config());
  ModelParams<float> m = grads;
  ModelParams<float> v = grads;
  auto param_list = params.named_tensors();
  auto grad_list = grads.named_tensors();
  auto m_list = m.named_tensors();
  auto v_list = v.named_tensors();

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::vector<const TrainingExample*> batch;
  std::vector<LossRecord> trace;
  trace.reserve(steps);

  for (std::size_t step = 0; step < steps; ++step) {
    const std::size_t slot = step % per_epoch;
    if (slot == 0) {
      // Fisher-Yates over mt19937_64 output: the permutation depends only on the seed.
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    }
    const std::size_t begin = slot * config.batch_size;
    const std::size_t end = std::min(n, begin + config.batch_size);
    batch.clear();
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&examples[order[i]]);

    zero(grads);
    const double loss = batch_loss<float>(model.config(), params,
                                          std::span<const TrainingExample* const>(batch), &grads);
    const double lr = learning_rate(config, step, steps);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << step << " (lr " << lr << ", loss " << loss
          << ", batch rows " << begin << ".." << end << " of epoch " << step / per_epoch << ")";
      throw TrainingError(msg.str());
    }

    if (config.clip_norm > 0) {
      double sq = 0.0;
      for (const auto& [name, g] : grad_list) {
        for (const float x : g->data) sq += static_cast<double>(x) * x;
      }
      const double norm = std::sqrt(sq);
      if (norm > config.clip_norm) {
        const auto factor = static_cast<float>(config.clip_norm / norm);
        for (auto& [name, g] : grad_list) {
          for (float& x : g->data) x *= factor;
        }
      }
    }

    const double t = static_cast<double>(step + 1);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    const auto b1 = static_cast<float>(config.beta1);
    const auto b2 = static_cast<float>(config.beta2);
    for (std::size_t k = 0; k < param_list.size(); ++k) {
      auto& p = param_list[k].second->data;
      const auto& g = grad_list[k].second->data;
      auto& mk = m_list[k].second->data;
      auto& vk = v_list[k].second->data;
      for (std::size_t i = 0; i < p.size(); ++i) {
        mk[i] = b1 * mk[i] + (1.0f - b1) * g[i];
        vk[i] = b2 * vk[i] + (1.0f - b2) * g[i] * g[i];
        const double mhat = mk[i] / bias1;
        const double vhat = vk[i] / bias2;
        const double update = mhat / (std::sqrt(vhat) + config.adam_eps) + config.weight_decay * p[i];
        p[i] -= static_cast<float>(lr * update);
      }
    }

    trace.push_back({step, lr, loss});
    if (on_step) on_step(trace.back());
  }
  return trace;
}

void write_loss_trace(std::ostream& out, const std::vector<LossRecord>& trace) {
  out << "step,lr,loss\n";
  out << std::setprecision(9);
  for (const auto& r : trace) out << r.step << ',' << r.lr << ',' << r.loss << '\n';
}

template Var bce_loss<float>(Tape<float>&, Var, std::span<const float>, std::size_t);
template Var bce_loss<double>(Tape<double>&, Var, std::span<const double>, std::size_t);
template double batch_loss<float>(const ModelConfig&, const ModelParams<float>&,
                                  std::span<const TrainingExample* const>, ModelParams<float>*, PaddingMode);
template double batch_loss<double>(const ModelConfig&, const ModelParams<double>&,
                                   std::span<const TrainingExample* const>, ModelParams<double>*, PaddingMode);
template double batch_loss<float>(const ModelConfig&, const ModelParams<float>&,
                                  std::span<const TrainingExample>, ModelParams<float>*, PaddingMode);
template double batch_loss<double>(const ModelConfig&, const ModelParams<double>&,
                                   std::span<const TrainingExample>, ModelParams<double>*, PaddingMode);

}  // namespace tagrec
