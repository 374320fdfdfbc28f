#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "tagrec/model.hpp"

namespace tagrec {

struct TrainConfig {
  std::size_t batch_size = 64;
  double initial_lr = 7e-5;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0: epochs * ceil(n / batch_size)
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 0.0;  // 0: off
  std::size_t warmup_steps = 0;

  void validate() const;
};

// Clipping bound applied to probabilities before the logarithms.
inline constexpr double kProbabilityEpsilon = 1e-7;

struct TrainingExample {
  EncodedPost input;
  std::vector<float> targets;  // 0/1 per tag
};

TrainingExample make_example(const Tokenizer& tokenizer, const DecomposedPost& post,
                             const TagVocabulary& vocab, const ModelConfig& config);

// Tokenises a corpus with up to `workers` threads; output keeps corpus order.
std::vector<TrainingExample> make_examples(const Tokenizer& tokenizer,
                                           const std::vector<DecomposedPost>& corpus,
                                           const TagVocabulary& vocab, const ModelConfig& config,
                                           int workers = 1);

// -(1/N) sum_i sum_j [y log f + (1-y) log(1-f)] over a row-major [rows, L]
// block of probabilities, with N = `batch` and f clipped to [eps, 1-eps].
double bce_loss(std::span<const float> probabilities, std::span<const float> targets,
                std::size_t num_tags, std::size_t batch);

// Differentiable form over a [rows, L] block of a batch of size `batch`.
template <typename Real>
Var bce_loss(Tape<Real>& tape, Var probabilities, std::span<const Real> targets, std::size_t batch);

// Batch loss over `examples` (N = examples.size()), adding d(loss)/d(params)
// into `grads` when non-null. The whole batch runs through one tape.
template <typename Real>
double batch_loss(const ModelConfig& config, const ModelParams<Real>& params,
                  std::span<const TrainingExample* const> examples, ModelParams<Real>* grads,
                  PaddingMode mode = PaddingMode::trimmed);
template <typename Real>
double batch_loss(const ModelConfig& config, const ModelParams<Real>& params,
                  std::span<const TrainingExample> examples, ModelParams<Real>* grads,
                  PaddingMode mode = PaddingMode::trimmed);

// Linear decay to zero over `total_steps`, after an optional linear warmup.
double learning_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct LossRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t total_steps(const TrainConfig& config, std::size_t corpus_size);

// Adam over shuffled mini-batches. Updates the classifier and every encoder.
std::vector<LossRecord> train(TagModel& model, const std::vector<TrainingExample>& examples,
                              const TrainConfig& config,
                              const std::function<void(const LossRecord&)>& on_step = {});

void write_loss_trace(std::ostream& out, const std::vector<LossRecord>& trace);

}  // namespace tagrec
