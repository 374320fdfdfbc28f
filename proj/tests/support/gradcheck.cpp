#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tagrec::testing {

GradCheckReport check_gradients(const ModelConfig& config, const ModelParams<double>& params,
                                const std::vector<TrainingExample>& examples, double h,
                                double rel_tol, double abs_floor) {
  ModelParams<double> grads = make_model_params<double>(config);
  batch_loss<double>(config, params, examples, &grads);

  ModelParams<double> probe = params;
  auto probe_tensors = probe.named_tensors();
  const auto grad_tensors = grads.named_tensors();
  GradCheckReport report;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    auto& values = probe_tensors[t].second->data;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = batch_loss<double>(config, probe, examples, nullptr);
      values[i] = saved - h;
      const double down = batch_loss<double>(config, probe, examples, nullptr);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad_tensors[t].second->data[i];
      const double diff = std::fabs(numeric - analytic);
      const double scale = std::max(std::fabs(numeric), std::fabs(analytic));
      const double rel = scale > 0 ? diff / scale : 0.0;
      ++report.checked;
      if (diff > abs_floor && rel > rel_tol) ++report.failures;
      report.worst_absolute = std::max(report.worst_absolute, diff);
      if (scale > abs_floor && rel > report.worst_relative) {
        report.worst_relative = rel;
        report.worst_name = probe_tensors[t].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

TinySetup tiny_setup(std::uint64_t seed, Pooling pooling) {
  TinySetup s;
  s.config.encoder.layers = 1;
  s.config.encoder.heads = 2;
  s.config.encoder.model_dim = 8;
  s.config.encoder.ffn_dim = 16;
  s.config.encoder.max_positions = 16;
  s.config.encoder.vocab_size = Tokenizer::kMinVocabSize;
  s.config.num_tags = 5;
  s.config.max_len = {8, 12, 12};
  s.config.pooling = pooling;
  s.config.normalize();

  const std::vector<std::string> tags = {"a", "b", "c", "d", "e"};
  const TagVocabulary vocab(tags, {3, 3, 3, 3, 3}, 1);
  // A seeded float model supplies non-trivial weights; the check runs in double.
  TagModel model(s.config, vocab, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<float> jitter(0.0f, 0.3f);
  for (auto& [name, tensor] : model.params().named_tensors()) {
    for (auto& v : tensor->data) v += jitter(rng);
  }
  s.params = params_cast<double>(model.params());

  const Tokenizer tokenizer;
  const std::vector<DecomposedPost> posts = {
      {1, "", 0, "sort list", "how to sort a list fast", "xs.sort()", {"a", "c"}},
      {2, "", 0, "parse json", "reading json numbers", "json.loads(s)", {"b"}},
      {3, "", 0, "null ptr", "segfault when deref", "*p = 0; // crash here", {"d", "e", "a"}},
  };
  for (const auto& p : posts) s.examples.push_back(make_example(tokenizer, p, vocab, s.config));
  return s;
}

}  // namespace tagrec::testing
