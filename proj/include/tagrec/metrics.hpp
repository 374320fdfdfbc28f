#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tagrec/model.hpp"

namespace tagrec {

inline constexpr std::size_t kMaxK = 5;

struct EvalInstance {
  std::vector<std::string> ground_truth;       // non-empty, no duplicates
  std::vector<std::string> ranked_prediction;  // best first, no duplicates
  std::int64_t id = 0;
};

// Each throws UsageError unless 1 <= k <= 5 and the prediction holds at least
// k distinct tags.
double precision_at_k(const EvalInstance& inst, std::size_t k);
double recall_at_k(const EvalInstance& inst, std::size_t k);  // divides by min(k, |GT|)
double f1_at_k(const EvalInstance& inst, std::size_t k);      // 0 when P + R = 0

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::vector<Scores> mean;                  // aligned with ks
  std::vector<std::int64_t> ids;             // per instance
  std::vector<std::vector<Scores>> per_instance;  // [instance][k index]
  std::size_t n = 0;

  const Scores& at(std::size_t k) const;
  std::vector<double> column(std::size_t k, const std::string& metric) const;

  std::string to_json() const;
  std::string to_table() const;
  void write_instances_csv(std::ostream& out) const;
};

MetricsReport evaluate_corpus(const std::vector<EvalInstance>& instances,
                              const std::vector<std::size_t>& ks = {1, 2, 3, 4, 5});

// Reads a per-instance CSV written by MetricsReport::write_instances_csv and
// returns (ids, values of the column named e.g. "f1@5").
std::pair<std::vector<std::int64_t>, std::vector<double>> read_instance_column(
    std::istream& in, const std::string& column);

// Ground-truth tags of instances whose F1@5 is zero, with occurrence counts,
// most frequent first (ties by name).
std::vector<std::pair<std::string, std::size_t>> missed_tag_analysis(
    const std::vector<EvalInstance>& instances, const std::vector<double>& f1_at_5);

// Runs the model over a corpus and keeps the top min(5, L) tags per post.
std::vector<EvalInstance> predict_corpus(const TagModel& model, const Tokenizer& tokenizer,
                                         const std::vector<DecomposedPost>& corpus, int workers = 1);

}  // namespace tagrec
