#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tagrec/model.hpp"

namespace tagrec {

// Milliseconds.
struct LatencyStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  double min = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  // Keys in the order std, min, 25%, 50%, 75%, max, then mean and count.
  std::string to_json() const;
};

// Linear interpolation between order statistics at position q * (n - 1).
double quantile(const std::vector<double>& sorted, double q);

LatencyStats summarize(std::vector<double> samples_ms);

// Runs `work` once and returns the elapsed wall-clock milliseconds.
using Timer = std::function<double(const std::function<void()>& work)>;

Timer steady_timer();

struct LatencyOptions {
  std::size_t sample_n = 2000;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

// Times single-post forward passes over `sample_n` posts drawn without
// replacement, each input padded to the full configured length, repeated
// `repeats` times, on one thread. Tokenisation happens outside the timed
// region. Throws UsageError when the corpus has fewer than sample_n posts.
LatencyStats latency_bench(const TagModel& model, const Tokenizer& tokenizer,
                           const std::vector<DecomposedPost>& corpus, const LatencyOptions& options,
                           const Timer& timer = steady_timer());

}  // namespace tagrec
