#include "tagrec/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include <json.hpp>
#include <omp.h>

#include "tagrec/errors.hpp"

namespace tagrec {

std::string LatencyStats::to_json() const {
  nlohmann::ordered_json j;
  j["unit"] = "ms";
  j["std"] = std;
  j["min"] = min;
  j["25%"] = p25;
  j["50%"] = p50;
  j["75%"] = p75;
  j["max"] = max;
  j["mean"] = mean;
  j["count"] = count;
  return j.dump(2) + "\n";
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw UsageError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LatencyStats summarize(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw UsageError("summarize: no samples");
  std::sort(samples_ms.begin(), samples_ms.end());
  LatencyStats s;
  s.count = samples_ms.size();
  double sum = 0.0;
  for (const double v : samples_ms) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (const double v : samples_ms) sq += (v - s.mean) * (v - s.mean);
  s.std = s.count > 1 ? std::sqrt(sq / static_cast<double>(s.count - 1)) : 0.0;
  s.min = samples_ms.front();
  s.max = samples_ms.back();
  s.p25 = quantile(samples_ms, 0.25);
  s.p50 = quantile(samples_ms, 0.50);
  s.p75 = quantile(samples_ms, 0.75);
  return s;
}

Timer steady_timer() {
  return [](const std::function<void()>& work) {
    const auto start = std::chrono::steady_clock::now();
    work();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
  };
}

LatencyStats latency_bench(const TagModel& model, const Tokenizer& tokenizer,
                           const std::vector<DecomposedPost>& corpus, const LatencyOptions& options,
                           const Timer& timer) {
  if (options.sample_n < 1 || options.repeats < 1) {
    throw UsageError("latency_bench: sample_n and repeats must be >= 1");
  }
  if (corpus.size() < options.sample_n) {
    throw UsageError("latency_bench: corpus has " + std::to_string(corpus.size()) +
                     " posts, sample_n is " + std::to_string(options.sample_n));
  }
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < options.sample_n; ++i) {
    const std::size_t j = i + rng() % (order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<EncodedPost> inputs;
  inputs.reserve(options.sample_n);
  for (std::size_t i = 0; i < options.sample_n; ++i) {
    inputs.push_back(encode_post(tokenizer, corpus[order[i]], model.config()));
  }

  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(1);
  std::vector<double> samples;
  samples.reserve(options.sample_n * options.repeats);
  try {
    for (std::size_t r = 0; r < options.repeats; ++r) {
      for (const auto& input : inputs) {
        samples.push_back(timer([&] { (void)model.predict(input, PaddingMode::full); }));
      }
    }
  } catch (...) {
    omp_set_num_threads(saved_threads);
    throw;
  }
  omp_set_num_threads(saved_threads);
  return summarize(std::move(samples));
}

}  // namespace tagrec
