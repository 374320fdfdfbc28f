#include "tagrec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tagrec/errors.hpp"

namespace tagrec {
namespace {

struct Ranked {
  std::vector<double> ranks;  // average ranks of |d|, aligned with the input
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
};

Ranked rank_abs(const std::vector<double>& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return std::fabs(d[x]) < std::fabs(d[y]); });
  Ranked r;
  r.ranks.resize(d.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t m = i; m <= j; ++m) r.ranks[order[m]] = avg;
    const auto t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

// P(W+ <= w) and P(W+ >= w) under the null, counting all 2^n sign patterns.
// Ranks are doubled so average ranks of tie groups stay integral.
std::pair<double, double> exact_tails(const std::vector<double>& ranks, double w_plus) {
  std::vector<long> doubled;
  long total = 0;
  for (const double r : ranks) {
    doubled.push_back(std::lround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  long reach = 0;
  for (const long r : doubled) {
    reach += r;
    for (long s = reach; s >= r; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
  }
  const long w = std::lround(2.0 * w_plus);
  const double all = std::ldexp(1.0, static_cast<int>(ranks.size()));
  double lower = 0.0;
  double upper = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (s <= w) lower += ways[static_cast<std::size_t>(s)];
    if (s >= w) upper += ways[static_cast<std::size_t>(s)];
  }
  return {lower / all, upper / all};
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw UsageError("wilcoxon: paired samples differ in length (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  WilcoxonResult result;
  result.n = d.size();
  if (d.empty()) return result;
  if (d.size() < kWilcoxonMinPairs) {
    throw UsageError("wilcoxon: " + std::to_string(d.size()) +
                     " non-zero differences, at least 6 are required");
  }
  const Ranked ranked = rank_abs(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) result.statistic += ranked.ranks[i];
  }
  const auto n = static_cast<double>(d.size());
  if (d.size() <= kWilcoxonExactMax) {
    const auto [lower, upper] = exact_tails(ranked.ranks, result.statistic);
    result.exact = true;
    result.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
    return result;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranked.tie_term / 48.0;
  if (var <= 0.0) return result;
  const double z = (result.statistic - mean) / std::sqrt(var);
  result.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
  return result;
}

std::string to_string(Magnitude m) {
  switch (m) {
    case Magnitude::negligible: return "Negligible";
    case Magnitude::small: return "Small";
    case Magnitude::medium: return "Medium";
    case Magnitude::large: return "Large";
  }
  return "Negligible";
}

Magnitude magnitude_for(double delta) {
  const double m = std::fabs(delta);
  if (m < 0.147) return Magnitude::negligible;
  if (m < 0.33) return Magnitude::small;
  if (m < 0.474) return Magnitude::medium;
  return Magnitude::large;
}

EffectSize cliffs_delta(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw UsageError("cliffs_delta: both samples must be non-empty");
  std::vector<double> sorted_b = b;
  std::sort(sorted_b.begin(), sorted_b.end());
  long long greater = 0;
  long long less = 0;
  for (const double x : a) {
    const auto lo = std::lower_bound(sorted_b.begin(), sorted_b.end(), x);
    const auto hi = std::upper_bound(sorted_b.begin(), sorted_b.end(), x);
    greater += lo - sorted_b.begin();
    less += sorted_b.end() - hi;
  }
  EffectSize e;
  e.delta = static_cast<double>(greater - less) /
            (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  e.magnitude = magnitude_for(e.delta);
  return e;
}

}  // namespace tagrec
