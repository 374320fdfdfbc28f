#pragma once

#include <string>
#include <vector>

namespace tagrec {

struct WilcoxonResult {
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  std::size_t n = 0;       // pairs left after dropping zero differences
  double p_value = 1.0;    // two-sided
  bool exact = false;
};

// Two-sided signed-rank test on paired samples. Zero differences are dropped
// and tied magnitudes get average ranks. Up to 25 remaining pairs the null
// distribution is enumerated exactly; above that a tie-corrected normal
// approximation without continuity correction is used. p = 1 when every
// difference is zero. Throws UsageError on unequal lengths or when 1-5
// non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 6;

enum class Magnitude { negligible, small, medium, large };

std::string to_string(Magnitude m);  // "Negligible", "Small", ...
Magnitude magnitude_for(double delta);  // |delta| against 0.147 / 0.33 / 0.474

struct EffectSize {
  double delta = 0.0;
  Magnitude magnitude = Magnitude::negligible;
};

// (#(a_i > b_j) - #(a_i < b_j)) / (|a| |b|). Throws UsageError on empty input.
EffectSize cliffs_delta(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tagrec
