#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/corpus.hpp"

namespace triage::stats {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(Label truth, Label predicted);
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Bug is the positive class. Precision, recall and F1 fall back to 0 when their
// denominators vanish; accuracy is (tp + tn) / total. Throws Error{degenerate}
// on an empty matrix.
Metrics metrics(const ConfusionMatrix& cm);

double mean(std::span<const double> v);
double sample_stdev(std::span<const double> v);  // n-1 denominator; 0 below two values

// Between-group variance gained by cutting `values` after its first `left_size`
// entries: |l1|/|l| (mean(l1) - mean(l))^2 + |l2|/|l| (mean(l2) - mean(l))^2.
double scott_knott_delta(std::span<const double> values, std::size_t left_size);

// Vargha-Delaney A12: P(x > y) + 0.5 P(x == y) over all pairs.
double a12(std::span<const double> x, std::span<const double> y);

struct NamedSample {
  std::string name;
  std::vector<double> values;
};

struct RankedGroup {
  std::string name;
  int rank = 1;  // 1 = highest mean
  double mean = 0.0;
  double stdev = 0.0;
  std::vector<double> values;
};

struct RankedGroups {
  std::vector<RankedGroup> groups;  // by rank, then descending mean
  int rank_count() const;
};

inline constexpr double kNegligibleA12 = 0.06;

// Split point over groups already sorted by ascending mean: the number of
// groups on the left side that maximizes delta over the concatenated samples.
// First maximum wins. Empty when fewer than two groups.
struct Split {
  std::size_t left_groups = 0;
  double delta = 0.0;
};
std::optional<Split> best_split(std::span<const NamedSample> ordered);

// Recursive Scott-Knott clustering. A split is kept only when the merged
// sides differ by at least `a12_threshold` in |A12 - 0.5|.
RankedGroups scott_knott(std::vector<NamedSample> groups, double a12_threshold = kNegligibleA12);

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double statistic = 0.0;  // min(W+, W-)
  std::size_t n_effective = 0;
  double p_two_sided = 1.0;
  bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 15;

// Paired signed-rank test on x - y. Zero differences are dropped, tied |d| get
// average ranks. Exact null distribution for n <= 15, otherwise the normal
// approximation with tie and continuity corrections. All-zero input gives p = 1.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

}  // namespace triage::stats
