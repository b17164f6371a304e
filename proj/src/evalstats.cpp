#include "triage/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triage/error.hpp"

namespace triage::stats {

void ConfusionMatrix::add(Label truth, Label predicted) {
  if (truth == Label::bug) (predicted == Label::bug ? tp : fn) += 1;
  else (predicted == Label::bug ? fp : tn) += 1;
}

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorCode::degenerate, "metrics of an empty confusion matrix");
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stdev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double scott_knott_delta(std::span<const double> values, std::size_t left_size) {
  if (left_size == 0 || left_size >= values.size())
    fail(ErrorCode::validation, "scott-knott split needs two nonempty sides");
  const double n = static_cast<double>(values.size());
  const auto left = values.first(left_size), right = values.subspan(left_size);
  const double mu = mean(values), mu1 = mean(left), mu2 = mean(right);
  return static_cast<double>(left.size()) / n * (mu1 - mu) * (mu1 - mu) +
         static_cast<double>(right.size()) / n * (mu2 - mu) * (mu2 - mu);
}

double a12(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) fail(ErrorCode::validation, "a12 needs two nonempty samples");
  double wins = 0.0;
  for (double a : x)
    for (double b : y) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

int RankedGroups::rank_count() const {
  int r = 0;
  for (const auto& g : groups) r = std::max(r, g.rank);
  return r;
}

namespace {

std::vector<double> concat(std::span<const NamedSample> groups) {
  std::vector<double> out;
  for (const auto& g : groups) out.insert(out.end(), g.values.begin(), g.values.end());
  return out;
}

// Appends clusters (as [begin, end) group ranges) in ascending-mean order.
void divide(std::span<const NamedSample> ordered, std::size_t offset, double threshold,
            std::vector<std::pair<std::size_t, std::size_t>>& clusters) {
  const auto split = best_split(ordered);
  if (split) {
    const auto left = concat(ordered.first(split->left_groups));
    const auto right = concat(ordered.subspan(split->left_groups));
    if (std::abs(a12(right, left) - 0.5) >= threshold) {
      divide(ordered.first(split->left_groups), offset, threshold, clusters);
      divide(ordered.subspan(split->left_groups), offset + split->left_groups, threshold, clusters);
      return;
    }
  }
  clusters.emplace_back(offset, offset + ordered.size());
}

}  // namespace

std::optional<Split> best_split(std::span<const NamedSample> ordered) {
  if (ordered.size() < 2) return std::nullopt;
  const auto all = concat(ordered);
  std::optional<Split> best;
  std::size_t left_size = 0;
  for (std::size_t b = 1; b < ordered.size(); ++b) {
    left_size += ordered[b - 1].values.size();
    const double d = scott_knott_delta(all, left_size);
    if (!best || d > best->delta) best = Split{b, d};
  }
  return best;
}

RankedGroups scott_knott(std::vector<NamedSample> groups, double a12_threshold) {
  if (groups.empty()) fail(ErrorCode::validation, "scott-knott needs at least one group");
  for (const auto& g : groups)
    if (g.values.size() < 2)
      fail(ErrorCode::validation, "scott-knott group '" + g.name + "' has fewer than 2 samples");

  std::stable_sort(groups.begin(), groups.end(), [](const NamedSample& a, const NamedSample& b) {
    const double ma = mean(a.values), mb = mean(b.values);
    if (ma != mb) return ma < mb;
    return a.name < b.name;
  });

  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  divide(groups, 0, a12_threshold, clusters);

  RankedGroups out;
  const int n_clusters = static_cast<int>(clusters.size());
  for (int c = n_clusters - 1; c >= 0; --c) {
    const auto [b, e] = clusters[static_cast<std::size_t>(c)];
    for (std::size_t g = e; g-- > b;) {
      RankedGroup rg;
      rg.name = groups[g].name;
      rg.rank = n_clusters - c;
      rg.mean = mean(groups[g].values);
      rg.stdev = sample_stdev(groups[g].values);
      rg.values = groups[g].values;
      out.groups.push_back(std::move(rg));
    }
  }
  return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::validation, "wilcoxon needs paired samples of equal length");
  if (x.empty()) fail(ErrorCode::validation, "wilcoxon needs at least one pair");

  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);

  WilcoxonResult r;
  r.n_effective = d.size();
  if (d.empty()) return r;

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Doubled ranks keep average ranks integral.
  std::vector<long long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const long long avg2 = static_cast<long long>(i + 1 + j);  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = avg2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  long long wp2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) wp2 += rank2[i];
  }
  r.w_plus = static_cast<double>(wp2) / 2.0;
  r.w_minus = static_cast<double>(total2 - wp2) / 2.0;
  r.statistic = std::min(r.w_plus, r.w_minus);
  const long long stat2 = std::min(wp2, total2 - wp2);

  if (n <= kWilcoxonExactLimit) {
    // ways[s] = number of sign assignments whose doubled W+ equals s.
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    long long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long long s = reach; s >= 0; --s)
        if (ways[static_cast<std::size_t>(s)] != 0.0) ways[static_cast<std::size_t>(s + rank2[i])] += ways[static_cast<std::size_t>(s)];
      reach += rank2[i];
    }
    double extreme = 0.0;
    for (long long s = 0; s <= total2; ++s)
      if (std::min(s, total2 - s) <= stat2) extreme += ways[static_cast<std::size_t>(s)];
    r.p_two_sided = std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(n)));
    r.exact = true;
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  r.exact = false;
  if (var <= 0.0) return r;
  const double z = std::max(0.0, std::abs(r.w_plus - mu) - 0.5) / std::sqrt(var);
  r.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace triage::stats
