#pragma once

// Randomized comparisons of library routines against the brute-force oracles.
// Each returns the number of mismatching trials.

#include <cstdio>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "triage/evalstats.hpp"
#include "triage/pseudolabel.hpp"
#include "triage/rng.hpp"
#include "triage/sampling.hpp"

namespace oracle_checks {

using namespace triage;

inline std::string pad_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

// Effort-aware selection versus a full sort, on pools of up to max_pool reports.
inline int topk_mismatches(int trials, std::size_t max_pool, std::uint64_t seed) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.below(max_pool);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<sampling::ScoredReport> scored;
    std::vector<std::pair<std::string, double>> items;
    for (std::size_t i = 0; i < n; ++i) {
      sampling::ScoredReport s;
      s.index = i;
      s.id = pad_id("r", order[i]);
      // Coarse values so that ties are common.
      s.score.aggregate = static_cast<double>(rng.below(40)) / 13.0;
      scored.push_back(s);
      items.emplace_back(s.id, s.score.aggregate);
    }
    const long long k = 1 + static_cast<long long>(rng.below(n + 5));
    const auto sel = sampling::select_top_k(scored, k, sampling::Strategy::effort_aware, 0);
    std::vector<std::string> got;
    for (auto p : sel.picks) got.push_back(scored[p].id);
    const bool depleted_ok = sel.depleted == (static_cast<std::size_t>(k) > n);
    if (got != oracle::top_k(items, static_cast<std::size_t>(k)) || !depleted_ok) ++bad;
  }
  return bad;
}

// pseudo_label_batch with s = 1 versus all-pairs greedy nearest neighbour, on
// random corpora of up to max_reports reports.
inline int pseudolabel_mismatches(int trials, std::size_t max_reports, std::uint64_t seed) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 4 + rng.below(max_reports - 3);
    const std::size_t dim = 2 + rng.below(7);
    testing_support::ScriptedBackend backend;
    backend.dim = dim;
    std::vector<Report> reports;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string token = "tok" + std::to_string(i);
      reports.push_back(testing_support::token_report(pad_id("r", i), token, rng.bernoulli(0.5) ? Label::bug : Label::nonbug));
      Embedding v(dim);
      // Integer grid coordinates produce exact distance ties now and then.
      for (double& x : v) x = static_cast<double>(rng.below(5));
      backend.vectors[token] = v;
    }
    const Corpus corpus = testing_support::make_corpus(std::move(reports));
    Pool pool(corpus);
    const std::size_t n_sources = 1 + rng.below(std::min<std::size_t>(20, n / 2));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<std::size_t> sources(idx.begin(), idx.begin() + static_cast<long>(n_sources));
    for (auto i : sources) {
      pool.mark_queried(i);
      pool.apply_human_label(i, *corpus[i].oracle_label);
    }
    // A few reports sit in other pools and must never be claimed.
    for (std::size_t j = n_sources; j < std::min(n, n_sources + 3); ++j) pool.mark_queried(idx[j]);

    std::vector<std::pair<std::string, std::vector<double>>> src, cand;
    for (auto i : sources) src.emplace_back(corpus[i].id, backend.vectors[corpus[i].model_text]);
    for (auto i : pool.members(Membership::unlabeled)) cand.emplace_back(corpus[i].id, backend.vectors[corpus[i].model_text]);
    const auto expected = oracle::greedy_nearest(src, cand, 1);
    const std::size_t du_before = pool.count(Membership::unlabeled);

    const auto got = pseudo::pseudo_label_batch(sources, pool, backend, 1);
    bool ok = got.size() == expected.size() && got.size() == std::min(n_sources, du_before);
    for (std::size_t a = 0; ok && a < got.size(); ++a) {
      ok = got[a].source_id == expected[a].source && got[a].target_id == expected[a].target &&
           std::abs(got[a].distance - expected[a].distance) < 1e-12;
      const std::size_t target = corpus.index_of(got[a].target_id);
      const Label source_label = *corpus[corpus.index_of(got[a].source_id)].oracle_label;
      ok = ok && got[a].label == source_label && pool.label_state(target) == LabelState::pseudo(source_label, got[a].source_id);
    }
    ok = ok && pool.count(Membership::unlabeled) == du_before - got.size();
    if (!ok) ++bad;
  }
  return bad;
}

// Split choice and final ranks versus exhaustive enumeration, up to max_groups groups.
inline int scott_knott_mismatches(int trials, std::size_t max_groups, std::uint64_t seed) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t g = 2 + rng.below(max_groups - 1);
    std::vector<std::vector<double>> groups;
    std::vector<stats::NamedSample> named;
    for (std::size_t i = 0; i < g; ++i) {
      const double centre = static_cast<double>(rng.below(6)) * (rng.bernoulli(0.5) ? 1.0 : 0.1);
      std::vector<double> v;
      const std::size_t m = 2 + rng.below(9);
      for (std::size_t j = 0; j < m; ++j) v.push_back(centre + rng.uniform());
      groups.push_back(v);
      named.push_back({"g" + std::to_string(i), v});
    }
    // Split over the mean-ordered groups.
    std::vector<std::size_t> order(g);
    for (std::size_t i = 0; i < g; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return oracle::avg(groups[a]) < oracle::avg(groups[b]); });
    std::vector<std::vector<double>> ordered;
    std::vector<stats::NamedSample> ordered_named;
    for (auto i : order) {
      ordered.push_back(groups[i]);
      ordered_named.push_back(named[i]);
    }
    const auto [cut, delta] = oracle::exhaustive_split(ordered);
    const auto split = stats::best_split(ordered_named);
    bool ok = split && split->left_groups == cut && std::abs(split->delta - delta) < 1e-9;

    const auto expected_ranks = oracle::scott_knott_ranks(groups);
    const auto ranked = stats::scott_knott(named);
    for (const auto& rg : ranked.groups) {
      const std::size_t i = std::stoul(rg.name.substr(1));
      ok = ok && rg.rank == expected_ranks[i];
    }
    if (!ok) ++bad;
  }
  return bad;
}

// Exact Wilcoxon p versus enumeration of all 2^n sign assignments, n <= max_n.
inline int wilcoxon_mismatches(int trials, std::size_t max_n, std::uint64_t seed) {
  Rng rng(seed);
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.below(max_n);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(rng.below(7)));
      y.push_back(static_cast<double>(rng.below(7)));
    }
    const auto r = stats::wilcoxon_signed_rank(x, y);
    const double expected = oracle::wilcoxon_enumerated(x, y);
    if (!r.exact || std::abs(r.p_two_sided - expected) > 1e-12) ++bad;
  }
  return bad;
}

}  // namespace oracle_checks
