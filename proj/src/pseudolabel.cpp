#include "triage/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "triage/error.hpp"
#include "triage/kernels.hpp"

namespace triage::pseudo {

std::optional<Nearest> nearest_unlabeled(const Embedding& source, std::span<const Embedding> candidates,
                                         std::span<const std::string> candidate_ids) {
  if (candidates.size() != candidate_ids.size())
    fail(ErrorCode::validation, "candidate ids and embeddings differ in length");
  std::optional<Nearest> best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (candidates[j].size() != source.size()) fail(ErrorCode::validation, "embedding dimension mismatch");
    const double d = kernels::squared_distance(source, candidates[j]);
    if (!best || d < best_sq || (d == best_sq && candidate_ids[j] < candidate_ids[best->position])) {
      best = Nearest{j, 0.0};
      best_sq = d;
    }
  }
  if (best) best->distance = std::sqrt(best_sq);
  return best;
}

std::vector<PseudoAssignment> pseudo_label_batch(std::span<const std::size_t> sources, Pool& pool,
                                                 const ModelBackend& backend, long long per_source) {
  if (per_source < 0) fail(ErrorCode::validation, "pseudo-labels per source must be >= 0");
  const Corpus& corpus = pool.corpus();
  std::vector<std::size_t> ordered(sources.begin(), sources.end());
  std::sort(ordered.begin(), ordered.end(), [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
  for (std::size_t i : ordered) {
    const LabelState& s = pool.label_state(i);
    if (pool.membership(i) != Membership::labeled || !s.label || s.kind == LabelKind::pseudo)
      fail(ErrorCode::precondition_failed, "pseudo-label source '" + corpus[i].id + "' is not human-labeled");
  }

  const std::vector<std::size_t> unlabeled = pool.members(Membership::unlabeled);
  if (per_source == 0 || ordered.empty() || unlabeled.empty()) return {};

  std::vector<std::string_view> source_texts, pool_texts;
  for (std::size_t i : ordered) source_texts.push_back(corpus[i].model_text);
  for (std::size_t i : unlabeled) pool_texts.push_back(corpus[i].model_text);
  const auto source_vecs = backend.embed(source_texts);
  const auto pool_vecs = backend.embed(pool_texts);
  const std::vector<double> dist = kernels::squared_distances(source_vecs, pool_vecs);

  const std::size_t m = unlabeled.size();
  std::vector<bool> claimed(m, false);
  std::vector<PseudoAssignment> out;
  for (std::size_t r = 0; r < ordered.size(); ++r) {
    const std::size_t src = ordered[r];
    const Label label = *pool.label_state(src).label;
    for (long long c = 0; c < per_source; ++c) {
      std::size_t best = m;
      for (std::size_t j = 0; j < m; ++j) {
        if (claimed[j]) continue;
        if (best == m) {
          best = j;
          continue;
        }
        const double dj = dist[r * m + j], db = dist[r * m + best];
        if (dj < db || (dj == db && corpus[unlabeled[j]].id < corpus[unlabeled[best]].id)) best = j;
      }
      if (best == m) break;
      claimed[best] = true;
      out.push_back({corpus[src].id, corpus[unlabeled[best]].id, std::sqrt(dist[r * m + best]), label});
    }
  }
  for (const auto& a : out) pool.apply_pseudo_label(corpus.index_of(a.target_id), a.label, a.source_id);
  return out;
}

}  // namespace triage::pseudo
