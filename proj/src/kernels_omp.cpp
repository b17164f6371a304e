#include <omp.h>

#include "triage/error.hpp"
#include "triage/kernels.hpp"

namespace triage::kernels {

int max_threads() { return omp_get_max_threads(); }

std::vector<double> bug_probabilities(const features::LogisticModel& model, std::span<const std::string_view> texts) {
  std::vector<double> out(texts.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = model.probability_bug(texts[i]);
  return out;
}

std::vector<Embedding> hashed_embeddings(std::span<const std::string_view> texts, std::size_t dim) {
  std::vector<Embedding> out(texts.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = hashed_embedding(texts[i], dim);
  return out;
}

std::vector<double> squared_distances(std::span<const Embedding> sources, std::span<const Embedding> candidates) {
  if (!sources.empty()) {
    const std::size_t dim = sources.front().size();
    for (const auto& e : sources)
      if (e.size() != dim) fail(ErrorCode::validation, "embedding dimension mismatch");
    for (const auto& e : candidates)
      if (e.size() != dim) fail(ErrorCode::validation, "embedding dimension mismatch");
  }
  const std::size_t m = candidates.size();
  std::vector<double> out(sources.size() * m);
  const std::ptrdiff_t cells = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const std::size_t i = static_cast<std::size_t>(c) / m;
    const std::size_t j = static_cast<std::size_t>(c) % m;
    out[c] = squared_distance(sources[i], candidates[j]);
  }
  return out;
}

std::vector<text::EffortScores> effort_scores(std::span<const std::string_view> raw_texts) {
  std::vector<text::EffortScores> out(raw_texts.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(raw_texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = text::effort_scores(raw_texts[i]);
  return out;
}

}  // namespace triage::kernels
