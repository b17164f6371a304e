#include "triage/error.hpp"
#include "triage/kernels.hpp"

#include <cmath>

namespace triage::kernels {

Embedding hashed_embedding(std::string_view text, std::size_t dim) {
  Embedding out(dim, 0.0);
  const auto counts = features::hashed_counts(text, dim, features::kEmbeddingBasis);
  double norm = 0.0;
  for (std::size_t k = 0; k < counts.index.size(); ++k) {
    out[counts.index[k]] = counts.value[k];
    norm += counts.value[k] * counts.value[k];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : out) x /= norm;
  }
  return out;
}

double squared_distance(const Embedding& a, const Embedding& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d += diff * diff;
  }
  return d;
}

namespace serial {

std::vector<double> bug_probabilities(const features::LogisticModel& model, std::span<const std::string_view> texts) {
  std::vector<double> out;
  out.reserve(texts.size());
  for (auto t : texts) out.push_back(model.probability_bug(t));
  return out;
}

std::vector<Embedding> hashed_embeddings(std::span<const std::string_view> texts, std::size_t dim) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (auto t : texts) out.push_back(hashed_embedding(t, dim));
  return out;
}

std::vector<double> squared_distances(std::span<const Embedding> sources, std::span<const Embedding> candidates) {
  std::vector<double> out;
  out.reserve(sources.size() * candidates.size());
  for (const auto& s : sources) {
    for (const auto& c : candidates) {
      if (s.size() != c.size()) fail(ErrorCode::validation, "embedding dimension mismatch");
      out.push_back(squared_distance(s, c));
    }
  }
  return out;
}

std::vector<text::EffortScores> effort_scores(std::span<const std::string_view> raw_texts) {
  std::vector<text::EffortScores> out;
  out.reserve(raw_texts.size());
  for (auto t : raw_texts) out.push_back(text::effort_scores(t));
  return out;
}

}  // namespace serial
}  // namespace triage::kernels
