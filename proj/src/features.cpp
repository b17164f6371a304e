#include "triage/features.hpp"

#include <algorithm>
#include <cmath>

#include "triage/rng.hpp"

namespace triage::features {

SparseVector hashed_counts(std::string_view text, std::size_t buckets, std::uint64_t basis) {
  std::vector<std::uint32_t> hits;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) hits.push_back(static_cast<std::uint32_t>(fnv1a(text.substr(start, i - start), basis) % buckets));
  }
  std::sort(hits.begin(), hits.end());
  SparseVector out;
  for (std::size_t k = 0; k < hits.size();) {
    std::size_t j = k;
    while (j < hits.size() && hits[j] == hits[k]) ++j;
    out.index.push_back(hits[k]);
    out.value.push_back(static_cast<double>(j - k));
    k = j;
  }
  return out;
}

void LogisticModel::to_tfidf(SparseVector& v) const {
  double norm = 0.0;
  for (std::size_t k = 0; k < v.index.size(); ++k) {
    v.value[k] *= idf[v.index[k]];
    norm += v.value[k] * v.value[k];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v.value) x /= norm;
  }
}

double LogisticModel::logit(const SparseVector& v) const {
  double z = bias;
  for (std::size_t k = 0; k < v.index.size(); ++k) z += weights[v.index[k]] * v.value[k];
  return z;
}

double LogisticModel::probability_bug(std::string_view text) const {
  SparseVector v = hashed_counts(text, kClassifierBuckets, kClassifierBasis);
  to_tfidf(v);
  return sigmoid(logit(v));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace triage::features
