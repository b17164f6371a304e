#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace triage::features {

inline constexpr std::size_t kClassifierBuckets = 4096;
inline constexpr std::size_t kEmbeddingDim = 256;

// Hash bases for the two feature spaces. Changing either invalidates saved models.
inline constexpr std::uint64_t kClassifierBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kEmbeddingBasis = 0x84222325cbf29ce4ULL;

struct SparseVector {
  std::vector<std::uint32_t> index;  // ascending, unique
  std::vector<double> value;
};

// Term counts of the space-separated tokens of text, hashed into `buckets`.
SparseVector hashed_counts(std::string_view text, std::size_t buckets, std::uint64_t basis);

// Logistic regression over L2-normalized TF-IDF of hashed counts.
struct LogisticModel {
  std::vector<double> idf;      // kClassifierBuckets
  std::vector<double> weights;  // kClassifierBuckets
  double bias = 0.0;

  LogisticModel() : idf(kClassifierBuckets, 1.0), weights(kClassifierBuckets, 0.0) {}

  // In-place tf -> normalized tf-idf.
  void to_tfidf(SparseVector& counts) const;
  double logit(const SparseVector& tfidf) const;
  double probability_bug(std::string_view text) const;
};

double sigmoid(double z);

}  // namespace triage::features
