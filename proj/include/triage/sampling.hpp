#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/model.hpp"
#include "triage/textmetrics.hpp"

namespace triage::sampling {

// Shannon entropy of the class distribution, in bits; 0 log 0 := 0.
double uncertainty(const ProbabilityPair& probs);

// Running extremes of one metric. Bounds only ever widen.
struct Bounds {
  std::optional<double> min;
  std::optional<double> max;

  bool initialized() const { return min.has_value(); }
  void widen(double value);
  void widen(std::span<const double> batch);
  // Throws Error{precondition_failed} when uninitialized.
  double normalize(double value) const;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

// (value - min) / (max - min) clamped to [0, 1]; 0.5 when min == max.
double normalize(double value, double min, double max);

struct NormalizationBounds {
  Bounds uncertainty;
  Bounds readability;
  Bounds identifiability;

  nlohmann::json to_json() const;
  static NormalizationBounds from_json(const nlohmann::json& j);

  friend bool operator==(const NormalizationBounds&, const NormalizationBounds&) = default;
};

struct ScoreComponents {
  double uncertainty_raw = 0.0;
  double readability_raw = 0.0;  // 0 for zero-word reports
  double identifiability_raw = 0.0;
  double uncertainty_norm = 0.0;
  double readability_norm = 0.0;
  double identifiability_norm = 0.0;
  double aggregate = 0.0;
};

struct ScoredReport {
  std::size_t index = 0;  // position in the corpus
  std::string id;
  ProbabilityPair probs;
  bool has_words = true;
  ScoreComponents score;
};

// Quality-effort score of every report in `pool`: uncertainty from the backend,
// readability and identifiability from the precomputed effort table (indexed by
// corpus position). The batch widens `bounds` before anything is normalized, so
// the result does not depend on pool order. Zero-word reports get 0 for both
// effort components and do not feed the effort bounds.
std::vector<ScoredReport> score_reports(const Corpus& corpus, std::span<const std::size_t> pool,
                                        const ModelBackend& backend, std::span<const text::EffortScores> effort,
                                        NormalizationBounds& bounds);

enum class Strategy { effort_aware, uncertainty, random, confidence };

std::string_view to_string(Strategy s);
// Accepts "effort-aware"/"effort_aware", "uncertainty", "random", "confidence".
std::optional<Strategy> parse_strategy(std::string_view s);

struct Selection {
  std::vector<std::size_t> picks;  // positions in the scored span, in rank order
  bool depleted = false;           // pool held fewer than k reports
};

// effort_aware: highest aggregate; uncertainty: highest entropy; confidence:
// highest max-probability; random: seeded draws without replacement. Ties go
// to the lower id. Throws Error{validation} when k < 1.
Selection select_top_k(std::span<const ScoredReport> scored, long long k, Strategy strategy, std::uint64_t seed);

}  // namespace triage::sampling
