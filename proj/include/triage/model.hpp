#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"

namespace triage {

struct ProbabilityPair {
  double p_bug = 0.5;
  double p_nonbug = 0.5;

  static ProbabilityPair from_bug(double p) { return {p, 1.0 - p}; }
  // Ties go to bug.
  Label argmax() const { return p_bug >= p_nonbug ? Label::bug : Label::nonbug; }
  double confidence() const { return p_bug > p_nonbug ? p_bug : p_nonbug; }
};

using Embedding = std::vector<double>;

enum class UpdateMode { cold, warm };

std::string_view to_string(UpdateMode mode);

struct TrainingExample {
  std::string report_id;
  std::string text;  // model_text
  Label label;
  LabelKind provenance = LabelKind::human;
};

struct UpdateReport {
  std::size_t trained_on = 0;
  std::size_t validated_on = 0;
  double validation_accuracy = 0.0;  // meaningful only when validated_on > 0
  std::uint64_t version = 0;
};

// Behavioral contract every classifier backend satisfies. predict and embed are
// deterministic between updates and safe to call concurrently on a quiescent
// backend; update needs exclusive access.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string_view kind() const = 0;
  virtual UpdateReport update(std::span<const TrainingExample> examples, UpdateMode mode, std::uint64_t seed) = 0;
  virtual std::vector<ProbabilityPair> predict(std::span<const std::string_view> texts) const = 0;
  virtual std::vector<Embedding> embed(std::span<const std::string_view> texts) const = 0;
  virtual std::size_t embedding_dim() const = 0;
  virtual std::uint64_t version() const = 0;
  virtual bool trained() const = 0;

  virtual nlohmann::json save_state() const = 0;
  virtual void load_state(const nlohmann::json& state) = 0;

  ProbabilityPair predict_one(std::string_view text) const;
  Embedding embed_one(std::string_view text) const;
};

}  // namespace triage
