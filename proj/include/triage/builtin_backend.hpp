#pragma once

#include "triage/features.hpp"
#include "triage/model.hpp"

namespace triage {

struct BuiltinOptions {
  double learning_rate = 0.1;
  int epochs = 50;
  double l2 = 1e-4;
  // Share of each update's examples held out for validation accuracy logging.
  double validation_fraction = 0.0;
};

// Deterministic desk-scale backend: logistic regression over 4096 hashed TF-IDF
// buckets, trained by seeded SGD, and a separate 256-dim hashed TF embedding.
class BuiltinBackend final : public ModelBackend {
 public:
  explicit BuiltinBackend(BuiltinOptions options = {}) : options_(options) {}

  std::string_view kind() const override { return "builtin"; }

  // cold: IDF refit and weights reset to zero. warm: IDF refit, SGD continues
  // from the current weights. An empty warm update changes nothing.
  UpdateReport update(std::span<const TrainingExample> examples, UpdateMode mode, std::uint64_t seed) override;

  std::vector<ProbabilityPair> predict(std::span<const std::string_view> texts) const override;
  std::vector<Embedding> embed(std::span<const std::string_view> texts) const override;
  std::size_t embedding_dim() const override { return features::kEmbeddingDim; }
  std::uint64_t version() const override { return version_; }
  bool trained() const override { return version_ > 0; }

  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

  const features::LogisticModel& model() const { return model_; }
  const BuiltinOptions& options() const { return options_; }
  void set_validation_fraction(double f) { options_.validation_fraction = f; }

 private:
  BuiltinOptions options_;
  features::LogisticModel model_;
  std::uint64_t version_ = 0;
};

}  // namespace triage
