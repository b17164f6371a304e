#include "triage/builtin_backend.hpp"

#include <algorithm>
#include <cmath>

#include "triage/error.hpp"
#include "triage/kernels.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

std::string_view to_string(UpdateMode mode) { return mode == UpdateMode::cold ? "cold" : "warm"; }

ProbabilityPair ModelBackend::predict_one(std::string_view text) const {
  const std::string_view texts[] = {text};
  return predict(texts).front();
}

Embedding ModelBackend::embed_one(std::string_view text) const {
  const std::string_view texts[] = {text};
  return embed(texts).front();
}

namespace {

// Weight vector stored as scale * v so the L2 shrink is O(1) per step.
struct ScaledWeights {
  std::vector<double> v;
  double scale = 1.0;

  double dot(const features::SparseVector& x) const {
    double z = 0.0;
    for (std::size_t k = 0; k < x.index.size(); ++k) z += v[x.index[k]] * x.value[k];
    return z * scale;
  }
  void fold() {
    for (double& w : v) w *= scale;
    scale = 1.0;
  }
};

}  // namespace

UpdateReport BuiltinBackend::update(std::span<const TrainingExample> examples, UpdateMode mode, std::uint64_t seed) {
  if (examples.empty()) {
    if (mode == UpdateMode::cold) fail(ErrorCode::validation, "cold update needs at least one example");
    return UpdateReport{0, 0, 0.0, version_};
  }
  if (mode == UpdateMode::cold) {
    bool bug = false, nonbug = false;
    for (const auto& e : examples) (e.label == Label::bug ? bug : nonbug) = true;
    if (!bug || !nonbug) fail(ErrorCode::validation, "cold update needs examples of both classes");
  }

  std::vector<features::SparseVector> rows;
  rows.reserve(examples.size());
  std::vector<double> df(features::kClassifierBuckets, 0.0);
  for (const auto& e : examples) {
    rows.push_back(features::hashed_counts(e.text, features::kClassifierBuckets, features::kClassifierBasis));
    for (auto b : rows.back().index) df[b] += 1.0;
  }

  features::LogisticModel next = mode == UpdateMode::cold ? features::LogisticModel{} : model_;
  const double n_docs = static_cast<double>(examples.size());
  for (std::size_t b = 0; b < features::kClassifierBuckets; ++b)
    next.idf[b] = std::log((1.0 + n_docs) / (1.0 + df[b])) + 1.0;
  for (auto& r : rows) next.to_tfidf(r);

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t n_val = 0;
  if (options_.validation_fraction > 0.0 && examples.size() >= 2) {
    Rng split(derive_seed(seed, "validation-split"));
    split.shuffle(order);
    n_val = static_cast<std::size_t>(std::floor(options_.validation_fraction * n_docs));
    if (n_val >= examples.size()) n_val = examples.size() - 1;
  }
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(train.begin(), train.end());

  ScaledWeights w{next.weights, 1.0};
  double bias = next.bias;
  const double lr = options_.learning_rate;
  const double shrink = 1.0 - lr * options_.l2;
  for (int epoch = 0; epoch < options_.epochs; ++epoch) {
    Rng rng(derive_seed(seed, "epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(train);
    for (std::size_t i : train) {
      const auto& x = rows[i];
      const double y = examples[i].label == Label::bug ? 1.0 : 0.0;
      const double g = features::sigmoid(w.dot(x) + bias) - y;
      w.scale *= shrink;
      const double step = lr * g / w.scale;
      for (std::size_t k = 0; k < x.index.size(); ++k) w.v[x.index[k]] -= step * x.value[k];
      bias -= lr * g;
      if (w.scale < 1e-6) w.fold();
    }
  }
  w.fold();
  next.weights = std::move(w.v);
  next.bias = bias;

  UpdateReport report;
  report.trained_on = train.size();
  report.validated_on = n_val;
  if (n_val > 0) {
    std::size_t correct = 0;
    for (std::size_t k = 0; k < n_val; ++k) {
      const std::size_t i = order[k];
      const Label predicted = ProbabilityPair::from_bug(features::sigmoid(next.logit(rows[i]))).argmax();
      if (predicted == examples[i].label) ++correct;
    }
    report.validation_accuracy = static_cast<double>(correct) / static_cast<double>(n_val);
  }
  model_ = std::move(next);
  report.version = ++version_;
  return report;
}

std::vector<ProbabilityPair> BuiltinBackend::predict(std::span<const std::string_view> texts) const {
  if (!trained()) fail(ErrorCode::precondition_failed, "builtin backend has not been trained");
  const auto p = kernels::bug_probabilities(model_, texts);
  std::vector<ProbabilityPair> out;
  out.reserve(p.size());
  for (double pb : p) out.push_back(ProbabilityPair::from_bug(pb));
  return out;
}

std::vector<Embedding> BuiltinBackend::embed(std::span<const std::string_view> texts) const {
  return kernels::hashed_embeddings(texts, features::kEmbeddingDim);
}

json BuiltinBackend::save_state() const {
  return json{{"kind", "builtin"},
              {"version", version_},
              {"bias", model_.bias},
              {"weights", model_.weights},
              {"idf", model_.idf},
              {"options",
               {{"learning_rate", options_.learning_rate},
                {"epochs", options_.epochs},
                {"l2", options_.l2},
                {"validation_fraction", options_.validation_fraction}}}};
}

void BuiltinBackend::load_state(const json& state) {
  try {
    if (state.at("kind").get<std::string>() != "builtin") fail(ErrorCode::corrupt, "state is not a builtin backend");
    features::LogisticModel m;
    m.bias = state.at("bias").get<double>();
    m.weights = state.at("weights").get<std::vector<double>>();
    m.idf = state.at("idf").get<std::vector<double>>();
    if (m.weights.size() != features::kClassifierBuckets || m.idf.size() != features::kClassifierBuckets)
      fail(ErrorCode::corrupt, "builtin backend state has wrong feature width");
    const json& o = state.at("options");
    options_.learning_rate = o.at("learning_rate").get<double>();
    options_.epochs = o.at("epochs").get<int>();
    options_.l2 = o.at("l2").get<double>();
    options_.validation_fraction = o.at("validation_fraction").get<double>();
    model_ = std::move(m);
    version_ = state.at("version").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("builtin backend state: ") + e.what());
  }
}

}  // namespace triage
