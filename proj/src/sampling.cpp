#include "triage/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triage/error.hpp"
#include "triage/rng.hpp"

namespace triage::sampling {

using nlohmann::json;

double uncertainty(const ProbabilityPair& probs) {
  double h = 0.0;
  for (double p : {probs.p_bug, probs.p_nonbug})
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

void Bounds::widen(double value) {
  if (!min || value < *min) min = value;
  if (!max || value > *max) max = value;
}

void Bounds::widen(std::span<const double> batch) {
  for (double v : batch) widen(v);
}

double Bounds::normalize(double value) const {
  if (!initialized()) fail(ErrorCode::precondition_failed, "normalization bounds are not initialized");
  return sampling::normalize(value, *min, *max);
}

double normalize(double value, double min, double max) {
  if (!(max > min)) return 0.5;
  const double v = (value - min) / (max - min);
  return std::clamp(v, 0.0, 1.0);
}

namespace {

json bounds_json(const Bounds& b) {
  if (!b.initialized()) return nullptr;
  return json::array({*b.min, *b.max});
}

Bounds bounds_from_json(const json& j) {
  Bounds b;
  if (!j.is_null()) {
    b.min = j.at(0).get<double>();
    b.max = j.at(1).get<double>();
  }
  return b;
}

}  // namespace

json NormalizationBounds::to_json() const {
  return json{{"uncertainty", bounds_json(uncertainty)},
              {"readability", bounds_json(readability)},
              {"identifiability", bounds_json(identifiability)}};
}

NormalizationBounds NormalizationBounds::from_json(const json& j) {
  return NormalizationBounds{bounds_from_json(j.at("uncertainty")), bounds_from_json(j.at("readability")),
                             bounds_from_json(j.at("identifiability"))};
}

std::vector<ScoredReport> score_reports(const Corpus& corpus, std::span<const std::size_t> pool,
                                        const ModelBackend& backend, std::span<const text::EffortScores> effort,
                                        NormalizationBounds& bounds) {
  std::vector<std::string_view> texts;
  texts.reserve(pool.size());
  for (std::size_t i : pool) texts.push_back(corpus[i].model_text);
  const auto probs = backend.predict(texts);

  std::vector<ScoredReport> out(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const std::size_t i = pool[k];
    ScoredReport& s = out[k];
    s.index = i;
    s.id = corpus[i].id;
    s.probs = probs[k];
    s.has_words = effort[i].readability.has_value();
    s.score.uncertainty_raw = uncertainty(probs[k]);
    s.score.readability_raw = s.has_words ? *effort[i].readability : 0.0;
    s.score.identifiability_raw = effort[i].identifiability;
  }

  for (const auto& s : out) {
    bounds.uncertainty.widen(s.score.uncertainty_raw);
    if (s.has_words) {
      bounds.readability.widen(s.score.readability_raw);
      bounds.identifiability.widen(s.score.identifiability_raw);
    }
  }

  for (auto& s : out) {
    auto& c = s.score;
    c.uncertainty_norm = bounds.uncertainty.normalize(c.uncertainty_raw);
    if (s.has_words) {
      c.readability_norm = bounds.readability.normalize(c.readability_raw);
      c.identifiability_norm = bounds.identifiability.normalize(c.identifiability_raw);
    }
    c.aggregate = c.uncertainty_norm + c.readability_norm + c.identifiability_norm;
  }
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::effort_aware: return "effort-aware";
    case Strategy::uncertainty: return "uncertainty";
    case Strategy::random: return "random";
    case Strategy::confidence: return "confidence";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "effort-aware" || s == "effort_aware") return Strategy::effort_aware;
  if (s == "uncertainty") return Strategy::uncertainty;
  if (s == "random") return Strategy::random;
  if (s == "confidence") return Strategy::confidence;
  return std::nullopt;
}

Selection select_top_k(std::span<const ScoredReport> scored, long long k, Strategy strategy, std::uint64_t seed) {
  if (k < 1) fail(ErrorCode::validation, "k must be at least 1");
  Selection sel;
  const std::size_t want = static_cast<std::size_t>(k);
  sel.depleted = scored.size() < want;
  const std::size_t take = std::min(want, scored.size());

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_id = [&](std::size_t a, std::size_t b) { return scored[a].id < scored[b].id; };

  if (strategy == Strategy::random) {
    std::sort(order.begin(), order.end(), by_id);
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.below(order.size() - i);
      std::swap(order[i], order[j]);
    }
    order.resize(take);
    sel.picks = std::move(order);
    return sel;
  }

  auto key = [&](const ScoredReport& s) {
    switch (strategy) {
      case Strategy::effort_aware: return s.score.aggregate;
      case Strategy::uncertainty: return s.score.uncertainty_raw;
      case Strategy::confidence: return s.probs.confidence();
      case Strategy::random: break;
    }
    return 0.0;
  };
  auto better = [&](std::size_t a, std::size_t b) {
    const double ka = key(scored[a]), kb = key(scored[b]);
    if (ka != kb) return ka > kb;
    return scored[a].id < scored[b].id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
  order.resize(take);
  sel.picks = std::move(order);
  return sel;
}

}  // namespace triage::sampling
