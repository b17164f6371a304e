#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "triage/features.hpp"
#include "triage/model.hpp"
#include "triage/textmetrics.hpp"

// Data-parallel batch kernels. Each output slot depends only on its own input,
// so results are bit-identical to the serial reference in kernels::serial
// regardless of thread count.
namespace triage::kernels {

std::vector<double> bug_probabilities(const features::LogisticModel& model, std::span<const std::string_view> texts);

// L2-normalized hashed term-frequency vectors; zero vector for empty text.
std::vector<Embedding> hashed_embeddings(std::span<const std::string_view> texts, std::size_t dim);

// Row-major |sources| x |candidates| matrix of squared Euclidean distances.
// Throws Error{validation} on a dimension mismatch.
std::vector<double> squared_distances(std::span<const Embedding> sources, std::span<const Embedding> candidates);

std::vector<text::EffortScores> effort_scores(std::span<const std::string_view> raw_texts);

int max_threads();

namespace serial {

std::vector<double> bug_probabilities(const features::LogisticModel& model, std::span<const std::string_view> texts);
std::vector<Embedding> hashed_embeddings(std::span<const std::string_view> texts, std::size_t dim);
std::vector<double> squared_distances(std::span<const Embedding> sources, std::span<const Embedding> candidates);
std::vector<text::EffortScores> effort_scores(std::span<const std::string_view> raw_texts);

}  // namespace serial

// Single-item building blocks shared by both paths.
Embedding hashed_embedding(std::string_view text, std::size_t dim);
double squared_distance(const Embedding& a, const Embedding& b);

}  // namespace triage::kernels
