#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/model.hpp"

namespace triage::pseudo {

struct PseudoAssignment {
  std::string source_id;  // human-labeled report
  std::string target_id;  // formerly unlabeled report
  double distance = 0.0;  // Euclidean, in the backend's embedding space
  Label label = Label::bug;

  friend bool operator==(const PseudoAssignment&, const PseudoAssignment&) = default;
};

struct Nearest {
  std::size_t position = 0;  // index into the candidate span
  double distance = 0.0;
};

// Candidate closest to `source` in Euclidean distance; ties go to the lower id.
// Empty candidate set yields no match. Throws Error{validation} on a dimension
// mismatch or when ids and candidates differ in length.
std::optional<Nearest> nearest_unlabeled(const Embedding& source, std::span<const Embedding> candidates,
                                         std::span<const std::string> candidate_ids);

// Each newly human-labeled source (ascending id) claims its `per_source` nearest
// still-unclaimed reports of D_u, which are pseudo-labeled with the source's
// label and move into D_l. Embeddings come from `backend` as it stands now.
// Returns min(per_source * |sources|, |D_u|) assignments in claim order.
std::vector<PseudoAssignment> pseudo_label_batch(std::span<const std::size_t> sources, Pool& pool,
                                                 const ModelBackend& backend, long long per_source);

}  // namespace triage::pseudo
