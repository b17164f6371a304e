#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "triage/corpus.hpp"

namespace triage::synthetic {

// Generator for labeled issue corpora with planted structure: each class has
// its own vocabulary and leans on its own keyword list, writing style varies
// independently of the class, and a small fraction of oracle labels is flipped.
struct Options {
  std::size_t count = 5000;
  std::uint64_t seed = 1;
  double bug_fraction = 0.5;
  double label_noise = 0.02;    // probability an oracle label is flipped
  double keyword_leak = 0.10;   // probability a report also mentions the other class's keywords
};

Corpus generate(const Options& options);

// One JSON object per line with id, project, title, body, label.
std::string to_jsonl(const Corpus& corpus);

}  // namespace triage::synthetic
