#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "triage/lexicon.hpp"

// Effort objectives computed on a report's raw text: Flesch reading ease and
// identifiability (share of words found in the bug-relevant/irrelevant term lists).
namespace triage::text {

struct TextCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;

  friend bool operator==(const TextCounts&, const TextCounts&) = default;
};

struct TermCounts {
  std::size_t relevant = 0;
  std::size_t irrelevant = 0;

  friend bool operator==(const TermCounts&, const TermCounts&) = default;
};

struct Identifiability {
  double value = 0.0;
  TermCounts terms;
  std::size_t words = 0;
};

class TermLists {
 public:
  TermLists(lexicon::WordSet relevant, lexicon::WordSet irrelevant)
      : relevant_(std::move(relevant)), irrelevant_(std::move(irrelevant)) {}

  static const TermLists& defaults();

  bool is_relevant(std::string_view token) const { return relevant_.find(token) != relevant_.end(); }
  bool is_irrelevant(std::string_view token) const { return irrelevant_.find(token) != irrelevant_.end(); }

 private:
  lexicon::WordSet relevant_;
  lexicon::WordSet irrelevant_;
};

// Vowel-group heuristic: runs of {a,e,i,o,u,y} in the letters of the token,
// minus one for a silent trailing 'e' (not consonant+"le"), never below 1.
std::size_t syllables_of_word(std::string_view word);

// Words are whitespace-delimited tokens holding at least one ASCII letter or
// digit. A sentence ends at '.', '!' or '?' followed by whitespace or end of
// text, or at a blank line; runs of terminators count once.
TextCounts count_text(std::string_view raw_text);

// 206.83 - 1.015 (w / s_e) - 84.6 (s_y / w). Throws Error{degenerate} when w == 0.
double flesch_score(const TextCounts& counts);

// (T_r + T_i) / w with exact-token matching after lowercasing and stripping
// surrounding non-letters. Zero when the text has no words.
Identifiability identifiability_score(std::string_view raw_text,
                                      const TermLists& terms = TermLists::defaults());

// Raw effort components of one report. readability is empty for zero-word text.
struct EffortScores {
  TextCounts counts;
  std::optional<double> readability;
  double identifiability = 0.0;
  TermCounts terms;
};

EffortScores effort_scores(std::string_view raw_text, const TermLists& terms = TermLists::defaults());

}  // namespace triage::text
